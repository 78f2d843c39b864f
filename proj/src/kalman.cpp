#include "spikelds/kalman.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace spikelds {

namespace {

double spectral_radius(const Eigen::MatrixXd& a)
{
    return a.size() == 0 ? 0.0 : a.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m)
{
    return 0.5 * (m + m.transpose());
}

// x_t = a x_{t-1} + b z_t with x_{-1} = 0, columns are time
Eigen::MatrixXd run_recursion(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const Eigen::MatrixXd& z)
{
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(a.rows(), z.cols());
    Eigen::VectorXd prev = Eigen::VectorXd::Zero(a.rows());
    for (Eigen::Index t = 0; t < z.cols(); ++t) {
        prev = a * prev + b * z.col(t);
        x.col(t) = prev;
    }
    return x;
}

} // namespace

void KfModel::validate() const
{
    const Eigen::Index m = phi.rows();
    const Eigen::Index n = h.rows();
    if (phi.cols() != m || q.rows() != m || q.cols() != m || h.cols() != m ||
        r.rows() != n || r.cols() != n || x0.size() != m || p0.rows() != m ||
        p0.cols() != m)
        throw std::invalid_argument("inconsistent filter model dimensions");
}

KfState kf_step(const KfModel& model, const KfState& prev, const Eigen::VectorXd& y)
{
    const Eigen::VectorXd x_pred = model.phi * prev.x;
    const Eigen::MatrixXd p_pred =
        symmetrize(model.phi * prev.p * model.phi.transpose() + model.q);
    const Eigen::MatrixXd s = symmetrize(model.h * p_pred * model.h.transpose() + model.r);
    const Eigen::MatrixXd k = s.ldlt().solve(model.h * p_pred.transpose()).transpose();
    KfState next;
    next.x = x_pred + k * (y - model.h * x_pred);
    const Eigen::MatrixXd ikh =
        Eigen::MatrixXd::Identity(p_pred.rows(), p_pred.cols()) - k * model.h;
    next.p = symmetrize(ikh * p_pred);
    return next;
}

Eigen::MatrixXd solve_dare(const KfModel& model, const DareOptions& opts)
{
    model.validate();
    Eigen::MatrixXd p = model.q; // prior covariance iterate
    for (std::int64_t it = 0; it < opts.max_iter; ++it) {
        const Eigen::MatrixXd s = symmetrize(model.h * p * model.h.transpose() + model.r);
        const Eigen::MatrixXd k = s.ldlt().solve(model.h * p.transpose()).transpose();
        const Eigen::MatrixXd post = symmetrize(
            (Eigen::MatrixXd::Identity(p.rows(), p.cols()) - k * model.h) * p);
        const Eigen::MatrixXd next =
            symmetrize(model.phi * post * model.phi.transpose() + model.q);
        const double delta = (next - p).norm();
        p = next;
        if (delta < opts.tol)
            return p;
    }
    throw std::runtime_error("steady-state covariance iteration did not converge");
}

SskfMatrices sskf_matrices(const KfModel& model, bool require_stable, const DareOptions& opts)
{
    SskfMatrices out;
    out.p_prior = solve_dare(model, opts);
    const Eigen::MatrixXd s =
        symmetrize(model.h * out.p_prior * model.h.transpose() + model.r);
    out.gain = s.ldlt().solve(model.h * out.p_prior.transpose()).transpose();
    out.a = (Eigen::MatrixXd::Identity(model.state_dim(), model.state_dim()) -
             out.gain * model.h) *
            model.phi;
    out.b = out.gain;
    if (require_stable && !(spectral_radius(out.a) < 1.0))
        throw std::domain_error("steady-state filter is not strictly stable; "
                                "strip marginal modes first");
    return out;
}

StrippedSskf strip_bias(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol)
{
    const Eigen::Index m = a.rows();
    if (m < 2 || a.cols() != m || b.rows() != m)
        throw std::invalid_argument("nothing to strip");
    for (Eigen::Index j = 0; j < m; ++j) {
        const double expect = j == m - 1 ? 1.0 : 0.0;
        if (std::abs(a(m - 1, j) - expect) > tol)
            throw std::invalid_argument("last state is not a constant bias mode");
    }
    if (b.row(m - 1).cwiseAbs().maxCoeff() > tol)
        throw std::invalid_argument("bias state must have zero gain");

    StrippedSskf s;
    s.a = a.topLeftCorner(m - 1, m - 1);
    s.b.resize(m - 1, b.cols() + 1);
    s.b << b.topRows(m - 1), a.topRightCorner(m - 1, 1);
    return s;
}

KfModel make_kinematic_model(const KinematicParams& params, std::uint64_t seed)
{
    KfModel model;
    model.phi.setZero(3, 3);
    model.phi(0, 0) = 1.0;
    model.phi(0, 1) = params.dt;
    model.phi(1, 1) = params.vel_decay;
    model.phi(2, 2) = 1.0; // constant bias
    model.q.setZero(3, 3);
    model.q(1, 1) = params.q_vel;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    model.h.resize(params.n_meas, 3);
    for (std::uint32_t i = 0; i < params.n_meas; ++i) {
        model.h(i, 0) = gauss(rng);
        model.h(i, 1) = gauss(rng);
        model.h(i, 2) = params.h_bias_scale * gauss(rng);
    }
    model.r = params.meas_noise_var *
              Eigen::MatrixXd::Identity(params.n_meas, params.n_meas);
    model.x0.setZero(3);
    model.x0(2) = 1.0;
    model.p0 = model.q;
    model.validate();
    return model;
}

TrialSet simulate_trials(const KfModel& model, std::uint32_t n_trials, std::int64_t T,
                         std::uint64_t seed)
{
    model.validate();
    // process noise enters through the velocity component only
    Eigen::Index vel = 1;
    const double sq = std::sqrt(model.q(vel, vel));
    const Eigen::MatrixXd meas_chol = model.r.llt().matrixL();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    TrialSet out;
    for (std::uint32_t trial = 0; trial < n_trials; ++trial) {
        Eigen::MatrixXd x(model.state_dim(), T);
        Eigen::MatrixXd y(model.meas_dim(), T);
        Eigen::VectorXd state = model.x0;
        for (std::int64_t t = 0; t < T; ++t) {
            state = model.phi * state;
            state(vel) += sq * gauss(rng);
            x.col(t) = state;
            Eigen::VectorXd noise(model.meas_dim());
            for (Eigen::Index i = 0; i < noise.size(); ++i)
                noise(i) = gauss(rng);
            y.col(t) = model.h * state + meas_chol * noise;
        }
        out.states.push_back(std::move(x));
        out.meas.push_back(std::move(y));
    }
    return out;
}

KfModel fit_kf_model(const TrialSet& data, const KinematicParams& params)
{
    if (data.states.empty() || data.states.size() != data.meas.size())
        throw std::invalid_argument("empty or inconsistent trial set");

    // velocity forgetting factor: scalar least squares v_t ~ phi v_{t-1}
    double num = 0.0, den = 0.0;
    for (const auto& x : data.states)
        for (Eigen::Index t = 1; t < x.cols(); ++t) {
            num += x(1, t) * x(1, t - 1);
            den += x(1, t - 1) * x(1, t - 1);
        }
    if (den <= 0.0)
        throw std::invalid_argument("degenerate velocity trajectory");
    const double phi_v = num / den;

    double rss = 0.0;
    std::int64_t cnt = 0;
    for (const auto& x : data.states)
        for (Eigen::Index t = 1; t < x.cols(); ++t) {
            const double e = x(1, t) - phi_v * x(1, t - 1);
            rss += e * e;
            ++cnt;
        }
    const double q_vel = rss / static_cast<double>(cnt);

    // full linear readout: Y = H X, H = Y X^T (X X^T)^{-1}
    const Eigen::Index m = data.states.front().rows();
    const Eigen::Index n = data.meas.front().rows();
    Eigen::MatrixXd xxt = Eigen::MatrixXd::Zero(m, m);
    Eigen::MatrixXd yxt = Eigen::MatrixXd::Zero(n, m);
    for (std::size_t k = 0; k < data.states.size(); ++k) {
        xxt += data.states[k] * data.states[k].transpose();
        yxt += data.meas[k] * data.states[k].transpose();
    }
    const Eigen::MatrixXd h = xxt.ldlt().solve(yxt.transpose()).transpose();

    Eigen::MatrixXd rsum = Eigen::MatrixXd::Zero(n, n);
    std::int64_t rcnt = 0;
    for (std::size_t k = 0; k < data.states.size(); ++k) {
        const Eigen::MatrixXd e = data.meas[k] - h * data.states[k];
        rsum += e * e.transpose();
        rcnt += e.cols();
    }

    KinematicParams fitted = params;
    fitted.vel_decay = phi_v;
    fitted.q_vel = q_vel;
    KfModel model = make_kinematic_model(fitted, 0);
    model.h = h;
    model.r = symmetrize(rsum / static_cast<double>(rcnt));
    model.validate();
    return model;
}

SpikingSskfResult spiking_sskf(const KfModel& model, const Eigen::MatrixXd& measurements,
                               const CodecConfig& cfg, bool cancellation, bool parallel)
{
    cfg.validate();
    model.validate();
    if (measurements.rows() != model.meas_dim())
        throw std::invalid_argument("measurement dimension mismatch");
    const Eigen::Index n = measurements.rows();
    const Eigen::Index t = measurements.cols();
    const double amp = static_cast<double>(cfg.amplitude());

    // collapse the filter, fold the bias into a constant input
    const SskfMatrices full = sskf_matrices(model, /*require_stable=*/false);
    const StrippedSskf core = strip_bias(full.a, full.b);
    if (!(spectral_radius(core.a) < 1.0))
        throw std::domain_error("stripped filter core is not stable");

    SpikingSskfResult out;

    // float filter on raw measurements (bias folded as constant-one input)
    Eigen::MatrixXd z(n + 1, t);
    z.topRows(n) = measurements;
    z.bottomRows(1).setOnes();
    out.plain = run_recursion(core.a, core.b, z);

    // scale measurements and states into codec range
    Eigen::VectorXd meas_scale(n + 1);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double peak = measurements.row(j).cwiseAbs().maxCoeff();
        meas_scale(j) = peak > 0.0 ? amp / peak : 1.0;
    }
    meas_scale(n) = amp; // constant-one channel encodes as a full-amplitude count
    const double state_peak = out.plain.cwiseAbs().maxCoeff();
    if (state_peak <= 0.0)
        throw std::runtime_error("filter output is identically zero");
    out.state_scale = amp / state_peak;

    Eigen::MatrixXd b_scaled = core.b;
    for (Eigen::Index j = 0; j < n + 1; ++j)
        b_scaled.col(j) *= out.state_scale / meas_scale(j);
    if ((core.a.cwiseAbs().array() > 1.0).any() ||
        (b_scaled.cwiseAbs().array() > 1.0).any())
        throw std::domain_error("scaled filter weights exceed unit range");

    Eigen::MatrixXi u(n + 1, t);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < t; ++k)
            u(j, k) = static_cast<int>(round_half_away(measurements(j, k) * meas_scale(j)));
    u.row(n).setConstant(static_cast<int>(amp));

    LdsSpec lds;
    lds.a = core.a;
    lds.b = b_scaled;
    lds.inputs = u;
    const SpikingLds s = build_spiking_lds(transform_lds(lds), cfg, cancellation);

    std::vector<OverflowEvent> overflow;
    const Eigen::MatrixXi decoded = run_spiking(s, u, parallel, &overflow);
    out.overflow_events = static_cast<std::int64_t>(overflow.size());

    const Eigen::MatrixXd reference = simulate_reference(s.a_realized, s.b_realized, u);
    out.res = residuals(decoded, reference, cfg);
    out.reference = reference / out.state_scale;
    out.estimates = decoded.cast<double>() / out.state_scale;

    out.pearson.resize(static_cast<std::size_t>(out.estimates.rows()));
    out.pearson_min = 1.0;
    for (Eigen::Index i = 0; i < out.estimates.rows(); ++i) {
        const double r =
            pearson(out.estimates.row(i).transpose(), out.plain.row(i).transpose());
        out.pearson[static_cast<std::size_t>(i)] = r;
        out.pearson_min = std::min(out.pearson_min, r);
    }
    return out;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("need two equal-length series");
    const double ma = a.mean(), mb = b.mean();
    const Eigen::VectorXd da = a.array() - ma;
    const Eigen::VectorXd db = b.array() - mb;
    const double denom = da.norm() * db.norm();
    if (denom <= 0.0)
        throw std::invalid_argument("constant series has no correlation");
    return da.dot(db) / denom;
}

} // namespace spikelds
