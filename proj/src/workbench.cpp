#include "spikelds/workbench.hpp"

#include "spikelds/simulator.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace spikelds {

namespace {

constexpr double kPi = 3.14159265358979323846;

double spectral_radius(const Eigen::MatrixXd& a)
{
    return a.size() == 0 ? 0.0 : a.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd gen_dynamics(std::uint32_t m, double rho0, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> mag(0.1, 1.0);
    std::bernoulli_distribution flip(0.5);
    // rejection loop: scaling a low-spectral-radius draw up to rho0 can push
    // an entry past the representable unit range; redraw until all entries fit
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Eigen::MatrixXd a(m, m);
        for (std::uint32_t i = 0; i < m; ++i)
            for (std::uint32_t j = 0; j < m; ++j)
                a(i, j) = mag(rng);
        for (std::uint32_t i = 0; i < m; ++i)
            for (std::uint32_t j = 0; j < m; ++j)
                if (i != j && flip(rng))
                    a(i, j) = -a(i, j);
        const double rho = spectral_radius(a);
        if (rho <= 0.0)
            continue;
        a *= rho0 / rho;
        if (a.cwiseAbs().maxCoeff() <= 1.0)
            return a;
    }
    throw std::runtime_error("could not draw unit-range dynamics at this spectral radius");
}

Eigen::MatrixXd gen_input_matrix(std::uint32_t m, std::uint32_t n, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> mag(0.1, 1.0);
    std::bernoulli_distribution flip(0.5);
    Eigen::MatrixXd b(m, n);
    for (std::uint32_t i = 0; i < m; ++i)
        for (std::uint32_t j = 0; j < n; ++j)
            b(i, j) = mag(rng);
    for (std::uint32_t i = 0; i < m; ++i)
        for (std::uint32_t j = 0; j < n; ++j)
            if (flip(rng))
                b(i, j) = -b(i, j);
    return b;
}

Eigen::MatrixXi gen_inputs(std::uint32_t n, std::int64_t t, std::int64_t amp,
                           std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> freq(0.02, 0.25);
    std::bernoulli_distribution flip(0.5);
    Eigen::MatrixXi u(n, t);
    for (std::uint32_t j = 0; j < n; ++j) {
        const double f = freq(rng);
        const double phase = flip(rng) ? kPi : 0.0;
        for (std::int64_t k = 0; k < t; ++k) {
            const double v = static_cast<double>(amp) *
                             std::sin(2.0 * kPi * f * static_cast<double>(k) + phase);
            u(j, static_cast<Eigen::Index>(k)) =
                static_cast<int>(round_half_away(v));
        }
    }
    return u;
}

// scale b so the largest reference state magnitude equals the codec amplitude
void normalize_input_matrix(const Eigen::MatrixXd& a, Eigen::MatrixXd& b,
                            const Eigen::MatrixXi& u, std::int64_t amp)
{
    const Eigen::MatrixXd x = simulate_reference(a, b, u);
    const double peak = x.cwiseAbs().maxCoeff();
    if (peak <= 0.0)
        throw std::runtime_error("reference trajectory is identically zero");
    b *= static_cast<double>(amp) / peak;
    // partially cancelling inputs can push a single entry past the unit
    // range even though the state stays inside the codec window; back off
    const double top = b.cwiseAbs().maxCoeff();
    if (top > 1.0)
        b /= top;
}

LdsSpec gen_from_dynamics(const Eigen::MatrixXd& a, const GenParams& params,
                          std::mt19937_64& rng)
{
    LdsSpec lds;
    lds.a = a;
    lds.b = gen_input_matrix(params.m, params.n, rng);
    lds.inputs = gen_inputs(params.n, params.T, params.codec.amplitude(), rng);
    normalize_input_matrix(lds.a, lds.b, lds.inputs, params.codec.amplitude());
    return lds;
}

SweepPoint eval_point(const LdsSpec& lds, const GenParams& params, bool cancellation,
                      bool parallel, double axis_value)
{
    const TransformedLds t = transform_lds(lds);
    const SpikingLds s = build_spiking_lds(t, params.codec, cancellation);
    std::vector<OverflowEvent> overflow;
    const Eigen::MatrixXi decoded = run_spiking(s, lds.inputs, parallel, &overflow);
    const Eigen::MatrixXd reference =
        simulate_reference(s.a_realized, s.b_realized, lds.inputs);
    const ResidualSeries res = residuals(decoded, reference, params.codec);
    const CovarianceComparison cmp =
        compare_covariance(res.normalized, s.a_realized, s.m, s.n, params.codec);

    SweepPoint pt;
    pt.axis_value = axis_value;
    pt.theory_mse = cmp.mse_theory;
    pt.sample_mse = cmp.mse_sample;
    pt.mse_rel = cmp.mse_rel;
    pt.frob_rel = cmp.frob_rel;
    pt.rho = spectral_radius(s.a_realized);
    pt.strength = recurrent_strength(s.a_realized);
    pt.n_eff = cmp.n_eff;
    pt.overflow_events = static_cast<std::int64_t>(overflow.size());
    return pt;
}

} // namespace

LdsSpec gen_random_lds(const GenParams& params)
{
    params.codec.validate();
    if (params.m < 1 || params.n < 1 || params.T < 1)
        throw std::invalid_argument("bad generator dimensions");
    std::mt19937_64 rng(params.seed);
    const Eigen::MatrixXd a = gen_dynamics(params.m, params.rho0, rng);
    return gen_from_dynamics(a, params, rng);
}

Eigen::MatrixXd simulate_reference(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                   const Eigen::MatrixXi& inputs)
{
    if (b.cols() != inputs.rows() || a.rows() != b.rows())
        throw std::invalid_argument("dimension mismatch");
    const Eigen::Index t = inputs.cols();
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(a.rows(), t);
    Eigen::VectorXd prev = Eigen::VectorXd::Zero(a.rows());
    for (Eigen::Index k = 0; k < t; ++k) {
        prev = a * prev + b * inputs.col(k).cast<double>();
        x.col(k) = prev;
    }
    return x;
}

Eigen::MatrixXi run_spiking(const SpikingLds& s, const Eigen::MatrixXi& inputs,
                            bool parallel, std::vector<OverflowEvent>* overflow)
{
    if (static_cast<std::uint32_t>(inputs.rows()) != s.n)
        throw std::invalid_argument("input channel count mismatch");
    const SpikeInput stim = encode_channels(inputs, s.codec);
    FrameWindows w;
    w.frame_len = s.codec.frame_len;
    w.n_frames = inputs.cols();
    w.offsets = {s.latency};
    const auto counts = run_frame_counts(s.graph, stim, w, parallel, overflow);
    return decode_counts(counts);
}

ResidualSeries residuals(const Eigen::MatrixXi& decoded, const Eigen::MatrixXd& reference,
                         const CodecConfig& cfg)
{
    if (decoded.rows() != reference.rows() || decoded.cols() != reference.cols())
        throw std::invalid_argument("decoded/reference shape mismatch");
    ResidualSeries r;
    r.raw = decoded.cast<double>() - reference;
    const double gain = cfg.eta * static_cast<double>(cfg.pop_size) *
                        static_cast<double>(cfg.frame_len);
    r.normalized = r.raw / gain;
    return r;
}

CovarianceComparison compare_covariance(const Eigen::MatrixXd& normalized_residuals,
                                        const Eigen::MatrixXd& a_realized, std::uint32_t m,
                                        std::uint32_t n, const CodecConfig& cfg)
{
    CovarianceComparison c;
    c.sample = sample_cov(normalized_residuals);
    c.theory = theory_cov(a_realized, m, n, cfg);
    c.frob_rel = (c.sample - c.theory).norm() / c.theory.norm();
    c.mse_sample = c.sample.trace();
    c.mse_theory = c.theory.trace();
    c.mse_rel = std::abs(c.mse_sample - c.mse_theory) / c.mse_theory;
    c.n_eff = effective_samples(a_realized,
                                static_cast<std::size_t>(normalized_residuals.cols()));
    return c;
}

double recurrent_strength(const Eigen::MatrixXd& a)
{
    const Eigen::MatrixXd s = series_sum(a);
    const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    const Eigen::MatrixXd m = (ident - a) * s;
    return 0.5 * (m + m.transpose()).trace();
}

Eigen::MatrixXd scale_to_strength(const Eigen::MatrixXd& a, double target)
{
    const double rho = spectral_radius(a);
    if (rho <= 0.0)
        throw std::invalid_argument("cannot rescale a nilpotent/zero matrix");
    const Eigen::MatrixXd unit = a / rho;
    auto strength_at = [&](double c) { return recurrent_strength(c * unit); };

    // the map c -> strength dips below the state dimension before rising
    // steeply toward rho -> 1; walk to the rising branch, then bisect
    const double hi = 0.9999;
    double lo = 0.0005;
    double best = strength_at(lo);
    for (double c = 0.02; c <= 0.98; c += 0.02) {
        const double v = strength_at(c);
        if (v < best) {
            best = v;
            lo = c;
        }
    }
    if (target < best - 1e-9)
        throw std::invalid_argument("target strength below the reachable minimum");
    if (target > strength_at(hi))
        throw std::invalid_argument("target strength too large for a stable system");
    double a_lo = lo, a_hi = hi;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a_lo + a_hi);
        if (strength_at(mid) < target)
            a_lo = mid;
        else
            a_hi = mid;
    }
    return 0.5 * (a_lo + a_hi) * unit;
}

std::vector<SweepPoint> run_sweep(SweepAxis axis, const std::vector<double>& grid,
                                  const GenParams& base, bool cancellation, bool parallel)
{
    base.codec.validate();
    std::vector<SweepPoint> out;
    out.reserve(grid.size());

    std::mt19937_64 base_rng(base.seed);
    const Eigen::MatrixXd base_a = gen_dynamics(base.m, base.rho0, base_rng);

    for (std::size_t i = 0; i < grid.size(); ++i) {
        GenParams params = base;
        // fresh input matrix and drive per point, same derivation each run
        std::mt19937_64 rng(base.seed + 0x9e3779b97f4a7c15ULL * (i + 1));
        Eigen::MatrixXd a = base_a;
        switch (axis) {
        case SweepAxis::InputDim:
            params.n = static_cast<std::uint32_t>(grid[i]);
            break;
        case SweepAxis::RecurrentStrength:
            a = scale_to_strength(base_a, grid[i]);
            break;
        case SweepAxis::FrameLen:
            params.codec.frame_len = static_cast<std::uint32_t>(grid[i]);
            params.codec.validate();
            break;
        }
        const LdsSpec lds = gen_from_dynamics(a, params, rng);
        out.push_back(eval_point(lds, params, cancellation, parallel, grid[i]));
    }
    return out;
}

} // namespace spikelds
