#include "spikelds/analytics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace spikelds {

namespace {

double spectral_radius(const Eigen::MatrixXd& a)
{
    return a.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m)
{
    return 0.5 * (m + m.transpose());
}

} // namespace

double f_lag(std::int64_t dt)
{
    const std::int64_t a = dt < 0 ? -dt : dt;
    if (a == 0)
        return 1.0;
    if (a == 1)
        return -0.5;
    return 0.0;
}

ScalarErrorStats scalar_error_stats()
{
    return {};
}

double discrete_error_variance(std::int32_t reduced_den)
{
    if (reduced_den < 1)
        throw std::invalid_argument("denominator must be positive");
    const double b = static_cast<double>(reduced_den);
    return (b * b - 1.0) / (6.0 * b * b);
}

Eigen::MatrixXd matvec_error_cov(std::uint32_t n_terms, std::int64_t dt, std::uint32_t m)
{
    const double scale = static_cast<double>(n_terms) / 6.0 * f_lag(dt);
    return scale * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m),
                                             static_cast<Eigen::Index>(m));
}

Eigen::MatrixXd series_sum(const Eigen::MatrixXd& a, double tol)
{
    if (a.rows() != a.cols())
        throw std::invalid_argument("series_sum needs a square matrix");
    const Eigen::Index m = a.rows();
    const double rho = spectral_radius(a);
    if (!(rho < 1.0))
        throw std::domain_error("series diverges: spectral radius >= 1");
    if (m == 0)
        return Eigen::MatrixXd(0, 0);

    Eigen::EigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() == Eigen::Success) {
        const Eigen::MatrixXcd v = es.eigenvectors();
        const Eigen::VectorXcd lam = es.eigenvalues();
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(v);
        const double smin = svd.singularValues().minCoeff();
        const double smax = svd.singularValues().maxCoeff();
        if (smin > 0.0 && smax / smin < 1e8) {
            // sum_k A^k (A^k)^T = V ((V^T V)^{-1} o C) V^T with
            // C_ij = 1 / (1 - lam_i lam_j); plain transpose, not adjoint
            const Eigen::MatrixXcd g = (v.transpose() * v).inverse();
            Eigen::MatrixXcd c(m, m);
            for (Eigen::Index i = 0; i < m; ++i)
                for (Eigen::Index j = 0; j < m; ++j)
                    c(i, j) = 1.0 / (std::complex<double>(1.0, 0.0) - lam(i) * lam(j));
            const Eigen::MatrixXcd s = v * g.cwiseProduct(c) * v.transpose();
            return symmetrize(s.real());
        }
    }

    // defective or ill-conditioned eigenbasis: truncated sum with a geometric
    // tail bound
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(m, m);
    Eigen::MatrixXd p = a;
    const double q = rho * rho;
    for (std::size_t k = 1; k < 1000000; ++k) {
        const Eigen::MatrixXd term = p * p.transpose();
        s += term;
        const double tail = term.norm() * q / (1.0 - q);
        if (tail < tol)
            return symmetrize(s);
        p = p * a;
    }
    throw std::runtime_error("series_sum did not converge");
}

Eigen::MatrixXd theory_cov_counts(const Eigen::MatrixXd& a, std::uint32_t m, std::uint32_t n)
{
    if (static_cast<std::size_t>(a.rows()) != m)
        throw std::invalid_argument("dynamics matrix does not match state dim");
    const Eigen::MatrixXd s = series_sum(a);
    const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    const double channels = static_cast<double>(2 * m + n);
    return channels / 6.0 * symmetrize((ident - a) * s);
}

Eigen::MatrixXd theory_cov(const Eigen::MatrixXd& a, std::uint32_t m, std::uint32_t n,
                           const CodecConfig& cfg)
{
    const double gain = cfg.eta * static_cast<double>(cfg.pop_size) *
                        static_cast<double>(cfg.frame_len);
    return theory_cov_counts(a, m, n) / (gain * gain);
}

Eigen::MatrixXd residual_autocov_theory(const Eigen::MatrixXd& a, const Eigen::MatrixXd& cov,
                                        std::int64_t dt)
{
    if (dt < 0)
        throw std::invalid_argument("lag must be nonnegative");
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    for (std::int64_t k = 0; k < dt; ++k)
        p = a * p;
    return p * cov;
}

double effective_samples(const Eigen::MatrixXd& a, std::int64_t n_frames)
{
    const double rho = spectral_radius(a);
    const double t = static_cast<double>(n_frames);
    if (rho <= 0.0)
        return t;
    if (rho >= 1.0)
        return 0.0;
    return std::min(t, t * std::log(1.0 / rho));
}

Eigen::MatrixXd sample_cov(const Eigen::MatrixXd& series)
{
    if (series.cols() < 1)
        throw std::invalid_argument("empty series");
    return series * series.transpose() / static_cast<double>(series.cols());
}

Eigen::MatrixXd sample_autocov(const Eigen::MatrixXd& series, std::int64_t dt)
{
    const Eigen::Index t = series.cols();
    if (dt < 0 || dt >= t)
        throw std::invalid_argument("lag out of range");
    const Eigen::Index n = t - dt;
    return series.rightCols(n) * series.leftCols(n).transpose() / static_cast<double>(n);
}

StabilityReport stability_check(const Eigen::MatrixXd& a)
{
    StabilityReport r;
    r.rho = spectral_radius(a);
    const Eigen::MatrixXd abs_a = a.cwiseAbs();
    r.rho_abs = spectral_radius(abs_a);
    r.stable = r.rho_abs < 1.0;

    // the split-and-mirror system's spectrum should equal spectrum(A) union
    // spectrum(|A|); report the Hausdorff gap between the two sets
    const Eigen::Index m = a.rows();
    Eigen::MatrixXd pos = a.cwiseMax(0.0);
    Eigen::MatrixXd neg = (-a).cwiseMax(0.0);
    Eigen::MatrixXd tilde(2 * m, 2 * m);
    tilde << pos, neg, neg, pos;
    const Eigen::VectorXcd et = tilde.eigenvalues();
    Eigen::VectorXcd eu(2 * m);
    eu << a.eigenvalues(), abs_a.eigenvalues();

    auto one_sided = [](const Eigen::VectorXcd& from, const Eigen::VectorXcd& to) {
        double worst = 0.0;
        for (Eigen::Index i = 0; i < from.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < to.size(); ++j)
                best = std::min(best, std::abs(from(i) - to(j)));
            worst = std::max(worst, best);
        }
        return worst;
    };
    r.spectrum_union_gap = std::max(one_sided(et, eu), one_sided(eu, et));
    return r;
}

std::vector<std::int64_t> gen_assumption_inputs(RationalWeight w, std::int64_t n_frames,
                                                std::uint64_t seed, std::int64_t max_count)
{
    const RationalWeight red = w.reduced();
    if (red.den < 2)
        throw std::invalid_argument(
            "weight reduces to an integer: the remainder grid is degenerate");
    std::int64_t period = red.den;
    std::int64_t span;
    if (max_count > 0) {
        const std::int64_t reps = (max_count + 1) / period;
        if (reps < 1)
            throw std::invalid_argument("max_count cannot fit one remainder period");
        span = reps * period;
    } else {
        span = 4 * period;
    }
    // uniform over whole periods of the remainder grid, so the realized
    // remainders are exactly uniform on {0,...,den-1}/den
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::int64_t> dist(0, span - 1);
    std::vector<std::int64_t> out(static_cast<std::size_t>(n_frames));
    for (auto& v : out)
        v = dist(rng);
    return out;
}

Eigen::MatrixXd perturbation_estimate(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                      const Eigen::MatrixXd& p, const Eigen::MatrixXd& inputs)
{
    const Eigen::Index m = a.rows();
    const Eigen::Index t = inputs.cols();
    if (p.rows() != m || p.cols() != m || b.rows() != m || b.cols() != inputs.rows())
        throw std::invalid_argument("dimension mismatch");

    // dx_t = sum_k k A^k P B u_{t-k}
    std::vector<Eigen::MatrixXd> kern(static_cast<std::size_t>(t));
    Eigen::MatrixXd ak = Eigen::MatrixXd::Identity(m, m);
    for (Eigen::Index k = 0; k < t; ++k) {
        kern[static_cast<std::size_t>(k)] = static_cast<double>(k) * ak * p * b;
        ak = a * ak;
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, t);
    for (Eigen::Index i = 0; i < t; ++i)
        for (Eigen::Index k = 0; k <= i; ++k)
            out.col(i) += kern[static_cast<std::size_t>(k)] * inputs.col(i - k);
    return out;
}

} // namespace spikelds
