#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "spikelds/codec.hpp"
#include "spikelds/rational.hpp"

namespace spikelds {

// --- single-stage error statistics ----------------------------------------
//
// A floor-accumulating multiplier carries a remainder r_t in [0,1); its
// per-frame count error is eps_t = r_{t-1} - r_t. With well-mixed inputs the
// remainders are i.i.d. uniform, giving mean 0, variance 1/6, lag-1
// autocovariance -1/12 and nothing beyond lag 1.

// Autocovariance shape by lag: 1, -1/2, 0, 0, ...
double f_lag(std::int64_t dt);

struct ScalarErrorStats {
    double mean = 0.0;
    double variance = 1.0 / 6.0;
    double lag1 = -1.0 / 12.0;
    double lag2 = 0.0;
};

ScalarErrorStats scalar_error_stats();

// With integer spike counts the remainders live on the grid {0..b-1}/b, so a
// realized weight with reduced denominator b has exactly this variance
// ((b^2-1)/(6 b^2); -> 1/6 as b grows).
double discrete_error_variance(std::int32_t reduced_den);

// Row error of an n-term multiply-accumulate: Cov(eps_{t+dt}, eps_t) =
// (n/6) f(dt) I_m (independent per-entry remainders).
Eigen::MatrixXd matvec_error_cov(std::uint32_t n_terms, std::int64_t dt, std::uint32_t m);

// --- closed-loop residual theory -------------------------------------------

// S = sum_k A^k (A^k)^T. Uses the eigendecomposition closed form
// V ((V^T V)^{-1} o (1/(1 - l l^T))) V^T when A is safely diagonalizable
// (eigenvector condition number < 1e8), else falls back to the truncated sum
// with tail below tol. Requires rho(A) < 1.
Eigen::MatrixXd series_sum(const Eigen::MatrixXd& a, double tol = 1e-12);

// Steady-state covariance of the decoded-state residual, in spike counts:
// ((2m+n)/6) sym((I - A) S). `a` is the realized signed state matrix; m and n
// are the structural term counts per row pair (state and input).
Eigen::MatrixXd theory_cov_counts(const Eigen::MatrixXd& a, std::uint32_t m, std::uint32_t n);

// Same, for residuals normalized by 1/(eta p l).
Eigen::MatrixXd theory_cov(const Eigen::MatrixXd& a, std::uint32_t m, std::uint32_t n,
                           const CodecConfig& cfg);

// Cov(r_{t+dt}, r_t) = A^dt Cov(r).
Eigen::MatrixXd residual_autocov_theory(const Eigen::MatrixXd& a, const Eigen::MatrixXd& cov0,
                                        std::int64_t dt);

// Residuals decorrelate at rate rho(A): a length-T run carries about
// T log(1/rho(A)) independent covariance samples.
double effective_samples(const Eigen::MatrixXd& a, std::int64_t T);

// Second moment about zero (residuals have zero mean by construction; no mean
// subtraction). Columns of `series` are time points.
Eigen::MatrixXd sample_cov(const Eigen::MatrixXd& series);
Eigen::MatrixXd sample_autocov(const Eigen::MatrixXd& series, std::int64_t dt);

// Spectral radii of A and |A|; the doubled nonnegative system is stable iff
// rho(|A|) < 1 because its spectrum is exactly spectrum(A) u spectrum(|A|).
// spectrum_union_gap reports the numerically verified Hausdorff distance
// between the doubled spectrum and that union.
struct StabilityReport {
    double rho = 0.0;
    double rho_abs = 0.0;
    bool stable = false;     // rho(|A|) < 1
    double spectrum_union_gap = 0.0;
};

StabilityReport stability_check(const Eigen::MatrixXd& a);

// Input counts whose remainders under w = num/den cover the representable
// grid uniformly: i.i.d. uniform draws over a whole number of denominator
// periods. Requires a reduced denominator >= 2. With max_count > 0 the draw
// range is capped at the largest whole period not exceeding it.
std::vector<std::int64_t> gen_assumption_inputs(RationalWeight w, std::int64_t T,
                                                std::uint64_t seed, std::int64_t max_count = 0);

// First-order effect of a dynamics perturbation A -> A + P on the driven
// state: dx_t = sum_k k A^k P B u_{t-k}. Columns of `inputs` are u_t; returns
// dx_t per column.
Eigen::MatrixXd perturbation_estimate(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                      const Eigen::MatrixXd& p, const Eigen::MatrixXd& inputs);

} // namespace spikelds
