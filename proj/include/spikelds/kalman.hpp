#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "spikelds/circuits.hpp"
#include "spikelds/workbench.hpp"

namespace spikelds {

// x_t = phi x_{t-1} + w,  w ~ N(0, q)
// y_t = h x_t + v,        v ~ N(0, r)
struct KfModel {
    Eigen::MatrixXd phi, q, h, r;
    Eigen::VectorXd x0;
    Eigen::MatrixXd p0;

    Eigen::Index state_dim() const { return phi.rows(); }
    Eigen::Index meas_dim() const { return h.rows(); }
    void validate() const;
};

struct KfState {
    Eigen::VectorXd x;
    Eigen::MatrixXd p;
};

// One predict+correct cycle; the covariance update is re-symmetrized to stop
// drift.
KfState kf_step(const KfModel& model, const KfState& prev, const Eigen::VectorXd& y);

struct DareOptions {
    double tol = 1e-12;
    std::int64_t max_iter = 1'000'000;
};

// Steady-state prior covariance: fixed point of the Riccati recursion by
// iteration. Detectable marginal modes with zero process noise (e.g. a
// constant bias component) converge too; true divergence is reported.
Eigen::MatrixXd solve_dare(const KfModel& model, const DareOptions& opts = {});

// The converged filter collapses to a time-invariant recursion
//   x_t = a x_{t-1} + b y_t,  a = (I - K H) phi,  b = K.
struct SskfMatrices {
    Eigen::MatrixXd a, b;
    Eigen::MatrixXd gain;    // K
    Eigen::MatrixXd p_prior; // steady P^-
};

// require_stable asserts rho(a) < 1; disable it for models carrying an exact
// marginal bias mode (strip the bias first, then check).
SskfMatrices sskf_matrices(const KfModel& model, bool require_stable = true,
                           const DareOptions& opts = {});

// A constant-bias state (last row of `a` = e_bias, zero gain) never changes;
// fold it into an extra constant-one input column so the dynamic core can be
// spiked with a strictly stable matrix:
//   a = [[a', c], [0, 1]]  ->  x'_t = a' x'_{t-1} + [b' c] (y_t, 1).
struct StrippedSskf {
    Eigen::MatrixXd a; // (m-1) x (m-1)
    Eigen::MatrixXd b; // (m-1) x (n+1); last column is the bias feed
};

StrippedSskf strip_bias(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol = 1e-9);

// --- kinematic demo model ---------------------------------------------------

// Position-velocity-bias state observed through a random linear readout, the
// shape used for cursor-trajectory decoding at 40 Hz.
struct KinematicParams {
    double dt = 0.025;
    double vel_decay = 0.97;      // velocity forgetting factor
    double q_vel = 4e-4;          // velocity process noise variance
    std::uint32_t n_meas = 6;
    double meas_noise_var = 0.25;
    double h_bias_scale = 0.3;    // readout weight scale for the bias state
};

KfModel make_kinematic_model(const KinematicParams& params, std::uint64_t seed);

struct TrialSet {
    std::vector<Eigen::MatrixXd> states; // per trial, state_dim x T
    std::vector<Eigen::MatrixXd> meas;   // per trial, meas_dim x T
};

TrialSet simulate_trials(const KfModel& model, std::uint32_t n_trials, std::int64_t T,
                         std::uint64_t seed);

// Closed-form least-squares fit under the kinematic structure: velocity
// forgetting factor and velocity noise from the state recursion, full linear
// readout and measurement noise from the regression residuals. Bias row stays
// exact.
KfModel fit_kf_model(const TrialSet& data, const KinematicParams& params);

// --- spiking steady-state filter --------------------------------------------

struct SpikingSskfResult {
    Eigen::MatrixXd estimates;  // spiking estimate, unscaled, (m-1) x T
    Eigen::MatrixXd reference;  // quantized-weight SSKF on the same integer inputs
    Eigen::MatrixXd plain;      // float SSKF on raw measurements
    ResidualSeries res;         // spiking vs reference, normalized codec units
    double pearson_min = 0.0;   // min over state dims, spiking vs plain
    std::vector<double> pearson; // per state dim
    double state_scale = 1.0;
    std::int64_t overflow_events = 0;
};

// Runs the steady-state filter as a spiking LDS: strips the bias, scales
// states and measurements into codec range, quantizes, spikes, decodes and
// compares against the non-spiking filters.
SpikingSskfResult spiking_sskf(const KfModel& model, const Eigen::MatrixXd& measurements,
                               const CodecConfig& cfg, bool cancellation = true,
                               bool parallel = false);

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

} // namespace spikelds
