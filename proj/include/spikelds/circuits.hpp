#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "spikelds/codec.hpp"
#include "spikelds/graph.hpp"
#include "spikelds/rational.hpp"

namespace spikelds {

// Matrix of synaptic gains; value() of each entry is the realized weight.
struct RationalMatrix {
    Eigen::Index rows = 0, cols = 0;
    std::vector<RationalWeight> data;

    RationalMatrix() = default;
    RationalMatrix(Eigen::Index r, Eigen::Index c) : rows(r), cols(c), data(r * c) {}
    RationalWeight& at(Eigen::Index i, Eigen::Index j) { return data[i * cols + j]; }
    const RationalWeight& at(Eigen::Index i, Eigen::Index j) const { return data[i * cols + j]; }
    Eigen::MatrixXd values() const;
};

RationalMatrix approx_matrix(const Eigen::MatrixXd& w, RationalBounds bounds = {});

// --- population circuits ------------------------------------------------
//
// All builders share the ladder construction: p neurons with thresholds
// beta..p*beta, mutual inhibition -beta and self-excitation (i-1)*beta wired
// one step behind, which keeps all p settled potentials equal. The group then
// emits min(p, floor(V/beta)) spikes per step, i.e. it behaves like a single
// neuron that may fire p times per step.

// y ~ w*x on spike counts: input port "in" (p lines, weight alpha=w.num),
// output channel "out". Exact per-frame floor accumulation when w <= 1 and
// inputs respect the codec spread. Stage latency 1.
CircuitGraph build_scalar_mult(RationalWeight w, std::uint32_t p);

// Sum of n_ports spike-count inputs (ports "in0".."inN-1", p lines each),
// output "out". Unit thresholds, so counting is exact. Stage latency 1.
CircuitGraph build_addition(std::uint32_t n_ports, std::uint32_t p);

// Signed accumulation: plus ports add to the plus half and inhibit the minus
// half, and vice versa; when one half fires it re-excites the other so the
// two settled potentials always sum to zero. Emits only the net difference:
// temporally overlapping opposite-sign spikes annihilate. Ports
// "plus0..","minus0..", outputs "out+", "out-". Stage latency 1.
CircuitGraph build_cancellation(std::uint32_t n_ports_per_sign, std::uint32_t p);

// --- composed circuits ---------------------------------------------------

struct MatvecCircuit {
    CircuitGraph graph;
    RationalMatrix w_rational;  // realized (quantized) nonnegative weights
    Eigen::MatrixXd w_realized; // w_rational.values()
    std::uint32_t latency = 2;  // mult stage + accumulation stage
};

// y = W x for nonnegative W (k x j): one mult population per nonzero entry,
// one addition population per row. Ports "in0".."in{j-1}", outputs
// "out0".."out{k-1}".
MatvecCircuit build_matvec(const Eigen::MatrixXd& w, const CodecConfig& cfg,
                           RationalBounds bounds = {});

// --- linear dynamical systems --------------------------------------------

struct LdsSpec {
    Eigen::MatrixXd a; // m x m
    Eigen::MatrixXd b; // m x n
    Eigen::MatrixXi inputs; // n x T integer inputs (codec range)
};

// Signed system folded into a nonnegative one twice the size:
//   x = x_plus - x_minus,  a_tilde = [[a+, a-], [a-, a+]]  (entrywise ReLU),
// so spike counts can represent signed state exactly as channel differences.
struct TransformedLds {
    Eigen::MatrixXd a_tilde; // 2m x 2m, nonnegative
    Eigen::MatrixXd b_tilde; // 2m x 2n, nonnegative
    LdsSpec source;
};

TransformedLds transform_lds(const LdsSpec& lds);

struct SpikingLds {
    CircuitGraph graph;
    CodecConfig codec;
    bool cancellation = true;
    std::uint32_t latency = 2;      // input frame t -> state window [t*l+2, (t+1)*l+2)
    RationalMatrix a_rational;      // |a| entry magnitudes as realized on neurons
    RationalMatrix b_rational;
    Eigen::MatrixXd a_realized;     // signed realized matrices: what the spiking
    Eigen::MatrixXd b_realized;     // system actually computes
    std::uint32_t m = 0, n = 0;
};

// Full recurrent network: mult populations for every nonzero of
// [a_tilde b_tilde], per-state accumulation (plain addition of both halves,
// or cancellation pairs when use_cancellation), and feedback routes delayed
// one frame. Input ports "u+{j}"/"u-{j}", outputs "x+{i}"/"x-{i}".
// Requires frame_len > latency and every |entry| <= 1 after quantization.
SpikingLds build_spiking_lds(const TransformedLds& t, const CodecConfig& cfg,
                             bool use_cancellation = true, RationalBounds bounds = {});

namespace detail {

// Canonical intra-population wiring, shared by the builders and by the
// hardware compiler's structural verification.
struct InternalEdge {
    NeuronId src = 0, dst = 0;
    std::int32_t weight = 0;
};

std::vector<InternalEdge> ladder_edges(const Population& pop);
std::vector<InternalEdge> cancel_pair_edges(const Population& plus, const Population& minus);

} // namespace detail

} // namespace spikelds
