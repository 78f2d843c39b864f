#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spikelds/adder_tree.hpp"
#include "spikelds/graph.hpp"
#include "spikelds/rational.hpp"
#include "spikelds/simulator.hpp"

namespace spikelds {

// Digital crossbar core limits (TrueNorth-style): 256x256 binary crossbar,
// each axon row tagged with one of 4 types, each neuron column holding one
// signed 8-bit-magnitude weight register per type; 18-bit thresholds; 4-bit
// spike delivery delay; every neuron drives exactly one axon anywhere.
struct TnConstraints {
    std::uint32_t axons = 256;
    std::uint32_t neurons = 256;
    std::uint32_t axon_types = 4;
    std::int32_t weight_min = -255;
    std::int32_t weight_max = 255;
    std::int64_t threshold_max = (std::int64_t{1} << 18) - 1;
    std::uint32_t delay_max = 15;
    std::uint32_t max_cores = 4096;
};

// One synthesized crossbar block: a self-contained sub-network that occupies
// a contiguous window of axons and neurons when placed on a core.
struct Fragment {
    struct Axon {
        std::uint8_t type = 0;
        std::string label;
    };
    struct Neuron {
        std::array<std::int32_t, 4> sregs{0, 0, 0, 0};
        std::int64_t threshold = 1;
        std::uint32_t delay = 0;
        std::int32_t feeds_axon = -1; // fragment-local axon this neuron drives; -1 = external
        std::string label;
    };

    std::string kind;
    std::vector<Axon> axons;
    std::vector<Neuron> neurons;
    std::vector<std::pair<std::uint16_t, std::uint16_t>> bits; // (axon, neuron) connections

    std::vector<std::vector<std::uint32_t>> in_ports;  // port -> axon ids, one per line
    std::vector<std::vector<std::uint32_t>> out_ports; // port -> neuron ids, one per line

    // Steps from input-axon arrival to output-port emission.
    std::uint32_t internal_latency = 0;

    std::uint32_t n_types() const;
    void check(const TnConstraints& c) const;
};

// Ladder multiplication on a crossbar. The recurrent ladder weights are
// decomposed into an off-diagonal row block and replicated unit-diagonal rows
// so every weight fits a register; neuron columns are duplicated so each
// drives exactly one recurrent axon. Output is mirrored through relay
// columns (latency 1). Uses 3 axon types and (p^2 + 3p)/2 axons and neurons.
Fragment synth_mult_crossbar(RationalWeight w, std::uint32_t p, std::uint32_t in_lines);

// When w <= 1/p one neuron suffices: per-step input cannot outrun a single
// firing line. in_lines axons with weight num, threshold den (18-bit range).
Fragment synth_small_w_crossbar(RationalWeight w, std::uint32_t p, std::uint32_t in_lines);

// Addition node: unit-threshold ladder, one input axon per line with weight
// +1 to the whole ladder. Relay outputs; latency 1; 3 axon types.
Fragment synth_add_crossbar(const std::vector<std::uint32_t>& port_widths, std::uint32_t p);

// Cancellation node: two mirrored unit ladders; plus lines excite the plus
// ladder and inhibit the minus ladder (one axon each; the sign pattern lives
// in the per-column registers), and each ladder's firing rows re-excite the
// opposite ladder. Relay outputs; latency 1; 3 axon types.
Fragment synth_cancel_crossbar(const std::vector<std::uint32_t>& plus_widths,
                               const std::vector<std::uint32_t>& minus_widths, std::uint32_t p);

// Fan-out legalization: every line of a width-line port copied to `fan` relay
// columns (threshold 1, weight 1), each copy free to route and delay
// independently. Out port e carries copy e of all lines.
Fragment synth_splitter(std::uint32_t width, std::uint32_t fan);

// --- compiled artifact -----------------------------------------------------

struct TnNeuronCfg {
    std::array<std::int32_t, 4> sregs{0, 0, 0, 0};
    std::int64_t threshold = 1;
    std::uint32_t delay = 0;

    enum class Target : std::uint8_t { None, Axon, Output };
    Target target = Target::None;
    std::uint32_t target_core = 0;
    std::uint32_t target_axon = 0;
    std::uint32_t output_channel = 0;
};

struct TnCore {
    std::vector<std::uint8_t> axon_types;
    std::vector<std::vector<std::uint8_t>> conn; // [axon][neuron] in {0,1}
    std::vector<TnNeuronCfg> neurons;
    std::vector<std::string> axon_labels, neuron_labels;

    std::uint32_t n_axons() const { return static_cast<std::uint32_t>(axon_types.size()); }
    std::uint32_t n_neurons() const { return static_cast<std::uint32_t>(neurons.size()); }
};

struct FragmentPlacement {
    std::string kind;
    std::uint32_t core = 0;
    std::uint32_t axon_base = 0, axon_count = 0;
    std::uint32_t neuron_base = 0, neuron_count = 0;
};

struct TreeChoice {
    std::string output; // which accumulation this tree realizes
    std::uint32_t fan_in = 0;
    std::uint32_t k = 0;
    std::uint32_t internal_nodes = 0;
    std::uint32_t depth = 0;
};

struct PlacementReport {
    std::uint32_t n_fragments = 0;
    std::uint32_t n_splitters = 0;
    std::uint32_t n_delay_relays = 0;
    std::uint64_t axons_used = 0, neurons_used = 0;
    std::uint32_t max_axon_types = 0;
    std::uint32_t adder_fanin_limit = 0;  // k for plain addition at this p
    std::uint32_t cancel_fanin_limit = 0; // k for cancellation pairs at this p
    std::vector<FragmentPlacement> placements;
    std::vector<TreeChoice> trees;
};

struct CompiledNetwork {
    std::vector<TnCore> cores;
    std::uint32_t n_inputs = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> input_taps; // line -> (core, axon)
    // Per abstract output channel: the compiled neurons whose spikes realize it.
    std::vector<std::string> output_names;
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> output_taps;
    std::vector<std::int64_t> output_latency; // extra steps vs the abstract graph
    PlacementReport report;
};

// Lower a population-annotated graph onto cores: synthesizes one fragment per
// population (cancellation pairs fuse into one), legalizes fan-in with k-ary
// trees sized to the core budget, inserts splitters for fan-out and relay
// chains for delays beyond the register range, retimes every junction so all
// converging paths carry equal lag, and packs fragments first-fit-decreasing.
// Throws std::invalid_argument when a feedback delay cannot absorb the
// compiled pipeline latency (frame too short) or a budget is exceeded.
CompiledNetwork compile(const CircuitGraph& g, const TnConstraints& c = {});

// Expand a compiled network back into the common graph representation so the
// reference simulator can execute crossbar semantics exactly.
CircuitGraph compiled_to_graph(const CompiledNetwork& c);

struct EquivalenceReport {
    bool ok = false;
    std::string what;        // first divergence, if any
    std::uint32_t channel = 0;
    std::int64_t frame = 0;
    std::int64_t abstract_count = 0;
    std::int64_t compiled_count = 0;
};

// Bit-exact check: per-frame output counts of the abstract graph and the
// compiled network must agree on every channel once the compiled extra
// latency is accounted for.
EquivalenceReport verify_equivalence(const CircuitGraph& g, std::uint32_t abstract_latency,
                                     const CompiledNetwork& c, const SpikeInput& stimulus,
                                     std::uint32_t frame_len, std::int64_t n_frames);

// Stable-order JSON for golden-file comparison and hardware hand-off.
std::string core_config_json(const CompiledNetwork& c);
std::string placement_report_json(const CompiledNetwork& c);

} // namespace spikelds
