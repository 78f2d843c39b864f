#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace spikelds {

using NeuronId = std::uint32_t;
inline constexpr std::uint32_t kNoPopulation = std::numeric_limits<std::uint32_t>::max();

// Integrate-and-fire unit. Each step it integrates all arriving spikes
// (weight per synapse), then fires at most once if the potential reaches the
// threshold; firing subtracts the threshold and any excess carries over.
struct NeuronSpec {
    std::vector<std::int32_t> weights; // synapse weights, addressed by Route::synapse
    std::int64_t threshold = 1;        // must be positive
    std::uint32_t output_delay = 0;    // extra steps added to every outgoing spike
};

// What a group of neurons implements; used by overflow detection and by the
// crossbar compiler to pick a synthesis pattern.
enum class Role : std::uint8_t {
    Mult,   // scalar multiplication population (thresholds beta..p*beta)
    Add,    // spike-count addition population (unit threshold ladder)
    Cancel, // one half of a plus/minus cancellation pair
    Relay,  // identity (threshold 1, unit weight)
    Other,
};

const char* role_name(Role r);

// A population groups p neurons that act as one p-channel unit. Index i in
// `neurons` is channel i (threshold (i+1)*beta for ladder roles).
struct Population {
    Role role = Role::Other;
    std::uint32_t p = 1;
    std::int64_t alpha = 0; // input weight (alpha for Mult, 1 for Add/Cancel)
    std::int64_t beta = 1;  // threshold unit
    std::vector<NeuronId> neurons;
    std::int32_t partner = -1; // for Cancel: index of the opposite-sign population
};

struct RouteSource {
    enum class Kind : std::uint8_t { Input, Neuron };
    Kind kind = Kind::Neuron;
    std::uint32_t index = 0;

    static RouteSource input(std::uint32_t line) { return {Kind::Input, line}; }
    static RouteSource neuron(NeuronId id) { return {Kind::Neuron, id}; }
    bool operator==(const RouteSource&) const = default;
};

// Directed edge: spikes emitted by `src` arrive at `target` after
// 1 + delay (+ the sender's output_delay) steps and add the weight stored at
// weights[synapse]. Delivery is never same-step, so per-step evaluation order
// cannot create cycles.
struct Route {
    RouteSource src;
    NeuronId target = 0;
    std::uint32_t synapse = 0;
    std::uint32_t delay = 0;
};

// Named group of external input lines (one line = one binary spike channel
// per step). A p-channel signal occupies p lines.
struct InputPort {
    std::string name;
    std::vector<std::uint32_t> lines;
};

// Named group of neurons whose spikes constitute one output channel; decoded
// values are per-frame spike counts over the group.
struct OutputChannel {
    std::string name;
    std::vector<NeuronId> neurons;
};

struct CircuitGraph {
    std::vector<NeuronSpec> neurons;
    std::vector<Route> routes;
    std::uint32_t n_inputs = 0; // external input lines are 0..n_inputs-1

    std::vector<InputPort> input_ports;
    std::vector<OutputChannel> outputs;

    std::vector<Population> populations;
    std::vector<std::uint32_t> population_of; // per neuron; kNoPopulation if free

    std::uint32_t find_port(const std::string& name) const;
    std::uint32_t find_output(const std::string& name) const;

    // Structural checks: positive thresholds, route indices in range, every
    // synapse referenced by exactly one route, population membership
    // consistent. Throws std::invalid_argument on the first violation.
    void validate() const;
};

} // namespace spikelds
