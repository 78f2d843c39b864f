#include "spikelds/graph.hpp"

#include <stdexcept>
#include <string>

namespace spikelds {

const char* role_name(Role r)
{
    switch (r) {
    case Role::Mult: return "mult";
    case Role::Add: return "add";
    case Role::Cancel: return "cancel";
    case Role::Relay: return "relay";
    case Role::Other: return "other";
    }
    return "?";
}

std::uint32_t CircuitGraph::find_port(const std::string& name) const
{
    for (std::uint32_t i = 0; i < input_ports.size(); ++i)
        if (input_ports[i].name == name)
            return i;
    throw std::invalid_argument("no input port named '" + name + "'");
}

std::uint32_t CircuitGraph::find_output(const std::string& name) const
{
    for (std::uint32_t i = 0; i < outputs.size(); ++i)
        if (outputs[i].name == name)
            return i;
    throw std::invalid_argument("no output channel named '" + name + "'");
}

void CircuitGraph::validate() const
{
    auto fail = [](const std::string& what) { throw std::invalid_argument("invalid graph: " + what); };

    const std::uint32_t n = static_cast<std::uint32_t>(neurons.size());
    for (std::uint32_t i = 0; i < n; ++i)
        if (neurons[i].threshold <= 0)
            fail("neuron " + std::to_string(i) + " has non-positive threshold");

    // every synapse must be driven by exactly one route
    std::vector<std::uint32_t> synapse_refs;
    std::vector<std::size_t> base(n + 1, 0);
    for (std::uint32_t i = 0; i < n; ++i)
        base[i + 1] = base[i] + neurons[i].weights.size();
    synapse_refs.assign(base[n], 0);

    for (const Route& r : routes) {
        if (r.target >= n)
            fail("route targets missing neuron " + std::to_string(r.target));
        if (r.synapse >= neurons[r.target].weights.size())
            fail("route to neuron " + std::to_string(r.target) + " uses missing synapse " +
                 std::to_string(r.synapse));
        if (r.src.kind == RouteSource::Kind::Neuron && r.src.index >= n)
            fail("route from missing neuron " + std::to_string(r.src.index));
        if (r.src.kind == RouteSource::Kind::Input && r.src.index >= n_inputs)
            fail("route from missing input line " + std::to_string(r.src.index));
        ++synapse_refs[base[r.target] + r.synapse];
    }
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::size_t s = 0; s < neurons[i].weights.size(); ++s)
            if (synapse_refs[base[i] + s] != 1)
                fail("neuron " + std::to_string(i) + " synapse " + std::to_string(s) +
                     (synapse_refs[base[i] + s] == 0 ? " is never driven" : " is driven twice"));

    if (!population_of.empty() && population_of.size() != neurons.size())
        fail("population_of size mismatch");
    for (std::uint32_t pi = 0; pi < populations.size(); ++pi) {
        const Population& pop = populations[pi];
        if (pop.neurons.size() != pop.p)
            fail("population " + std::to_string(pi) + " size != p");
        if (pop.beta <= 0)
            fail("population " + std::to_string(pi) + " has non-positive beta");
        for (NeuronId id : pop.neurons) {
            if (id >= n)
                fail("population " + std::to_string(pi) + " references missing neuron");
            if (population_of.empty() || population_of[id] != pi)
                fail("population " + std::to_string(pi) + " membership not reflexive");
        }
        if (pop.partner >= 0) {
            if (static_cast<std::size_t>(pop.partner) >= populations.size() ||
                populations[pop.partner].partner != static_cast<std::int32_t>(pi))
                fail("cancellation pair of population " + std::to_string(pi) + " is not mutual");
        }
    }

    for (const InputPort& port : input_ports)
        for (std::uint32_t line : port.lines)
            if (line >= n_inputs)
                fail("input port '" + port.name + "' references missing line");
    for (const OutputChannel& ch : outputs)
        for (NeuronId id : ch.neurons)
            if (id >= n)
                fail("output channel '" + ch.name + "' references missing neuron");
}

} // namespace spikelds
