#include "spikelds/compiler.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include "json.hpp"

#include "spikelds/circuits.hpp"

namespace spikelds {

namespace {

constexpr std::uint32_t kUnrouted = std::numeric_limits<std::uint32_t>::max();

enum class NodeKind : std::uint8_t { Pop, Pair, Free, Split, Tree, Chain };

struct LNode {
    NodeKind kind = NodeKind::Free;
    Role role = Role::Other;
    std::uint32_t pop = kNoPopulation;       // Pop / plus half of a Pair
    std::uint32_t minus_pop = kNoPopulation; // Pair only
    NeuronId free_id = 0;
    std::uint32_t p = 1;
    std::string label;
    bool extra = false; // inserted unit: spends one delivery hop the abstract graph lacks
    bool small = false; // single-neuron multiplier flavor

    std::uint32_t width = 0, fan = 0; // Split / Chain geometry
    std::uint32_t hop_delay = 0;      // Chain register

    Fragment frag;
    std::int64_t lnet = 0; // lag-in to emission latency
    std::int64_t lag = 0;
    std::vector<std::size_t> in_edges;

    std::uint32_t core = 0, axon_base = 0, neuron_base = 0;

    std::int64_t e_out() const { return lag + lnet; }
};

struct LEdge {
    std::int32_t src = -1; // node; -1 = external input port src_port
    std::uint32_t src_port = 0;
    std::uint32_t src_base = 0; // first line of the source port carried here
    std::int32_t dst = -1;      // node; -1 = external output channel dst_port
    std::uint32_t dst_port = 0;
    std::uint32_t dst_base = 0; // offset inside dst_port (single-port fragments)
    std::uint32_t width = 0;
    std::uint32_t delay = 0; // abstract route delay
    std::int32_t weight = 0;
    int sign = +1; // which half of a cancellation pair this feeds
    bool from_input = false;
    std::uint32_t free_synapse = 0; // first dst synapse when dst is a free neuron

    std::uint32_t sender_delay = 0;
    std::vector<std::size_t> chain; // relay hops realizing the residual delay
};

std::uint32_t add_fanin_limit(const TnConstraints& c, std::uint32_t p)
{
    const std::uint32_t overhead = 2 * p - 1; // off rows + diag rows
    if (p == 0 || c.axons <= overhead)
        return 0;
    return (c.axons - overhead) / p;
}

std::uint32_t cancel_fanin_limit(const TnConstraints& c, std::uint32_t p)
{
    const std::uint32_t overhead = 4 * p - 2; // both ladders' off + diag rows
    if (p == 0 || c.axons <= overhead)
        return 0;
    return (c.axons - overhead) / (2 * p);
}

Fragment synth_relay_chain(std::uint32_t width, std::uint32_t hop_delay)
{
    Fragment f;
    f.kind = "delay(" + std::to_string(1 + hop_delay) + ")";
    f.internal_latency = 0;
    std::vector<std::uint32_t> lines(width);
    for (std::uint32_t l = 0; l < width; ++l) {
        lines[l] = l;
        f.axons.push_back({0, "in" + std::to_string(l)});
        Fragment::Neuron n;
        n.sregs = {1, 0, 0, 0};
        n.threshold = 1;
        n.delay = hop_delay;
        n.label = "hop" + std::to_string(l);
        f.neurons.push_back(std::move(n));
        f.bits.emplace_back(static_cast<std::uint16_t>(l), static_cast<std::uint16_t>(l));
    }
    f.in_ports.push_back(lines);
    f.out_ports.push_back(lines);
    return f;
}

// Single neuron outside any population: one axon per synapse, axon types
// allocated per distinct weight value.
Fragment synth_free_neuron(const NeuronSpec& spec, const std::vector<LEdge*>& in_edges,
                           const TnConstraints& c)
{
    Fragment f;
    f.kind = "neuron";
    f.internal_latency = 0;

    Fragment::Neuron fn;
    fn.threshold = spec.threshold;
    fn.label = "n";
    f.neurons.push_back(std::move(fn));

    std::vector<std::int32_t> values;
    auto type_of = [&](std::int32_t w) -> std::uint8_t {
        for (std::size_t i = 0; i < values.size(); ++i)
            if (values[i] == w)
                return static_cast<std::uint8_t>(i);
        values.push_back(w);
        if (values.size() > c.axon_types)
            throw std::invalid_argument(
                "free neuron needs more distinct weights than axon types");
        return static_cast<std::uint8_t>(values.size() - 1);
    };

    for (LEdge* e : in_edges) {
        std::vector<std::uint32_t> port;
        for (std::uint32_t l = 0; l < e->width; ++l) {
            const std::int32_t w = spec.weights.at(e->free_synapse + l);
            const std::uint32_t a = static_cast<std::uint32_t>(f.axons.size());
            f.axons.push_back({type_of(w), "s" + std::to_string(e->free_synapse + l)});
            f.bits.emplace_back(static_cast<std::uint16_t>(a), 0);
            port.push_back(a);
        }
        e->dst_port = static_cast<std::uint32_t>(f.in_ports.size());
        e->dst_base = 0;
        f.in_ports.push_back(std::move(port));
    }
    for (std::size_t i = 0; i < values.size(); ++i)
        f.neurons[0].sregs[i] = values[i];
    f.out_ports.push_back({0});
    return f;
}

struct Lowering {
    const CircuitGraph& g;
    TnConstraints c;

    std::vector<LNode> nodes;
    std::vector<LEdge> edges;
    std::vector<std::int32_t> node_of; // per neuron
    struct EmitRef {
        std::int32_t node = -1;
        std::uint32_t port = 0, line = 0;
    };
    std::vector<EmitRef> emit_of;                                   // per neuron
    std::vector<std::pair<std::uint32_t, std::uint32_t>> line_port; // line -> (port, pos)
    std::vector<TreeChoice> trees;
    std::uint32_t n_splitters = 0, n_delay_relays = 0;
    std::vector<std::uint32_t> core_axons, core_neurons; // usage per packed core

    Lowering(const CircuitGraph& graph, const TnConstraints& cons) : g(graph), c(cons) {}

    [[noreturn]] void fail(const std::string& what) const
    {
        throw std::invalid_argument("compile: " + what);
    }

    std::uint32_t out_width(std::int32_t node, std::uint32_t port) const
    {
        const LNode& n = nodes[static_cast<std::size_t>(node)];
        switch (n.kind) {
        case NodeKind::Pop:
            return n.small ? 1 : n.p;
        case NodeKind::Pair:
        case NodeKind::Tree:
            return n.p;
        case NodeKind::Free:
            return 1;
        case NodeKind::Split:
        case NodeKind::Chain:
            return n.width;
        }
        (void)port;
        return 1;
    }

    void build_nodes();
    void build_edges();
    void pick_small_mults();
    void legalize_fanin();
    void legalize_fanout();
    void rebuild_in_edges();
    void synthesize();
    void solve_lags();
    void realize_delays();
    void pack();
    CompiledNetwork assemble();

    CompiledNetwork run()
    {
        g.validate();
        build_nodes();
        build_edges();
        pick_small_mults();
        legalize_fanin();
        legalize_fanout();
        rebuild_in_edges();
        synthesize();
        solve_lags();
        realize_delays();
        pack();
        return assemble();
    }
};

void Lowering::build_nodes()
{
    const std::uint32_t n_pops = static_cast<std::uint32_t>(g.populations.size());
    std::vector<std::int32_t> pop_node(n_pops, -1);
    node_of.assign(g.neurons.size(), -1);
    emit_of.assign(g.neurons.size(), {});

    for (const NeuronSpec& n : g.neurons)
        if (n.output_delay != 0)
            fail("per-neuron output_delay is not supported; use route delays");

    for (std::uint32_t pid = 0; pid < n_pops; ++pid) {
        if (pop_node[pid] >= 0)
            continue;
        const Population& pop = g.populations[pid];
        if (pop.neurons.empty())
            fail("population " + std::to_string(pid) + " is empty");
        LNode node;
        node.pop = pid;
        node.p = pop.p;
        node.role = pop.role;
        switch (pop.role) {
        case Role::Cancel: {
            if (pop.partner < 0)
                fail("cancellation population without a partner");
            const std::uint32_t mi = static_cast<std::uint32_t>(pop.partner);
            if (mi <= pid || mi >= n_pops)
                fail("cancellation pair must be declared plus half first");
            const Population& minus = g.populations[mi];
            if (minus.role != Role::Cancel ||
                minus.partner != static_cast<std::int32_t>(pid) || minus.p != pop.p ||
                minus.beta != pop.beta)
                fail("mismatched cancellation pair");
            node.kind = NodeKind::Pair;
            node.minus_pop = mi;
            node.label = "pair" + std::to_string(pid);
            break;
        }
        case Role::Mult:
        case Role::Add:
        case Role::Relay:
            if (pop.partner >= 0)
                fail("only cancellation populations may have a partner");
            node.kind = NodeKind::Pop;
            node.label = std::string(role_name(pop.role)) + std::to_string(pid);
            break;
        default:
            fail("population " + std::to_string(pid) +
                 " has no crossbar synthesis pattern");
        }
        const std::int32_t idx = static_cast<std::int32_t>(nodes.size());
        pop_node[pid] = idx;
        for (std::uint32_t i = 0; i < pop.neurons.size(); ++i) {
            node_of[pop.neurons[i]] = idx;
            emit_of[pop.neurons[i]] = {idx, 0, i};
        }
        if (node.kind == NodeKind::Pair) {
            pop_node[node.minus_pop] = idx;
            const Population& minus = g.populations[node.minus_pop];
            for (std::uint32_t i = 0; i < minus.neurons.size(); ++i) {
                node_of[minus.neurons[i]] = idx;
                emit_of[minus.neurons[i]] = {idx, 1, i};
            }
        }
        nodes.push_back(std::move(node));
    }

    for (NeuronId nid = 0; nid < g.neurons.size(); ++nid) {
        if (node_of[nid] >= 0)
            continue;
        LNode node;
        node.kind = NodeKind::Free;
        node.free_id = nid;
        node.label = "neuron" + std::to_string(nid);
        node_of[nid] = static_cast<std::int32_t>(nodes.size());
        emit_of[nid] = {node_of[nid], 0, 0};
        nodes.push_back(std::move(node));
    }

    line_port.assign(g.n_inputs, {kUnrouted, 0});
    for (std::uint32_t pi = 0; pi < g.input_ports.size(); ++pi) {
        const auto& lines = g.input_ports[pi].lines;
        for (std::uint32_t pos = 0; pos < lines.size(); ++pos) {
            if (line_port.at(lines[pos]).first != kUnrouted)
                fail("input line " + std::to_string(lines[pos]) + " belongs to two ports");
            line_port[lines[pos]] = {pi, pos};
        }
    }
}

void Lowering::build_edges()
{
    std::vector<std::tuple<std::int32_t, NeuronId, NeuronId, std::int32_t>> internal;
    // (src unit, src port, dst node, sign, per-line key for free targets)
    std::map<std::tuple<std::int32_t, std::uint32_t, std::int32_t, int, std::uint64_t>,
             std::size_t>
        groups;
    std::vector<std::set<std::pair<std::uint32_t, NeuronId>>> seen;
    std::vector<std::pair<std::int64_t, std::int64_t>> pair_hits;

    for (const Route& r : g.routes) {
        const std::int32_t dst_node = node_of[r.target];
        const LNode& dn = nodes[static_cast<std::size_t>(dst_node)];
        const std::int32_t w = g.neurons[r.target].weights[r.synapse];

        if (r.src.kind == RouteSource::Kind::Neuron && node_of[r.src.index] == dst_node &&
            dn.kind != NodeKind::Free) {
            if (r.delay != 0)
                fail(dn.label + ": population-internal route with nonzero delay");
            internal.emplace_back(dst_node, r.src.index, r.target, w);
            continue;
        }

        std::int32_t src_node = -1;
        std::uint32_t src_port, src_line, src_width;
        bool from_input = false;
        if (r.src.kind == RouteSource::Kind::Input) {
            if (r.src.index >= line_port.size() ||
                line_port[r.src.index].first == kUnrouted)
                fail("route from an input line that belongs to no port");
            src_port = line_port[r.src.index].first;
            src_line = line_port[r.src.index].second;
            src_width = static_cast<std::uint32_t>(g.input_ports[src_port].lines.size());
            from_input = true;
        } else {
            const EmitRef ref = emit_of[r.src.index];
            src_node = ref.node;
            src_port = ref.port;
            src_line = ref.line;
            src_width = out_width(ref.node, ref.port);
        }

        int sign = +1;
        std::uint64_t line_key = 0;
        std::int32_t expect_weight = w;
        std::uint32_t free_syn = 0;
        switch (dn.kind) {
        case NodeKind::Pop: {
            const Population& pop = g.populations[dn.pop];
            if (pop.role == Role::Mult) {
                if (w != pop.alpha)
                    fail(dn.label + ": multiplier input weight differs from alpha");
            } else if (w != 1) {
                fail(dn.label + ": accumulator input weight must be +1");
            }
            break;
        }
        case NodeKind::Pair: {
            const bool to_plus = emit_of[r.target].port == 0;
            if (w == 1)
                sign = to_plus ? +1 : -1;
            else if (w == -1)
                sign = to_plus ? -1 : +1;
            else
                fail(dn.label + ": cancellation input weight must be +-1");
            expect_weight = 1;
            break;
        }
        case NodeKind::Free:
            // one edge per (line, synapse) so arbitrary wiring stays legal
            free_syn = r.synapse;
            line_key = (static_cast<std::uint64_t>(src_line) << 32) | r.synapse;
            break;
        default:
            fail("route into an inserted node");
        }

        const auto key = std::make_tuple(src_node, src_port, dst_node, sign, line_key);
        auto it = groups.find(key);
        if (it == groups.end()) {
            LEdge e;
            e.src = src_node;
            e.src_port = src_port;
            e.dst = dst_node;
            e.delay = r.delay;
            e.weight = expect_weight;
            e.sign = sign;
            e.from_input = from_input;
            if (dn.kind == NodeKind::Free) {
                e.src_base = src_line;
                e.width = 1;
                e.free_synapse = free_syn;
            } else {
                e.src_base = 0;
                e.width = src_width;
            }
            it = groups.emplace(key, edges.size()).first;
            edges.push_back(std::move(e));
            seen.emplace_back();
            pair_hits.emplace_back(0, 0);
        }
        LEdge& e = edges[it->second];
        if (e.delay != r.delay)
            fail(dn.label + ": one logical connection carries two different delays");
        if (!seen[it->second].emplace(src_line, r.target).second)
            fail(dn.label + ": duplicate route for one line/target");
        if (dn.kind == NodeKind::Pair) {
            auto& [np, nm] = pair_hits[it->second];
            (emit_of[r.target].port == 0 ? np : nm)++;
        }
    }

    // every logical connection must be complete all-to-all wiring
    for (std::size_t ei = 0; ei < edges.size(); ++ei) {
        const LEdge& e = edges[ei];
        const LNode& dn = nodes[static_cast<std::size_t>(e.dst)];
        std::size_t want = e.width;
        if (dn.kind == NodeKind::Pop)
            want = static_cast<std::size_t>(e.width) * dn.p;
        else if (dn.kind == NodeKind::Pair) {
            const std::size_t per = static_cast<std::size_t>(e.width) * dn.p;
            const auto& [np, nm] = pair_hits[ei];
            if (static_cast<std::size_t>(np) != per || static_cast<std::size_t>(nm) != per)
                fail(dn.label + ": cancellation input must drive both halves");
            want = 2 * per;
        }
        if (seen[ei].size() != want)
            fail(dn.label + ": partial connection (all-to-all wiring required)");
    }

    // population internals must match the canonical ladder templates exactly
    std::vector<std::vector<std::tuple<NeuronId, NeuronId, std::int32_t>>> actual(
        nodes.size());
    for (const auto& [node, src, dst, w] : internal)
        actual[static_cast<std::size_t>(node)].emplace_back(src, dst, w);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const LNode& node = nodes[i];
        if (node.kind != NodeKind::Pop && node.kind != NodeKind::Pair)
            continue;
        std::vector<detail::InternalEdge> want =
            node.kind == NodeKind::Pair
                ? detail::cancel_pair_edges(g.populations[node.pop],
                                            g.populations[node.minus_pop])
                : detail::ladder_edges(g.populations[node.pop]);
        std::vector<std::tuple<NeuronId, NeuronId, std::int32_t>> expect;
        expect.reserve(want.size());
        for (const auto& e : want)
            expect.emplace_back(e.src, e.dst, e.weight);
        std::sort(expect.begin(), expect.end());
        std::sort(actual[i].begin(), actual[i].end());
        if (expect != actual[i])
            fail(node.label + ": population wiring does not match the ladder pattern");
    }

    // output channels tap exactly one whole out port, in emission order
    for (std::uint32_t ch = 0; ch < g.outputs.size(); ++ch) {
        const OutputChannel& out = g.outputs[ch];
        if (out.neurons.empty())
            fail("output channel '" + out.name + "' is empty");
        const EmitRef firstref = emit_of[out.neurons[0]];
        const LNode& sn = nodes[static_cast<std::size_t>(firstref.node)];
        std::vector<NeuronId> expect;
        if (sn.kind == NodeKind::Pop)
            expect = g.populations[sn.pop].neurons;
        else if (sn.kind == NodeKind::Pair)
            expect = g.populations[firstref.port == 0 ? sn.pop : sn.minus_pop].neurons;
        else
            expect = {sn.free_id};
        if (out.neurons != expect)
            fail("output channel '" + out.name + "' must tap one whole unit in order");
        LEdge e;
        e.src = firstref.node;
        e.src_port = firstref.port;
        e.dst = -1;
        e.dst_port = ch;
        e.width = static_cast<std::uint32_t>(out.neurons.size());
        edges.push_back(std::move(e));
    }
}

// A multiplier whose per-step input total cannot exceed one firing (w <= 1/p
// and at most p live input lines) collapses to a single neuron. Feeders may
// collapse first and shrink this node's input width, so iterate to fixpoint.
void Lowering::pick_small_mults()
{
    rebuild_in_edges();
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t ni = 0; ni < nodes.size(); ++ni) {
            LNode& node = nodes[ni];
            if (node.kind != NodeKind::Pop || node.role != Role::Mult || node.small)
                continue;
            const Population& pop = g.populations[node.pop];
            if (pop.alpha * static_cast<std::int64_t>(node.p) > pop.beta)
                continue;
            std::uint64_t in_width = 0;
            for (std::size_t ei : node.in_edges)
                in_width += edges[ei].width;
            if (in_width > node.p)
                continue;
            bool whole_port = true;
            for (const LEdge& e : edges)
                if (e.src == static_cast<std::int32_t>(ni) && e.dst >= 0 &&
                    (e.src_base != 0 || e.width != node.p))
                    whole_port = false;
            if (!whole_port)
                continue;
            node.small = true;
            for (LEdge& e : edges)
                if (e.src == static_cast<std::int32_t>(ni) && e.dst >= 0)
                    e.width = 1;
            changed = true;
        }
    }
}

void Lowering::legalize_fanin()
{
    const std::size_t original = nodes.size();
    for (std::size_t ni = 0; ni < original; ++ni) {
        // nodes may reallocate during insertion; copy what the loop body needs
        const NodeKind kind = nodes[ni].kind;
        const Role role = nodes[ni].role;
        const std::uint32_t p = nodes[ni].p;
        const std::string label = nodes[ni].label;

        if (kind == NodeKind::Pop && (role == Role::Add || role == Role::Relay)) {
            const std::uint32_t k = add_fanin_limit(c, p);
            const auto in = nodes[ni].in_edges;
            if (in.size() <= std::max<std::uint32_t>(k, 1))
                continue;
            if (k < 2)
                fail(label + ": population too large for any accumulation fan-in");
            const AdderTree tree = build_adder_tree(static_cast<std::uint32_t>(in.size()), k);
            trees.push_back({label, static_cast<std::uint32_t>(in.size()), k,
                             tree.n_internal(), tree.depth()});
            // map tree positions onto lowering nodes; the root keeps the
            // original node's identity
            std::vector<std::int32_t> of(tree.nodes.size());
            for (std::size_t t = 0; t + 1 < tree.nodes.size(); ++t) {
                LNode tn;
                tn.kind = NodeKind::Tree;
                tn.role = Role::Add;
                tn.p = p;
                tn.extra = true;
                tn.label = label + ".t" + std::to_string(t);
                of[t] = static_cast<std::int32_t>(nodes.size());
                nodes.push_back(std::move(tn));
            }
            of.back() = static_cast<std::int32_t>(ni);
            for (std::size_t t = 0; t < tree.nodes.size(); ++t) {
                for (std::int32_t child : tree.nodes[t].children) {
                    if (child < 0) {
                        edges[in[static_cast<std::size_t>(~child)]].dst = of[t];
                    } else {
                        LEdge e;
                        e.src = of[static_cast<std::size_t>(child)];
                        e.src_port = 0;
                        e.dst = of[t];
                        e.width = p;
                        e.weight = 1;
                        edges.push_back(std::move(e));
                    }
                }
            }
        } else if (kind == NodeKind::Pair) {
            const std::uint32_t k = cancel_fanin_limit(c, p);
            std::vector<std::size_t> plus, minus;
            for (std::size_t ei : nodes[ni].in_edges)
                (edges[ei].sign > 0 ? plus : minus).push_back(ei);
            const std::size_t slots = std::max(plus.size(), minus.size());
            if (slots <= std::max<std::uint32_t>(k, 1))
                continue;
            if (k < 2)
                fail(label + ": population too large for any cancellation fan-in");
            const AdderTree tree = build_adder_tree(static_cast<std::uint32_t>(slots), k);
            trees.push_back({label, static_cast<std::uint32_t>(slots), k,
                             tree.n_internal(), tree.depth()});
            std::vector<std::int32_t> of(tree.nodes.size());
            for (std::size_t t = 0; t + 1 < tree.nodes.size(); ++t) {
                LNode tn;
                tn.kind = NodeKind::Tree;
                tn.role = Role::Cancel;
                tn.p = p;
                tn.extra = true;
                tn.label = label + ".t" + std::to_string(t);
                of[t] = static_cast<std::int32_t>(nodes.size());
                nodes.push_back(std::move(tn));
            }
            of.back() = static_cast<std::int32_t>(ni);
            for (std::size_t t = 0; t < tree.nodes.size(); ++t) {
                for (std::int32_t child : tree.nodes[t].children) {
                    if (child < 0) {
                        // slot j pairs the j-th plus feed with the j-th minus
                        // feed so opposite-sign streams share a leaf and can
                        // annihilate as early as possible
                        const std::size_t j = static_cast<std::size_t>(~child);
                        if (j < plus.size())
                            edges[plus[j]].dst = of[t];
                        if (j < minus.size())
                            edges[minus[j]].dst = of[t];
                    } else {
                        for (int s = 0; s < 2; ++s) {
                            LEdge e;
                            e.src = of[static_cast<std::size_t>(child)];
                            e.src_port = static_cast<std::uint32_t>(s);
                            e.dst = of[t];
                            e.width = p;
                            e.weight = 1;
                            e.sign = s == 0 ? +1 : -1;
                            edges.push_back(std::move(e));
                        }
                    }
                }
            }
        }
    }
}

// Every compiled neuron drives exactly one axon, so any port with several
// consumers (including output channels) goes through a splitter that clones
// the port once per consumer.
void Lowering::legalize_fanout()
{
    std::map<std::pair<std::int32_t, std::uint32_t>, std::vector<std::size_t>> consumers;
    std::vector<std::pair<std::int32_t, std::uint32_t>> order;
    for (std::size_t ei = 0; ei < edges.size(); ++ei) {
        const auto key = std::make_pair(edges[ei].src, edges[ei].src_port);
        auto [it, fresh] = consumers.try_emplace(key);
        if (fresh)
            order.push_back(key);
        it->second.push_back(ei);
    }
    for (const auto& key : order) {
        const auto& eis = consumers[key];
        if (eis.size() < 2)
            continue;
        const auto [src, src_port] = key;
        const std::uint32_t width =
            src >= 0 ? out_width(src, src_port)
                     : static_cast<std::uint32_t>(g.input_ports[src_port].lines.size());
        LNode spl;
        spl.kind = NodeKind::Split;
        spl.width = width;
        spl.fan = static_cast<std::uint32_t>(eis.size());
        spl.extra = true;
        spl.label = (src >= 0 ? nodes[static_cast<std::size_t>(src)].label + ".p" +
                                    std::to_string(src_port)
                              : "in" + std::to_string(src_port)) +
                    ".fan";
        const std::int32_t si = static_cast<std::int32_t>(nodes.size());
        nodes.push_back(std::move(spl));
        ++n_splitters;

        for (std::size_t e = 0; e < eis.size(); ++e) {
            edges[eis[e]].src = si;
            edges[eis[e]].src_port = static_cast<std::uint32_t>(e);
            edges[eis[e]].from_input = false;
            // src_base is kept: every copy carries the whole port
        }
        LEdge feed;
        feed.src = src;
        feed.src_port = src_port;
        feed.dst = si;
        feed.width = width;
        feed.weight = 1;
        feed.from_input = src < 0;
        edges.push_back(std::move(feed));
    }
}

void Lowering::rebuild_in_edges()
{
    for (auto& n : nodes)
        n.in_edges.clear();
    for (std::size_t ei = 0; ei < edges.size(); ++ei)
        if (edges[ei].dst >= 0)
            nodes[static_cast<std::size_t>(edges[ei].dst)].in_edges.push_back(ei);
}

void Lowering::synthesize()
{
    for (std::size_t ni = 0; ni < nodes.size(); ++ni) {
        LNode& node = nodes[ni];
        try {
            switch (node.kind) {
            case NodeKind::Pop: {
                const Population& pop = g.populations[node.pop];
                if (node.role == Role::Mult) {
                    if (pop.alpha > c.weight_max || pop.beta > c.weight_max)
                        throw std::invalid_argument(
                            "multiplier alpha/beta exceed the weight registers");
                    const RationalWeight w{static_cast<std::int32_t>(pop.alpha),
                                           static_cast<std::int32_t>(pop.beta)};
                    std::uint32_t total = 0;
                    for (std::size_t ei : node.in_edges) {
                        edges[ei].dst_port = 0;
                        edges[ei].dst_base = total;
                        total += edges[ei].width;
                    }
                    node.frag = node.small ? synth_small_w_crossbar(w, node.p, total)
                                           : synth_mult_crossbar(w, node.p, total);
                } else {
                    if (pop.alpha != 1 || pop.beta != 1)
                        throw std::invalid_argument(
                            "accumulator populations must be unit ladders");
                    std::vector<std::uint32_t> widths;
                    for (std::size_t ei : node.in_edges) {
                        edges[ei].dst_port = static_cast<std::uint32_t>(widths.size());
                        edges[ei].dst_base = 0;
                        widths.push_back(edges[ei].width);
                    }
                    node.frag = synth_add_crossbar(widths, node.p);
                }
                break;
            }
            case NodeKind::Pair:
                if (g.populations[node.pop].alpha != 1 ||
                    g.populations[node.pop].beta != 1)
                    throw std::invalid_argument(
                        "cancellation populations must be unit ladders");
                [[fallthrough]];
            case NodeKind::Tree: {
                if (node.kind == NodeKind::Tree && node.role == Role::Add) {
                    std::vector<std::uint32_t> widths;
                    for (std::size_t ei : node.in_edges) {
                        edges[ei].dst_port = static_cast<std::uint32_t>(widths.size());
                        edges[ei].dst_base = 0;
                        widths.push_back(edges[ei].width);
                    }
                    node.frag = synth_add_crossbar(widths, node.p);
                    break;
                }
                std::vector<std::uint32_t> pw, mw;
                for (std::size_t ei : node.in_edges)
                    if (edges[ei].sign > 0) {
                        edges[ei].dst_port = static_cast<std::uint32_t>(pw.size());
                        edges[ei].dst_base = 0;
                        pw.push_back(edges[ei].width);
                    }
                const std::uint32_t base = static_cast<std::uint32_t>(pw.size());
                for (std::size_t ei : node.in_edges)
                    if (edges[ei].sign < 0) {
                        edges[ei].dst_port = base + static_cast<std::uint32_t>(mw.size());
                        edges[ei].dst_base = 0;
                        mw.push_back(edges[ei].width);
                    }
                node.frag = synth_cancel_crossbar(pw, mw, node.p);
                break;
            }
            case NodeKind::Free: {
                std::vector<LEdge*> in;
                for (std::size_t ei : node.in_edges)
                    in.push_back(&edges[ei]);
                node.frag = synth_free_neuron(g.neurons[node.free_id], in, c);
                break;
            }
            case NodeKind::Split: {
                node.frag = synth_splitter(node.width, node.fan);
                for (std::size_t ei : node.in_edges) {
                    edges[ei].dst_port = 0;
                    edges[ei].dst_base = 0;
                }
                break;
            }
            case NodeKind::Chain:
                break; // synthesized on creation
            }
            node.frag.check(c);
        } catch (const std::invalid_argument& e) {
            fail(node.label + ": " + e.what());
        }
        node.lnet =
            static_cast<std::int64_t>(node.frag.internal_latency) + (node.extra ? 1 : 0);
    }
}

// Retiming. lag(v) = whole steps by which the lowered unit v runs behind its
// abstract counterpart; every connection must then realize
// d + lag(dst) - (lag(src) + lnet(src)) >= 0 extra transit steps. Lags are
// the least fixpoint of the longest-path system; a cycle whose synthesis
// latency exceeds its route delay has no fixpoint, meaning the feedback
// window is too short for the compiled pipeline.
void Lowering::solve_lags()
{
    for (std::size_t round = 0; round <= nodes.size() + 1; ++round) {
        bool changed = false;
        for (const LEdge& e : edges) {
            if (e.src < 0 || e.dst < 0)
                continue;
            const std::int64_t need =
                nodes[static_cast<std::size_t>(e.src)].e_out() - e.delay;
            LNode& dst = nodes[static_cast<std::size_t>(e.dst)];
            if (dst.lag < need) {
                dst.lag = need;
                changed = true;
            }
        }
        if (!changed)
            return;
    }
    fail("frame too short: feedback delay cannot absorb the compiled pipeline latency");
}

void Lowering::realize_delays()
{
    const std::size_t n_edges = edges.size(); // chain hops add nodes, not edges
    for (std::size_t ei = 0; ei < n_edges; ++ei) {
        LEdge& e = edges[ei];
        if (e.dst < 0)
            continue;
        std::int64_t budget =
            e.delay + nodes[static_cast<std::size_t>(e.dst)].lag -
            (e.src >= 0 ? nodes[static_cast<std::size_t>(e.src)].e_out() : 0);
        if (budget < 0)
            fail("internal: negative transit after retiming");
        if (e.src >= 0) {
            e.sender_delay =
                static_cast<std::uint32_t>(std::min<std::int64_t>(budget, c.delay_max));
            budget -= e.sender_delay;
        }
        while (budget > 0) {
            // each relay hop consumes one transit step plus its own register
            const std::uint32_t reg = static_cast<std::uint32_t>(
                std::min<std::int64_t>(budget - 1, c.delay_max));
            LNode hop;
            hop.kind = NodeKind::Chain;
            hop.width = e.width;
            hop.hop_delay = reg;
            hop.extra = true;
            hop.label = "lag" + std::to_string(ei) + "." + std::to_string(e.chain.size());
            hop.frag = synth_relay_chain(e.width, reg);
            hop.frag.check(c);
            e.chain.push_back(nodes.size());
            n_delay_relays += e.width;
            nodes.push_back(std::move(hop));
            budget -= 1 + reg;
        }
    }
}

void Lowering::pack()
{
    std::vector<std::size_t> order(nodes.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto sa = std::max(nodes[a].frag.axons.size(), nodes[a].frag.neurons.size());
        const auto sb = std::max(nodes[b].frag.axons.size(), nodes[b].frag.neurons.size());
        return sa > sb;
    });
    for (std::size_t ni : order) {
        LNode& node = nodes[ni];
        const std::uint32_t na = static_cast<std::uint32_t>(node.frag.axons.size());
        const std::uint32_t nn = static_cast<std::uint32_t>(node.frag.neurons.size());
        std::size_t bin = core_axons.size();
        for (std::size_t b = 0; b < core_axons.size(); ++b) {
            if (core_axons[b] + na <= c.axons && core_neurons[b] + nn <= c.neurons) {
                bin = b;
                break;
            }
        }
        if (bin == core_axons.size()) {
            if (core_axons.size() >= c.max_cores)
                fail("core budget exceeded: more than " + std::to_string(c.max_cores) +
                     " cores required");
            core_axons.push_back(0);
            core_neurons.push_back(0);
        }
        node.core = static_cast<std::uint32_t>(bin);
        node.axon_base = core_axons[bin];
        node.neuron_base = core_neurons[bin];
        core_axons[bin] += na;
        core_neurons[bin] += nn;
    }
}

CompiledNetwork Lowering::assemble()
{
    CompiledNetwork net;
    net.n_inputs = g.n_inputs;
    net.cores.resize(core_axons.size());
    for (std::size_t b = 0; b < net.cores.size(); ++b) {
        TnCore& core = net.cores[b];
        core.axon_types.assign(core_axons[b], 0);
        core.axon_labels.assign(core_axons[b], {});
        core.neuron_labels.assign(core_neurons[b], {});
        core.neurons.assign(core_neurons[b], {});
        core.conn.assign(core_axons[b], std::vector<std::uint8_t>(core_neurons[b], 0));
    }

    for (const LNode& node : nodes) {
        TnCore& core = net.cores[node.core];
        for (std::size_t a = 0; a < node.frag.axons.size(); ++a) {
            core.axon_types[node.axon_base + a] = node.frag.axons[a].type;
            core.axon_labels[node.axon_base + a] =
                node.label + "." + node.frag.axons[a].label;
        }
        for (std::size_t n = 0; n < node.frag.neurons.size(); ++n) {
            const Fragment::Neuron& fn = node.frag.neurons[n];
            TnNeuronCfg cfg;
            cfg.sregs = fn.sregs;
            cfg.threshold = fn.threshold;
            cfg.delay = fn.delay;
            if (fn.feeds_axon >= 0) {
                cfg.target = TnNeuronCfg::Target::Axon;
                cfg.target_core = node.core;
                cfg.target_axon = node.axon_base + static_cast<std::uint32_t>(fn.feeds_axon);
            }
            core.neurons[node.neuron_base + n] = cfg;
            core.neuron_labels[node.neuron_base + n] = node.label + "." + fn.label;
        }
        for (const auto& [a, n] : node.frag.bits)
            core.conn[node.axon_base + a][node.neuron_base + n] = 1;
    }

    net.input_taps.assign(g.n_inputs, {kUnrouted, kUnrouted});
    net.output_names.resize(g.outputs.size());
    net.output_taps.resize(g.outputs.size());
    net.output_latency.assign(g.outputs.size(), 0);

    auto port_axon = [&](const LNode& node, std::uint32_t port, std::uint32_t base,
                         std::uint32_t l) {
        return std::make_pair(node.core,
                              node.axon_base + node.frag.in_ports.at(port).at(base + l));
    };
    auto aim = [&](std::pair<std::uint32_t, std::uint32_t> col,
                   std::pair<std::uint32_t, std::uint32_t> axon, std::uint32_t delay) {
        TnNeuronCfg& cfg = net.cores[col.first].neurons[col.second];
        if (cfg.target != TnNeuronCfg::Target::None)
            throw std::logic_error("compile: neuron routed twice");
        cfg.target = TnNeuronCfg::Target::Axon;
        cfg.target_core = axon.first;
        cfg.target_axon = axon.second;
        cfg.delay = delay;
    };

    for (const LEdge& e : edges) {
        if (e.dst < 0) {
            const LNode& src = nodes[static_cast<std::size_t>(e.src)];
            const auto& port = src.frag.out_ports.at(e.src_port);
            for (std::uint32_t col : port) {
                const std::pair<std::uint32_t, std::uint32_t> at{src.core,
                                                                 src.neuron_base + col};
                TnNeuronCfg& cfg = net.cores[at.first].neurons[at.second];
                if (cfg.target != TnNeuronCfg::Target::None)
                    throw std::logic_error("compile: neuron routed twice");
                cfg.target = TnNeuronCfg::Target::Output;
                cfg.output_channel = e.dst_port;
                net.output_taps[e.dst_port].push_back(at);
            }
            net.output_names[e.dst_port] = g.outputs[e.dst_port].name;
            net.output_latency[e.dst_port] = src.e_out();
            continue;
        }

        const LNode& dst = nodes[static_cast<std::size_t>(e.dst)];
        for (std::uint32_t l = 0; l < e.width; ++l) {
            // destination axon first, then walk the chain backwards
            auto target = port_axon(dst, e.dst_port, e.dst_base, l);
            for (std::size_t h = e.chain.size(); h-- > 0;) {
                const LNode& hop = nodes[e.chain[h]];
                aim({hop.core, hop.neuron_base + hop.frag.out_ports[0][l]}, target,
                    hop.frag.neurons[l].delay);
                target = {hop.core, hop.axon_base + hop.frag.in_ports[0][l]};
            }
            if (e.src >= 0) {
                const LNode& src = nodes[static_cast<std::size_t>(e.src)];
                aim({src.core, src.neuron_base +
                                   src.frag.out_ports.at(e.src_port).at(e.src_base + l)},
                    target, e.sender_delay);
            } else {
                const std::uint32_t line =
                    g.input_ports[e.src_port].lines[e.src_base + l];
                if (net.input_taps[line].first != kUnrouted)
                    throw std::logic_error("compile: input line routed twice");
                net.input_taps[line] = target;
            }
        }
    }

    PlacementReport& rep = net.report;
    rep.n_fragments = static_cast<std::uint32_t>(nodes.size());
    rep.n_splitters = n_splitters;
    rep.n_delay_relays = n_delay_relays;
    for (std::size_t b = 0; b < core_axons.size(); ++b) {
        rep.axons_used += core_axons[b];
        rep.neurons_used += core_neurons[b];
    }
    std::uint32_t p_max = 0;
    for (const Population& pop : g.populations)
        p_max = std::max(p_max, pop.p);
    rep.adder_fanin_limit = p_max ? add_fanin_limit(c, p_max) : 0;
    rep.cancel_fanin_limit = p_max ? cancel_fanin_limit(c, p_max) : 0;
    for (const LNode& node : nodes) {
        rep.max_axon_types = std::max(rep.max_axon_types, node.frag.n_types());
        rep.placements.push_back({node.frag.kind, node.core, node.axon_base,
                                  static_cast<std::uint32_t>(node.frag.axons.size()),
                                  node.neuron_base,
                                  static_cast<std::uint32_t>(node.frag.neurons.size())});
    }
    rep.trees = trees;
    return net;
}

} // namespace

CompiledNetwork compile(const CircuitGraph& g, const TnConstraints& c)
{
    Lowering lw(g, c);
    return lw.run();
}

CircuitGraph compiled_to_graph(const CompiledNetwork& net)
{
    CircuitGraph g;
    std::vector<std::uint32_t> first(net.cores.size() + 1, 0);
    for (std::size_t b = 0; b < net.cores.size(); ++b)
        first[b + 1] = first[b] + net.cores[b].n_neurons();
    g.neurons.resize(first.back());
    g.population_of.assign(first.back(), kNoPopulation);

    // per (core, axon): the (column, synapse) pairs it drives; weights are
    // appended in ascending axon order so synapse indices are canonical
    std::vector<std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>>> sinks(
        net.cores.size());
    for (std::size_t b = 0; b < net.cores.size(); ++b) {
        const TnCore& core = net.cores[b];
        sinks[b].resize(core.n_axons());
        for (std::uint32_t a = 0; a < core.n_axons(); ++a) {
            for (std::uint32_t j = 0; j < core.n_neurons(); ++j) {
                if (!core.conn[a][j])
                    continue;
                NeuronSpec& spec = g.neurons[first[b] + j];
                sinks[b][a].emplace_back(
                    j, static_cast<std::uint32_t>(spec.weights.size()));
                spec.weights.push_back(core.neurons[j].sregs[core.axon_types[a]]);
            }
        }
        for (std::uint32_t j = 0; j < core.n_neurons(); ++j)
            g.neurons[first[b] + j].threshold = core.neurons[j].threshold;
    }

    for (std::size_t b = 0; b < net.cores.size(); ++b) {
        const TnCore& core = net.cores[b];
        for (std::uint32_t j = 0; j < core.n_neurons(); ++j) {
            const TnNeuronCfg& cfg = core.neurons[j];
            if (cfg.target != TnNeuronCfg::Target::Axon)
                continue;
            for (const auto& [col, syn] : sinks[cfg.target_core][cfg.target_axon]) {
                Route r;
                r.src = RouteSource::neuron(static_cast<NeuronId>(first[b] + j));
                r.target = first[cfg.target_core] + col;
                r.synapse = syn;
                r.delay = cfg.delay;
                g.routes.push_back(r);
            }
        }
    }

    g.n_inputs = net.n_inputs;
    InputPort port;
    port.name = "in";
    for (std::uint32_t l = 0; l < net.n_inputs; ++l) {
        port.lines.push_back(l);
        const auto [tc, ta] = net.input_taps[l];
        if (tc == std::numeric_limits<std::uint32_t>::max())
            continue;
        for (const auto& [col, syn] : sinks[tc][ta]) {
            Route r;
            r.src = RouteSource::input(l);
            r.target = first[tc] + col;
            r.synapse = syn;
            r.delay = 0;
            g.routes.push_back(r);
        }
    }
    g.input_ports.push_back(std::move(port));

    for (std::size_t ch = 0; ch < net.output_taps.size(); ++ch) {
        OutputChannel out;
        out.name = net.output_names[ch];
        for (const auto& [b, j] : net.output_taps[ch])
            out.neurons.push_back(first[b] + j);
        g.outputs.push_back(std::move(out));
    }
    g.validate();
    return g;
}

EquivalenceReport verify_equivalence(const CircuitGraph& g, std::uint32_t abstract_latency,
                                     const CompiledNetwork& net, const SpikeInput& stimulus,
                                     std::uint32_t frame_len, std::int64_t n_frames)
{
    EquivalenceReport rep;
    if (net.output_names.size() != g.outputs.size()) {
        rep.what = "output channel count differs";
        return rep;
    }
    for (std::size_t ch = 0; ch < g.outputs.size(); ++ch) {
        if (net.output_names[ch] != g.outputs[ch].name) {
            rep.what = "output channel names differ";
            rep.channel = static_cast<std::uint32_t>(ch);
            return rep;
        }
    }

    FrameWindows aw;
    aw.frame_len = frame_len;
    aw.n_frames = n_frames;
    aw.offsets = {static_cast<std::int64_t>(abstract_latency)};
    const auto abstract = run_frame_counts(g, stimulus, aw);

    const CircuitGraph hw = compiled_to_graph(net);
    FrameWindows cw;
    cw.frame_len = frame_len;
    cw.n_frames = n_frames;
    for (std::size_t ch = 0; ch < net.output_latency.size(); ++ch)
        cw.offsets.push_back(abstract_latency + net.output_latency[ch]);
    const auto compiled = run_frame_counts(hw, stimulus, cw);

    for (std::size_t ch = 0; ch < abstract.size(); ++ch) {
        for (std::int64_t t = 0; t < n_frames; ++t) {
            const std::int64_t av = abstract[ch][static_cast<std::size_t>(t)];
            const std::int64_t cv = compiled[ch][static_cast<std::size_t>(t)];
            if (av != cv) {
                rep.channel = static_cast<std::uint32_t>(ch);
                rep.frame = t;
                rep.abstract_count = av;
                rep.compiled_count = cv;
                rep.what = "channel '" + g.outputs[ch].name + "' frame " +
                           std::to_string(t) + ": abstract " + std::to_string(av) +
                           " vs compiled " + std::to_string(cv);
                return rep;
            }
        }
    }
    rep.ok = true;
    return rep;
}

std::string core_config_json(const CompiledNetwork& net)
{
    using json = nlohmann::ordered_json;
    json j;
    j["format"] = "tn-core-config/1";
    j["n_cores"] = net.cores.size();
    j["n_inputs"] = net.n_inputs;

    json taps = json::array();
    for (const auto& [core, axon] : net.input_taps) {
        if (core == std::numeric_limits<std::uint32_t>::max())
            taps.push_back(nullptr);
        else
            taps.push_back(json::array({core, axon}));
    }
    j["input_taps"] = std::move(taps);

    json outs = json::array();
    for (std::size_t ch = 0; ch < net.output_names.size(); ++ch) {
        json o;
        o["name"] = net.output_names[ch];
        o["latency"] = net.output_latency[ch];
        json t = json::array();
        for (const auto& [core, col] : net.output_taps[ch])
            t.push_back(json::array({core, col}));
        o["taps"] = std::move(t);
        outs.push_back(std::move(o));
    }
    j["outputs"] = std::move(outs);

    json cores = json::array();
    for (const TnCore& core : net.cores) {
        json cj;
        cj["axon_types"] = core.axon_types;
        cj["axon_labels"] = core.axon_labels;
        json neurons = json::array();
        for (std::size_t n = 0; n < core.neurons.size(); ++n) {
            const TnNeuronCfg& cfg = core.neurons[n];
            json nj;
            nj["label"] = core.neuron_labels[n];
            nj["sregs"] = cfg.sregs;
            nj["threshold"] = cfg.threshold;
            nj["delay"] = cfg.delay;
            switch (cfg.target) {
            case TnNeuronCfg::Target::None:
                nj["target"] = nullptr;
                break;
            case TnNeuronCfg::Target::Axon:
                nj["target"] = {{"core", cfg.target_core}, {"axon", cfg.target_axon}};
                break;
            case TnNeuronCfg::Target::Output:
                nj["target"] = {{"output", cfg.output_channel}};
                break;
            }
            neurons.push_back(std::move(nj));
        }
        cj["neurons"] = std::move(neurons);
        json rows = json::array();
        for (const auto& row : core.conn) {
            std::string bits(row.size(), '0');
            for (std::size_t i = 0; i < row.size(); ++i)
                if (row[i])
                    bits[i] = '1';
            rows.push_back(std::move(bits));
        }
        cj["connections"] = std::move(rows);
        cores.push_back(std::move(cj));
    }
    j["cores"] = std::move(cores);
    return j.dump(2);
}

std::string placement_report_json(const CompiledNetwork& net)
{
    using json = nlohmann::ordered_json;
    const PlacementReport& r = net.report;
    json j;
    j["cores_used"] = net.cores.size();
    j["fragments"] = r.n_fragments;
    j["splitters"] = r.n_splitters;
    j["delay_relays"] = r.n_delay_relays;
    j["axons_used"] = r.axons_used;
    j["neurons_used"] = r.neurons_used;
    j["max_axon_types"] = r.max_axon_types;
    j["adder_fanin_limit"] = r.adder_fanin_limit;
    j["cancel_fanin_limit"] = r.cancel_fanin_limit;
    json placements = json::array();
    for (const FragmentPlacement& p : r.placements) {
        json pj;
        pj["kind"] = p.kind;
        pj["core"] = p.core;
        pj["axons"] = json::array({p.axon_base, p.axon_count});
        pj["neurons"] = json::array({p.neuron_base, p.neuron_count});
        placements.push_back(std::move(pj));
    }
    j["placements"] = std::move(placements);
    json trees = json::array();
    for (const TreeChoice& t : r.trees) {
        json tj;
        tj["output"] = t.output;
        tj["fan_in"] = t.fan_in;
        tj["k"] = t.k;
        tj["internal_nodes"] = t.internal_nodes;
        tj["depth"] = t.depth;
        trees.push_back(std::move(tj));
    }
    j["trees"] = std::move(trees);
    return j.dump(2);
}

} // namespace spikelds
