#include "spikelds/adder_tree.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace spikelds {

std::uint32_t AdderTree::depth() const
{
    std::uint32_t d = 0;
    for (const auto& n : nodes)
        d = std::max(d, n.depth);
    return d;
}

std::vector<std::uint32_t> AdderTree::leaf_depths() const
{
    std::vector<std::uint32_t> out(n_leaves, 0);
    for (const auto& n : nodes)
        for (std::int32_t c : n.children)
            if (c < 0)
                out[static_cast<std::size_t>(~c)] = n.depth;
    return out;
}

AdderTree build_adder_tree(std::uint32_t n_inputs, std::uint32_t k)
{
    if (n_inputs < 1)
        throw std::invalid_argument("adder tree needs at least one input");
    if (k < 2)
        throw std::invalid_argument("adder tree fan-in must be at least 2");

    AdderTree t;
    t.n_leaves = n_inputs;
    t.k = k;
    if (n_inputs == 1)
        return t; // passthrough: the lone input feeds the target directly

    // FIFO queue of pending signals; take k at a time, emit a new internal
    // node, push its output at the back. Leaves drain first, so early leaves
    // sit deepest and the count is ceil((N-1)/(k-1)).
    std::deque<std::int32_t> pending;
    for (std::uint32_t i = 0; i < n_inputs; ++i)
        pending.push_back(~static_cast<std::int32_t>(i));
    while (pending.size() > 1) {
        AdderTree::Node node;
        const std::size_t take = std::min<std::size_t>(k, pending.size());
        for (std::size_t i = 0; i < take; ++i) {
            node.children.push_back(pending.front());
            pending.pop_front();
        }
        t.nodes.push_back(std::move(node));
        pending.push_back(static_cast<std::int32_t>(t.nodes.size() - 1));
    }

    // depths: root = 1, children one level below their parent
    std::vector<std::uint32_t> depth(t.nodes.size(), 1);
    for (std::size_t i = t.nodes.size(); i-- > 0;) {
        t.nodes[i].depth = depth[i];
        for (std::int32_t c : t.nodes[i].children)
            if (c >= 0)
                depth[static_cast<std::size_t>(c)] = depth[i] + 1;
    }
    return t;
}

} // namespace spikelds
