#pragma once

#include <cstdint>
#include <vector>

namespace spikelds {

// Fan-in legalization: an N-way accumulation is decomposed into a tree of
// k-way nodes. Greedy FIFO grouping gives ceil((N-1)/(k-1)) internal nodes
// (every node except possibly the root takes exactly k children). Leaves can
// end up at different depths; level_of reports per-leaf depth so the caller
// can equalize path latencies with delays.
struct AdderTree {
    struct Node {
        // children: leaf inputs are encoded as ~leaf_index (negative),
        // internal nodes as their index into `nodes`.
        std::vector<std::int32_t> children;
        std::uint32_t depth = 1; // levels up to the root; root has depth 1
    };

    std::vector<Node> nodes; // topological: children precede parents; root last
    std::uint32_t n_leaves = 0;
    std::uint32_t k = 2;

    bool passthrough() const { return nodes.empty(); } // N == 1
    std::int32_t root() const { return static_cast<std::int32_t>(nodes.size()) - 1; }
    std::uint32_t n_internal() const { return static_cast<std::uint32_t>(nodes.size()); }
    std::uint32_t depth() const; // max node depth (0 for passthrough)

    // Levels between leaf i and the root (1 = direct child of nothing above).
    std::vector<std::uint32_t> leaf_depths() const;
};

// Requires n_inputs >= 1 and k >= 2.
AdderTree build_adder_tree(std::uint32_t n_inputs, std::uint32_t k);

} // namespace spikelds
