#include "spikelds/compiler.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

namespace spikelds {

namespace {

std::uint16_t u16(std::size_t v) { return static_cast<std::uint16_t>(v); }

} // namespace

std::uint32_t Fragment::n_types() const
{
    std::set<std::uint8_t> t;
    for (const auto& a : axons)
        t.insert(a.type);
    return static_cast<std::uint32_t>(t.size());
}

void Fragment::check(const TnConstraints& c) const
{
    if (axons.size() > c.axons)
        throw std::invalid_argument(kind + ": axon budget exceeded (" +
                                    std::to_string(axons.size()) + " > " +
                                    std::to_string(c.axons) + ")");
    if (neurons.size() > c.neurons)
        throw std::invalid_argument(kind + ": neuron budget exceeded (" +
                                    std::to_string(neurons.size()) + " > " +
                                    std::to_string(c.neurons) + ")");
    for (const auto& a : axons)
        if (a.type >= c.axon_types)
            throw std::invalid_argument(kind + ": axon type out of range");
    for (const auto& n : neurons) {
        for (std::int32_t s : n.sregs)
            if (s < c.weight_min || s > c.weight_max)
                throw std::invalid_argument(kind + ": weight register out of range");
        if (n.threshold < 1 || n.threshold > c.threshold_max)
            throw std::invalid_argument(kind + ": threshold out of range");
        if (n.delay > c.delay_max)
            throw std::invalid_argument(kind + ": delay register out of range");
        if (n.feeds_axon >= 0 && static_cast<std::size_t>(n.feeds_axon) >= axons.size())
            throw std::invalid_argument(kind + ": dangling internal axon");
    }
    for (const auto& [a, n] : bits)
        if (a >= axons.size() || n >= neurons.size())
            throw std::invalid_argument(kind + ": connection bit out of range");
    for (const auto& port : in_ports)
        for (std::uint32_t a : port)
            if (a >= axons.size())
                throw std::invalid_argument(kind + ": input port axon out of range");
    for (const auto& port : out_ports)
        for (std::uint32_t n : port)
            if (n >= neurons.size())
                throw std::invalid_argument(kind + ": output port neuron out of range");
}

// Ladder multiplication crossbar. Axon rows:
//   [in lines]            type 0, weight register +alpha on ladder columns
//   [off rows, 1 per rung] type 1, -beta on ladder columns, +1 on relays
//   [diag rows]           type 2, +beta on ladder columns (rung i needs i-1 rows)
// Rung i >= 2 is duplicated into i columns (one feeding its off row, the rest
// feeding its replicated diag rows) because a neuron drives only one axon.
// The off row of rung i doubles as relay i's drive line.
Fragment synth_mult_crossbar(RationalWeight w, std::uint32_t p, std::uint32_t in_lines)
{
    if (p < 1 || p > 21)
        throw std::invalid_argument("mult fragment: p must be in [1, 21]");
    if (w.num < 0 || w.den < 1)
        throw std::invalid_argument("mult fragment: bad weight");

    Fragment f;
    f.kind = "mult(" + std::to_string(w.num) + "/" + std::to_string(w.den) + ",p=" +
             std::to_string(p) + ")";
    f.internal_latency = 1;

    std::vector<std::uint32_t> in_axons;
    for (std::uint32_t l = 0; l < in_lines; ++l) {
        in_axons.push_back(static_cast<std::uint32_t>(f.axons.size()));
        f.axons.push_back({0, "in" + std::to_string(l)});
    }
    std::vector<std::uint32_t> off(p);
    for (std::uint32_t i = 0; i < p; ++i) {
        off[i] = static_cast<std::uint32_t>(f.axons.size());
        f.axons.push_back({1, "off" + std::to_string(i + 1)});
    }
    // rung i carries self-excitation (i-1)*beta, replicated as i-1 unit rows
    std::vector<std::vector<std::uint32_t>> diag(p);
    for (std::uint32_t i = 2; i <= p; ++i)
        for (std::uint32_t c = 0; c + 1 < i; ++c) {
            diag[i - 1].push_back(static_cast<std::uint32_t>(f.axons.size()));
            f.axons.push_back({2, "diag" + std::to_string(i) + "." + std::to_string(c)});
        }

    // ladder columns: rung i appears i times (1 off feeder + i-1 diag feeders)
    std::vector<std::vector<std::uint32_t>> rung_cols(p);
    for (std::uint32_t i = 1; i <= p; ++i) {
        for (std::uint32_t c = 0; c < i; ++c) {
            Fragment::Neuron n;
            n.sregs = {w.num, -w.den, w.den, 0};
            n.threshold = static_cast<std::int64_t>(i) * w.den;
            n.feeds_axon = c == 0 ? static_cast<std::int32_t>(off[i - 1])
                                  : static_cast<std::int32_t>(diag[i - 1][c - 1]);
            n.label = "m" + std::to_string(i) + (c ? "." + std::to_string(c) : "");
            rung_cols[i - 1].push_back(static_cast<std::uint32_t>(f.neurons.size()));
            f.neurons.push_back(std::move(n));
        }
    }
    std::vector<std::uint32_t> relays(p);
    for (std::uint32_t i = 0; i < p; ++i) {
        Fragment::Neuron n;
        n.sregs = {0, 1, 0, 0};
        n.threshold = 1;
        n.label = "relay" + std::to_string(i + 1);
        relays[i] = static_cast<std::uint32_t>(f.neurons.size());
        f.neurons.push_back(std::move(n));
    }

    for (std::uint32_t a : in_axons)
        for (const auto& cols : rung_cols)
            for (std::uint32_t c : cols)
                f.bits.emplace_back(u16(a), u16(c));
    for (std::uint32_t i = 0; i < p; ++i) {
        for (std::uint32_t j = 0; j < p; ++j)
            if (j != i)
                for (std::uint32_t c : rung_cols[j])
                    f.bits.emplace_back(u16(off[i]), u16(c));
        f.bits.emplace_back(u16(off[i]), u16(relays[i]));
        for (std::uint32_t a : diag[i])
            for (std::uint32_t c : rung_cols[i])
                f.bits.emplace_back(u16(a), u16(c));
    }

    f.in_ports.push_back(in_axons);
    f.out_ports.push_back(relays);
    return f;
}

Fragment synth_small_w_crossbar(RationalWeight w, std::uint32_t p, std::uint32_t in_lines)
{
    if (w.num < 0 || w.den < 1)
        throw std::invalid_argument("small-w fragment: bad weight");
    if (static_cast<std::int64_t>(w.num) * p > w.den)
        throw std::invalid_argument("small-w fragment requires w <= 1/p");

    Fragment f;
    f.kind = "mult-small(" + std::to_string(w.num) + "/" + std::to_string(w.den) + ")";
    f.internal_latency = 0;
    std::vector<std::uint32_t> in_axons;
    for (std::uint32_t l = 0; l < in_lines; ++l) {
        in_axons.push_back(static_cast<std::uint32_t>(f.axons.size()));
        f.axons.push_back({0, "in" + std::to_string(l)});
    }
    Fragment::Neuron n;
    n.sregs = {w.num, 0, 0, 0};
    n.threshold = w.den;
    n.label = "m";
    f.neurons.push_back(std::move(n));
    for (std::uint32_t a : in_axons)
        f.bits.emplace_back(u16(a), u16(0));
    f.in_ports.push_back(in_axons);
    f.out_ports.push_back({0});
    return f;
}

// Unit-threshold accumulation ladder. Diagonal weights are i-1 <= p-1, small
// enough for a single register, so only the off rows are replicated per rung.
Fragment synth_add_crossbar(const std::vector<std::uint32_t>& port_widths, std::uint32_t p)
{
    if (p < 1 || p > 21)
        throw std::invalid_argument("add fragment: p must be in [1, 21]");

    Fragment f;
    f.kind = "add(p=" + std::to_string(p) + ")";
    f.internal_latency = 1;

    for (std::size_t k = 0; k < port_widths.size(); ++k) {
        std::vector<std::uint32_t> axons;
        for (std::uint32_t l = 0; l < port_widths[k]; ++l) {
            axons.push_back(static_cast<std::uint32_t>(f.axons.size()));
            f.axons.push_back({0, "in" + std::to_string(k) + "." + std::to_string(l)});
        }
        f.in_ports.push_back(std::move(axons));
    }
    std::vector<std::uint32_t> off(p);
    for (std::uint32_t i = 0; i < p; ++i) {
        off[i] = static_cast<std::uint32_t>(f.axons.size());
        f.axons.push_back({1, "off" + std::to_string(i + 1)});
    }
    std::vector<std::uint32_t> diag(p, 0);
    for (std::uint32_t i = 2; i <= p; ++i) {
        diag[i - 1] = static_cast<std::uint32_t>(f.axons.size());
        f.axons.push_back({2, "diag" + std::to_string(i)});
    }

    std::vector<std::vector<std::uint32_t>> rung_cols(p);
    for (std::uint32_t i = 1; i <= p; ++i) {
        const std::uint32_t twins = i == 1 ? 1 : 2;
        for (std::uint32_t c = 0; c < twins; ++c) {
            Fragment::Neuron n;
            n.sregs = {1, -1, static_cast<std::int32_t>(i) - 1, 0};
            n.threshold = i;
            n.feeds_axon = c == 0 ? static_cast<std::int32_t>(off[i - 1])
                                  : static_cast<std::int32_t>(diag[i - 1]);
            n.label = "a" + std::to_string(i) + (c ? "b" : "");
            rung_cols[i - 1].push_back(static_cast<std::uint32_t>(f.neurons.size()));
            f.neurons.push_back(std::move(n));
        }
    }
    std::vector<std::uint32_t> relays(p);
    for (std::uint32_t i = 0; i < p; ++i) {
        Fragment::Neuron n;
        n.sregs = {0, 1, 0, 0};
        n.threshold = 1;
        n.label = "relay" + std::to_string(i + 1);
        relays[i] = static_cast<std::uint32_t>(f.neurons.size());
        f.neurons.push_back(std::move(n));
    }

    for (const auto& port : f.in_ports)
        for (std::uint32_t a : port)
            for (const auto& cols : rung_cols)
                for (std::uint32_t c : cols)
                    f.bits.emplace_back(u16(a), u16(c));
    for (std::uint32_t i = 0; i < p; ++i) {
        for (std::uint32_t j = 0; j < p; ++j)
            if (j != i)
                for (std::uint32_t c : rung_cols[j])
                    f.bits.emplace_back(u16(off[i]), u16(c));
        f.bits.emplace_back(u16(off[i]), u16(relays[i]));
        if (i >= 1)
            for (std::uint32_t c : rung_cols[i])
                f.bits.emplace_back(u16(diag[i]), u16(c));
    }
    f.out_ports.push_back(relays);
    return f;
}

// Two mirrored unit ladders sharing three axon types. Type 0 rows add to the
// plus ladder, subtract from the minus ladder and drive minus-side relays;
// they serve both the plus input lines and the minus ladder's own firing
// rows (which must inhibit peers, restore the plus ladder, and mirror out).
// Type 1 is the sign mirror; type 2 carries both diagonals.
Fragment synth_cancel_crossbar(const std::vector<std::uint32_t>& plus_widths,
                               const std::vector<std::uint32_t>& minus_widths,
                               std::uint32_t p)
{
    if (p < 1 || p > 21)
        throw std::invalid_argument("cancel fragment: p must be in [1, 21]");

    Fragment f;
    f.kind = "cancel(p=" + std::to_string(p) + ")";
    f.internal_latency = 1;

    auto add_ports = [&](const std::vector<std::uint32_t>& widths, std::uint8_t type,
                         const char* tag) {
        for (std::size_t k = 0; k < widths.size(); ++k) {
            std::vector<std::uint32_t> axons;
            for (std::uint32_t l = 0; l < widths[k]; ++l) {
                axons.push_back(static_cast<std::uint32_t>(f.axons.size()));
                f.axons.push_back(
                    {type, tag + std::to_string(k) + "." + std::to_string(l)});
            }
            f.in_ports.push_back(std::move(axons));
        }
    };
    add_ports(plus_widths, 0, "in+");
    add_ports(minus_widths, 1, "in-");

    std::vector<std::uint32_t> off_plus(p), off_minus(p);
    for (std::uint32_t i = 0; i < p; ++i) {
        off_plus[i] = static_cast<std::uint32_t>(f.axons.size());
        f.axons.push_back({1, "off+" + std::to_string(i + 1)});
    }
    for (std::uint32_t i = 0; i < p; ++i) {
        off_minus[i] = static_cast<std::uint32_t>(f.axons.size());
        f.axons.push_back({0, "off-" + std::to_string(i + 1)});
    }
    std::vector<std::uint32_t> diag_plus(p, 0), diag_minus(p, 0);
    for (std::uint32_t i = 2; i <= p; ++i) {
        diag_plus[i - 1] = static_cast<std::uint32_t>(f.axons.size());
        f.axons.push_back({2, "diag+" + std::to_string(i)});
    }
    for (std::uint32_t i = 2; i <= p; ++i) {
        diag_minus[i - 1] = static_cast<std::uint32_t>(f.axons.size());
        f.axons.push_back({2, "diag-" + std::to_string(i)});
    }

    auto make_ladder = [&](const char* tag, bool is_plus,
                           const std::vector<std::uint32_t>& off,
                           const std::vector<std::uint32_t>& diag) {
        std::vector<std::vector<std::uint32_t>> rung_cols(p);
        for (std::uint32_t i = 1; i <= p; ++i) {
            const std::uint32_t twins = i == 1 ? 1 : 2;
            for (std::uint32_t c = 0; c < twins; ++c) {
                Fragment::Neuron n;
                // type 0 adds to plus / subtracts from minus; type 1 mirrored
                n.sregs = {is_plus ? 1 : -1, is_plus ? -1 : 1,
                           static_cast<std::int32_t>(i) - 1, 0};
                n.threshold = i;
                n.feeds_axon = c == 0 ? static_cast<std::int32_t>(off[i - 1])
                                      : static_cast<std::int32_t>(diag[i - 1]);
                n.label = tag + std::to_string(i) + (c ? "b" : "");
                rung_cols[i - 1].push_back(static_cast<std::uint32_t>(f.neurons.size()));
                f.neurons.push_back(std::move(n));
            }
        }
        return rung_cols;
    };
    const auto plus_cols = make_ladder("c+", true, off_plus, diag_plus);
    const auto minus_cols = make_ladder("c-", false, off_minus, diag_minus);

    // relays listen to their own side's off rows: plus off rows are type 1,
    // minus off rows type 0
    std::vector<std::uint32_t> relay_plus(p), relay_minus(p);
    for (std::uint32_t i = 0; i < p; ++i) {
        Fragment::Neuron n;
        n.sregs = {0, 1, 0, 0};
        n.threshold = 1;
        n.label = "relay+" + std::to_string(i + 1);
        relay_plus[i] = static_cast<std::uint32_t>(f.neurons.size());
        f.neurons.push_back(std::move(n));
    }
    for (std::uint32_t i = 0; i < p; ++i) {
        Fragment::Neuron n;
        n.sregs = {1, 0, 0, 0};
        n.threshold = 1;
        n.label = "relay-" + std::to_string(i + 1);
        relay_minus[i] = static_cast<std::uint32_t>(f.neurons.size());
        f.neurons.push_back(std::move(n));
    }

    auto both_ladders = [&](std::uint32_t a) {
        for (const auto& cols : plus_cols)
            for (std::uint32_t c : cols)
                f.bits.emplace_back(u16(a), u16(c));
        for (const auto& cols : minus_cols)
            for (std::uint32_t c : cols)
                f.bits.emplace_back(u16(a), u16(c));
    };
    for (const auto& port : f.in_ports)
        for (std::uint32_t a : port)
            both_ladders(a);

    // firing row of rung i: inhibit own peers, restore the whole other side,
    // drive own relay. Own-rung columns are excluded (they already subtracted
    // their threshold when firing).
    auto wire_off = [&](const std::vector<std::uint32_t>& off,
                        const std::vector<std::vector<std::uint32_t>>& own,
                        const std::vector<std::vector<std::uint32_t>>& other,
                        const std::vector<std::uint32_t>& relays) {
        for (std::uint32_t i = 0; i < p; ++i) {
            for (std::uint32_t j = 0; j < p; ++j)
                if (j != i)
                    for (std::uint32_t c : own[j])
                        f.bits.emplace_back(u16(off[i]), u16(c));
            for (const auto& cols : other)
                for (std::uint32_t c : cols)
                    f.bits.emplace_back(u16(off[i]), u16(c));
            f.bits.emplace_back(u16(off[i]), u16(relays[i]));
        }
    };
    wire_off(off_plus, plus_cols, minus_cols, relay_plus);
    wire_off(off_minus, minus_cols, plus_cols, relay_minus);

    for (std::uint32_t i = 1; i < p; ++i) {
        for (std::uint32_t c : plus_cols[i])
            f.bits.emplace_back(u16(diag_plus[i]), u16(c));
        for (std::uint32_t c : minus_cols[i])
            f.bits.emplace_back(u16(diag_minus[i]), u16(c));
    }

    f.out_ports.push_back(relay_plus);
    f.out_ports.push_back(relay_minus);
    return f;
}

Fragment synth_splitter(std::uint32_t width, std::uint32_t fan)
{
    if (fan < 1 || width < 1)
        throw std::invalid_argument("splitter needs width >= 1 and fan >= 1");
    Fragment f;
    f.kind = "splitter(" + std::to_string(width) + "x" + std::to_string(fan) + ")";
    f.internal_latency = 0;
    std::vector<std::uint32_t> in_axons;
    for (std::uint32_t l = 0; l < width; ++l) {
        in_axons.push_back(static_cast<std::uint32_t>(f.axons.size()));
        f.axons.push_back({0, "in" + std::to_string(l)});
    }
    for (std::uint32_t e = 0; e < fan; ++e) {
        std::vector<std::uint32_t> cols;
        for (std::uint32_t l = 0; l < width; ++l) {
            Fragment::Neuron n;
            n.sregs = {1, 0, 0, 0};
            n.threshold = 1;
            n.label = "copy" + std::to_string(e) + "." + std::to_string(l);
            cols.push_back(static_cast<std::uint32_t>(f.neurons.size()));
            f.neurons.push_back(std::move(n));
            f.bits.emplace_back(u16(in_axons[l]), u16(cols.back()));
        }
        f.out_ports.push_back(std::move(cols));
    }
    f.in_ports.push_back(std::move(in_axons));
    return f;
}

} // namespace spikelds
