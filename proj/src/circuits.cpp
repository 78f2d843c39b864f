#include "spikelds/circuits.hpp"

#include <stdexcept>
#include <string>

namespace spikelds {

namespace detail {

std::vector<InternalEdge> ladder_edges(const Population& pop)
{
    std::vector<InternalEdge> out;
    const std::uint32_t p = pop.p;
    for (std::uint32_t j = 0; j < p; ++j) {
        for (std::uint32_t i = 0; i < p; ++i) {
            if (i == j) {
                if (i > 0)
                    out.push_back({pop.neurons[j], pop.neurons[i],
                                   static_cast<std::int32_t>(i) *
                                       static_cast<std::int32_t>(pop.beta)});
            } else {
                out.push_back({pop.neurons[j], pop.neurons[i],
                               -static_cast<std::int32_t>(pop.beta)});
            }
        }
    }
    return out;
}

std::vector<InternalEdge> cancel_pair_edges(const Population& plus, const Population& minus)
{
    // each half is a unit ladder; on top of that, every spike of one half
    // restores the other half by +1 so the settled potentials sum to zero
    std::vector<InternalEdge> out = ladder_edges(plus);
    std::vector<InternalEdge> mn = ladder_edges(minus);
    out.insert(out.end(), mn.begin(), mn.end());
    for (std::uint32_t j = 0; j < plus.p; ++j)
        for (std::uint32_t i = 0; i < minus.p; ++i)
            out.push_back({plus.neurons[j], minus.neurons[i], 1});
    for (std::uint32_t j = 0; j < minus.p; ++j)
        for (std::uint32_t i = 0; i < plus.p; ++i)
            out.push_back({minus.neurons[j], plus.neurons[i], 1});
    return out;
}

} // namespace detail

namespace {

class Builder {
public:
    CircuitGraph g;

    std::uint32_t add_lines(std::uint32_t count, const std::string& port_name)
    {
        InputPort port;
        port.name = port_name;
        const std::uint32_t first = g.n_inputs;
        for (std::uint32_t i = 0; i < count; ++i)
            port.lines.push_back(first + i);
        g.n_inputs += count;
        g.input_ports.push_back(std::move(port));
        return first;
    }

    std::uint32_t add_population(Role role, std::uint32_t p, std::int64_t alpha,
                                 std::int64_t beta)
    {
        if (p < 1 || beta < 1)
            throw std::invalid_argument("population needs p >= 1 and beta >= 1");
        Population pop;
        pop.role = role;
        pop.p = p;
        pop.alpha = alpha;
        pop.beta = beta;
        const std::uint32_t pid = static_cast<std::uint32_t>(g.populations.size());
        for (std::uint32_t i = 0; i < p; ++i) {
            NeuronSpec n;
            n.threshold = static_cast<std::int64_t>(i + 1) * beta;
            pop.neurons.push_back(static_cast<NeuronId>(g.neurons.size()));
            g.neurons.push_back(std::move(n));
            g.population_of.push_back(pid);
        }
        g.populations.push_back(std::move(pop));
        for (const auto& e : detail::ladder_edges(g.populations[pid]))
            connect(RouteSource::neuron(e.src), e.dst, e.weight, 0);
        return pid;
    }

    void make_cancel_pair(std::uint32_t plus_pid, std::uint32_t minus_pid)
    {
        Population& pl = g.populations[plus_pid];
        Population& mi = g.populations[minus_pid];
        pl.partner = static_cast<std::int32_t>(minus_pid);
        mi.partner = static_cast<std::int32_t>(plus_pid);
        for (std::uint32_t j = 0; j < pl.p; ++j)
            for (std::uint32_t i = 0; i < mi.p; ++i)
                connect(RouteSource::neuron(pl.neurons[j]), mi.neurons[i], 1, 0);
        for (std::uint32_t j = 0; j < mi.p; ++j)
            for (std::uint32_t i = 0; i < pl.p; ++i)
                connect(RouteSource::neuron(mi.neurons[j]), pl.neurons[i], 1, 0);
    }

    void connect(RouteSource src, NeuronId dst, std::int32_t weight, std::uint32_t delay)
    {
        Route r;
        r.src = src;
        r.target = dst;
        r.synapse = static_cast<std::uint32_t>(g.neurons[dst].weights.size());
        r.delay = delay;
        g.neurons[dst].weights.push_back(weight);
        g.routes.push_back(r);
    }

    // every line of [first, first+count) to every neuron of pop
    void connect_lines(std::uint32_t first, std::uint32_t count, std::uint32_t pid,
                       std::int32_t weight, std::uint32_t delay = 0)
    {
        for (std::uint32_t l = 0; l < count; ++l)
            for (NeuronId n : g.populations[pid].neurons)
                connect(RouteSource::input(first + l), n, weight, delay);
    }

    // every neuron of src pop to every neuron of dst pop
    void connect_pops(std::uint32_t src_pid, std::uint32_t dst_pid, std::int32_t weight,
                      std::uint32_t delay = 0)
    {
        for (NeuronId s : g.populations[src_pid].neurons)
            for (NeuronId d : g.populations[dst_pid].neurons)
                connect(RouteSource::neuron(s), d, weight, delay);
    }

    void add_output(const std::string& name, std::uint32_t pid)
    {
        OutputChannel ch;
        ch.name = name;
        ch.neurons = g.populations[pid].neurons;
        g.outputs.push_back(std::move(ch));
    }

    CircuitGraph finish()
    {
        g.validate();
        return std::move(g);
    }
};

void check_pop_size(std::uint32_t p)
{
    if (p < 1 || p > 21)
        throw std::invalid_argument("population size must be in [1, 21]");
}

} // namespace

Eigen::MatrixXd RationalMatrix::values() const
{
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            out(i, j) = at(i, j).value();
    return out;
}

RationalMatrix approx_matrix(const Eigen::MatrixXd& w, RationalBounds bounds)
{
    RationalMatrix out(w.rows(), w.cols());
    for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            out.at(i, j) = approx_weight(w(i, j), bounds);
    return out;
}

CircuitGraph build_scalar_mult(RationalWeight w, std::uint32_t p)
{
    check_pop_size(p);
    if (w.num < 0 || w.den < 1 || w.num > w.den)
        throw std::invalid_argument("multiplier weight must satisfy 0 <= w <= 1");
    Builder b;
    const std::uint32_t in = b.add_lines(p, "in");
    const std::uint32_t pid = b.add_population(Role::Mult, p, w.num, w.den);
    if (w.num > 0)
        b.connect_lines(in, p, pid, w.num);
    b.add_output("out", pid);
    return b.finish();
}

CircuitGraph build_addition(std::uint32_t n_ports, std::uint32_t p)
{
    check_pop_size(p);
    if (n_ports < 1)
        throw std::invalid_argument("adder needs at least one port");
    Builder b;
    std::vector<std::uint32_t> firsts;
    for (std::uint32_t k = 0; k < n_ports; ++k)
        firsts.push_back(b.add_lines(p, "in" + std::to_string(k)));
    const std::uint32_t pid = b.add_population(Role::Add, p, 1, 1);
    for (std::uint32_t k = 0; k < n_ports; ++k)
        b.connect_lines(firsts[k], p, pid, 1);
    b.add_output("out", pid);
    return b.finish();
}

CircuitGraph build_cancellation(std::uint32_t n_ports_per_sign, std::uint32_t p)
{
    check_pop_size(p);
    if (n_ports_per_sign < 1)
        throw std::invalid_argument("cancellation needs at least one port per sign");
    Builder b;
    std::vector<std::uint32_t> plus_firsts, minus_firsts;
    for (std::uint32_t k = 0; k < n_ports_per_sign; ++k)
        plus_firsts.push_back(b.add_lines(p, "plus" + std::to_string(k)));
    for (std::uint32_t k = 0; k < n_ports_per_sign; ++k)
        minus_firsts.push_back(b.add_lines(p, "minus" + std::to_string(k)));
    const std::uint32_t plus = b.add_population(Role::Cancel, p, 1, 1);
    const std::uint32_t minus = b.add_population(Role::Cancel, p, 1, 1);
    b.make_cancel_pair(plus, minus);
    for (std::uint32_t k = 0; k < n_ports_per_sign; ++k) {
        b.connect_lines(plus_firsts[k], p, plus, 1);
        b.connect_lines(plus_firsts[k], p, minus, -1);
        b.connect_lines(minus_firsts[k], p, minus, 1);
        b.connect_lines(minus_firsts[k], p, plus, -1);
    }
    b.add_output("out+", plus);
    b.add_output("out-", minus);
    return b.finish();
}

MatvecCircuit build_matvec(const Eigen::MatrixXd& w, const CodecConfig& cfg,
                           RationalBounds bounds)
{
    cfg.validate();
    const std::uint32_t p = cfg.pop_size;
    if ((w.array() < 0.0).any())
        throw std::invalid_argument("matvec weights must be nonnegative");
    if ((w.array() > 1.0).any())
        throw std::invalid_argument("matvec weights above 1 are not representable");

    MatvecCircuit mc;
    mc.w_rational = approx_matrix(w, bounds);
    mc.w_realized = mc.w_rational.values();

    Builder b;
    std::vector<std::uint32_t> in_firsts;
    for (Eigen::Index j = 0; j < w.cols(); ++j)
        in_firsts.push_back(b.add_lines(p, "in" + std::to_string(j)));

    // one mult population per nonzero entry, then a per-row adder
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        std::vector<std::uint32_t> row_pids;
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            const RationalWeight r = mc.w_rational.at(i, j);
            if (r.num == 0)
                continue;
            const std::uint32_t pid = b.add_population(Role::Mult, p, r.num, r.den);
            b.connect_lines(in_firsts[static_cast<std::size_t>(j)], p, pid, r.num);
            row_pids.push_back(pid);
        }
        const std::uint32_t acc = b.add_population(Role::Add, p, 1, 1);
        for (std::uint32_t pid : row_pids)
            b.connect_pops(pid, acc, 1);
        b.add_output("out" + std::to_string(i), acc);
    }
    mc.graph = b.finish();
    return mc;
}

TransformedLds transform_lds(const LdsSpec& lds)
{
    if (lds.a.rows() != lds.a.cols() || lds.b.rows() != lds.a.rows())
        throw std::invalid_argument("bad system dimensions");
    const Eigen::Index m = lds.a.rows();
    const Eigen::Index n = lds.b.cols();
    const Eigen::MatrixXd ap = lds.a.cwiseMax(0.0), an = (-lds.a).cwiseMax(0.0);
    const Eigen::MatrixXd bp = lds.b.cwiseMax(0.0), bn = (-lds.b).cwiseMax(0.0);
    TransformedLds t;
    t.a_tilde.resize(2 * m, 2 * m);
    t.a_tilde << ap, an, an, ap;
    t.b_tilde.resize(2 * m, 2 * n);
    t.b_tilde << bp, bn, bn, bp;
    t.source = lds;
    return t;
}

SpikingLds build_spiking_lds(const TransformedLds& t, const CodecConfig& cfg,
                             bool use_cancellation, RationalBounds bounds)
{
    cfg.validate();
    const Eigen::Index m = t.a_tilde.rows() / 2;
    const Eigen::Index n = t.b_tilde.cols() / 2;
    if (t.a_tilde.rows() != 2 * m || t.b_tilde.rows() != 2 * m || t.b_tilde.cols() != 2 * n)
        throw std::invalid_argument("transformed system has inconsistent dimensions");

    SpikingLds s;
    s.codec = cfg;
    s.cancellation = use_cancellation;
    s.m = static_cast<std::uint32_t>(m);
    s.n = static_cast<std::uint32_t>(n);
    if (cfg.frame_len <= s.latency)
        throw std::invalid_argument("frame too short: the recurrent path needs "
                                    "frame_len > pipeline latency");
    const std::uint32_t fb_delay = cfg.frame_len - s.latency; // route delay, +1 transit
    const std::uint32_t p = cfg.pop_size;

    // quantize the signed magnitudes once so both mirrored placements of an
    // entry realize the same weight
    if ((t.source.a.cwiseAbs().array() > 1.0).any() ||
        (t.source.b.cwiseAbs().array() > 1.0).any())
        throw std::invalid_argument("entries with magnitude above 1 are not representable");
    s.a_rational = approx_matrix(t.source.a.cwiseAbs(), bounds);
    s.b_rational = approx_matrix(t.source.b.cwiseAbs(), bounds);
    s.a_realized = s.a_rational.values().cwiseProduct(
        t.source.a.unaryExpr([](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }));
    s.b_realized = s.b_rational.values().cwiseProduct(
        t.source.b.unaryExpr([](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }));

    Builder b;
    // input line layout must match the channel codec: plus then minus per channel
    std::vector<std::uint32_t> u_plus(n), u_minus(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        u_plus[j] = b.add_lines(p, "u+" + std::to_string(j));
        u_minus[j] = b.add_lines(p, "u-" + std::to_string(j));
    }

    // state accumulators: cancellation pairs or plain adders per half
    std::vector<std::uint32_t> acc(2 * static_cast<std::size_t>(m));
    if (use_cancellation) {
        for (Eigen::Index i = 0; i < m; ++i) {
            acc[i] = b.add_population(Role::Cancel, p, 1, 1);
            acc[i + m] = b.add_population(Role::Cancel, p, 1, 1);
            b.make_cancel_pair(acc[i], acc[i + m]);
        }
    } else {
        for (Eigen::Index r = 0; r < 2 * m; ++r)
            acc[r] = b.add_population(Role::Add, p, 1, 1);
    }

    auto feed_accumulator = [&](std::uint32_t mult_pid, Eigen::Index row) {
        if (!use_cancellation) {
            b.connect_pops(mult_pid, acc[row], 1);
            return;
        }
        const Eigen::Index i = row % m;
        const std::uint32_t own = acc[row < m ? i : i + m];
        const std::uint32_t other = acc[row < m ? i + m : i];
        b.connect_pops(mult_pid, own, 1);
        b.connect_pops(mult_pid, other, -1);
    };

    // per nonzero of a_tilde: mult population fed by the state channel of its
    // column, delayed one frame end to end. The block structure mirrors every
    // entry at (r, c) to (r+m, (c+m) mod 2m) with the same weight; creating
    // the two back to back keeps each accumulator's plus/minus feed lists
    // aligned, so downstream fan-in grouping pairs the opposite-sign streams.
    for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index c = 0; c < 2 * m; ++c) {
            if (t.a_tilde(r, c) <= 0.0)
                continue;
            const RationalWeight w = s.a_rational.at(r, c % m);
            if (w.num == 0)
                continue;
            const std::uint32_t pid = b.add_population(Role::Mult, p, w.num, w.den);
            b.connect_pops(acc[c], pid, w.num, fb_delay);
            feed_accumulator(pid, r);
            const Eigen::Index cm = (c + m) % (2 * m);
            const std::uint32_t mirror = b.add_population(Role::Mult, p, w.num, w.den);
            b.connect_pops(acc[cm], mirror, w.num, fb_delay);
            feed_accumulator(mirror, r + m);
        }
    }

    // per nonzero of b_tilde: mult population fed by an input port, mirrored
    // the same way
    for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index c = 0; c < 2 * n; ++c) {
            if (t.b_tilde(r, c) <= 0.0)
                continue;
            const RationalWeight w = s.b_rational.at(r, c % n);
            if (w.num == 0)
                continue;
            const std::uint32_t pid = b.add_population(Role::Mult, p, w.num, w.den);
            b.connect_lines(c < n ? u_plus[c] : u_minus[c - n], p, pid, w.num);
            feed_accumulator(pid, r);
            const Eigen::Index cm = (c + n) % (2 * n);
            const std::uint32_t mirror = b.add_population(Role::Mult, p, w.num, w.den);
            b.connect_lines(cm < n ? u_plus[cm] : u_minus[cm - n], p, mirror, w.num);
            feed_accumulator(mirror, r + m);
        }
    }

    // decode order: all plus channels first, then all minus channels
    for (Eigen::Index i = 0; i < m; ++i)
        b.add_output("x+" + std::to_string(i), acc[i]);
    for (Eigen::Index i = 0; i < m; ++i)
        b.add_output("x-" + std::to_string(i), acc[i + m]);

    s.graph = b.finish();
    return s;
}

} // namespace spikelds
