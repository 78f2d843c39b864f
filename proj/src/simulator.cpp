#include "spikelds/simulator.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <type_traits>

#include "spikelds/checked.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spikelds {

void SpikeInput::check_sorted() const
{
    for (const auto& line : times) {
        std::int64_t prev = -1;
        for (std::int64_t t : line) {
            if (t < 0)
                throw std::invalid_argument("input spike at negative step");
            if (t <= prev)
                throw std::invalid_argument("input spikes must be strictly ascending per line");
            prev = t;
        }
    }
}

std::int64_t Raster::total_spikes() const
{
    std::int64_t n = 0;
    for (const auto& t : times)
        n += static_cast<std::int64_t>(t.size());
    return n;
}

namespace {

struct Edge {
    NeuronId target;
    std::int32_t weight;
    std::uint32_t offset; // arrival = emission step + offset (>= 1)
};

// Flattened routing tables plus the delay ring. Rebuilt per run; cost is
// negligible next to stepping.
struct Context {
    std::vector<std::vector<Edge>> from_neuron;
    std::vector<std::vector<Edge>> from_input;
    std::vector<std::int64_t> thresholds;
    std::uint32_t n_neurons = 0;
    std::uint32_t depth = 2; // ring slots; max offset + 1

    explicit Context(const CircuitGraph& g, std::uint32_t input_lines)
    {
        g.validate();
        n_neurons = static_cast<std::uint32_t>(g.neurons.size());
        from_neuron.resize(n_neurons);
        from_input.resize(std::max<std::uint32_t>(g.n_inputs, input_lines));
        thresholds.resize(n_neurons);
        for (std::uint32_t i = 0; i < n_neurons; ++i)
            thresholds[i] = g.neurons[i].threshold;

        std::uint32_t max_off = 1;
        for (const Route& r : g.routes) {
            Edge e;
            e.target = r.target;
            e.weight = g.neurons[r.target].weights[r.synapse];
            std::uint32_t off = 1 + r.delay;
            if (r.src.kind == RouteSource::Kind::Neuron) {
                off += g.neurons[r.src.index].output_delay;
                e.offset = off;
                from_neuron[r.src.index].push_back(e);
            } else {
                e.offset = off;
                from_input[r.src.index].push_back(e);
            }
            max_off = std::max(max_off, off);
        }
        depth = max_off + 1;
    }
};

// Settled-potential inspection for deferral detection: ladder populations are
// checked as a group (all settled potentials in a ladder are equal), free
// neurons by the single-neuron rule.
struct OverflowProbe {
    struct Ladder {
        std::uint32_t pop;
        NeuronId first, top;
        std::int64_t beta;
        std::int64_t p;
    };
    std::vector<Ladder> ladders;
    std::vector<NeuronId> free_neurons;
    std::vector<OverflowEvent>* out = nullptr;

    OverflowProbe(const CircuitGraph& g, std::vector<OverflowEvent>* sink) : out(sink)
    {
        for (std::uint32_t pi = 0; pi < g.populations.size(); ++pi) {
            const Population& pop = g.populations[pi];
            if (pop.neurons.empty())
                continue;
            ladders.push_back({pi, pop.neurons.front(), pop.neurons.back(), pop.beta,
                               static_cast<std::int64_t>(pop.p)});
        }
        for (NeuronId i = 0; i < g.neurons.size(); ++i)
            if (g.population_of.empty() || g.population_of[i] == kNoPopulation)
                free_neurons.push_back(i);
    }

    void inspect(std::int64_t step, const std::vector<std::int64_t>& v,
                 const std::vector<std::int64_t>& thresholds) const
    {
        for (const Ladder& l : ladders) {
            const std::int64_t vs = v[l.first];
            if (vs >= (l.p + 1) * l.beta)
                out->push_back({step, l.top, l.pop, vs / l.beta - l.p});
        }
        for (NeuronId i : free_neurons) {
            if (v[i] >= 2 * thresholds[i])
                out->push_back({step, i, kNoPopulation, v[i] / thresholds[i] - 1});
        }
    }
};

struct NoSettled {};

// The stepper. Delivery is event-driven through a delay ring: firing (or an
// input emission) at step s deposits weight into slot (s + offset) % depth;
// step s integrates slot s % depth, inspects, then fires. All deposits are
// integer adds, so the parallel path is bit-identical to the serial one.
template <class OnSpike, class OnSettled>
void run_core(const CircuitGraph& g, const SpikeInput& input, std::int64_t n_steps, bool parallel,
              OnSpike&& on_spike, OnSettled&& on_settled)
{
    input.check_sorted();
    if (input.n_lines() > g.n_inputs)
        throw std::invalid_argument("stimulus has more lines than the graph accepts");
    Context ctx(g, input.n_lines());
    const std::uint32_t n = ctx.n_neurons;
    const std::uint32_t depth = ctx.depth;

    std::vector<std::int64_t> v(n, 0);
    std::vector<std::int64_t> pending(static_cast<std::size_t>(depth) * n, 0);
    std::vector<std::uint8_t> fired(n, 0);
    std::vector<std::size_t> cursor(input.n_lines(), 0);

    constexpr bool want_settled = !std::is_same_v<std::decay_t<OnSettled>, NoSettled>;

#ifndef _OPENMP
    parallel = false;
#endif

    for (std::int64_t s = 0; s < n_steps; ++s) {
        // input emissions at step s
        for (std::uint32_t line = 0; line < input.n_lines(); ++line) {
            const auto& ts = input.times[line];
            std::size_t& c = cursor[line];
            while (c < ts.size() && ts[c] == s) {
                for (const Edge& e : ctx.from_input[line]) {
                    std::int64_t& slot = pending[((s + e.offset) % depth) * std::size_t{n} + e.target];
                    slot = checked_add(slot, e.weight);
                }
                ++c;
            }
            if (c < ts.size() && ts[c] < s)
                throw std::invalid_argument("input spike before current step"); // unreachable if sorted
        }

        std::int64_t* slot = pending.data() + (s % depth) * std::size_t{n};

        if (!parallel) {
            for (std::uint32_t i = 0; i < n; ++i) {
                v[i] = checked_add(v[i], slot[i]);
                slot[i] = 0;
            }
            if constexpr (want_settled)
                on_settled(s, v, fired);
            for (std::uint32_t i = 0; i < n; ++i) {
                if (v[i] >= ctx.thresholds[i]) {
                    v[i] -= ctx.thresholds[i];
                    fired[i] = 1;
                    for (const Edge& e : ctx.from_neuron[i]) {
                        std::int64_t& tgt = pending[((s + e.offset) % depth) * std::size_t{n} + e.target];
                        tgt = checked_add(tgt, e.weight);
                    }
                    on_spike(i, s);
                } else {
                    fired[i] = 0;
                }
            }
        } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
            for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
                const std::uint32_t i = static_cast<std::uint32_t>(ii);
                v[i] = checked_add(v[i], slot[i]);
                slot[i] = 0;
            }
            if constexpr (want_settled)
                on_settled(s, v, fired);
#pragma omp parallel for schedule(static)
            for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
                const std::uint32_t i = static_cast<std::uint32_t>(ii);
                if (v[i] >= ctx.thresholds[i]) {
                    v[i] -= ctx.thresholds[i];
                    fired[i] = 1;
                    for (const Edge& e : ctx.from_neuron[i]) {
                        std::int64_t* tgt = &pending[((s + e.offset) % depth) * std::size_t{n} + e.target];
#pragma omp atomic
                        *tgt += e.weight;
                    }
                    on_spike(i, s);
                } else {
                    fired[i] = 0;
                }
            }
#endif
        }
    }
}

std::vector<std::int64_t> resolve_offsets(const CircuitGraph& g, const FrameWindows& w)
{
    std::vector<std::int64_t> offsets = w.offsets;
    if (offsets.empty())
        offsets.assign(g.outputs.size(), 0);
    else if (offsets.size() == 1)
        offsets.assign(g.outputs.size(), offsets[0]);
    else if (offsets.size() != g.outputs.size())
        throw std::invalid_argument("frame window offsets do not match output channels");
    return offsets;
}

} // namespace

RunResult run_network(const CircuitGraph& g, const SpikeInput& input, std::int64_t n_steps,
                      const RunOptions& options)
{
    RunResult result;
    result.steps = n_steps;
    if (options.record_raster)
        result.raster.times.resize(g.neurons.size());

    auto on_spike = [&](NeuronId i, std::int64_t s) {
        if (options.record_raster)
            result.raster.times[i].push_back(s);
    };

    if (options.record_potentials) {
        if (options.parallel)
            throw std::invalid_argument("potential recording is a serial-mode probe");
        auto settle = [&](std::int64_t, const std::vector<std::int64_t>& v,
                          const std::vector<std::uint8_t>&) { result.potentials.push_back(v); };
        run_core(g, input, n_steps, false, on_spike, settle);
    } else {
        run_core(g, input, n_steps, options.parallel, on_spike, NoSettled{});
    }
    return result;
}

std::vector<std::vector<std::int64_t>> run_frame_counts(const CircuitGraph& g,
                                                        const SpikeInput& input,
                                                        const FrameWindows& windows,
                                                        bool parallel,
                                                        std::vector<OverflowEvent>* overflow)
{
    if (windows.frame_len == 0)
        throw std::invalid_argument("frame_len must be positive");
    const std::vector<std::int64_t> offsets = resolve_offsets(g, windows);

    // neuron -> output channel (at most one)
    std::vector<std::uint32_t> channel_of(g.neurons.size(), kNoPopulation);
    for (std::uint32_t c = 0; c < g.outputs.size(); ++c)
        for (NeuronId id : g.outputs[c].neurons) {
            if (channel_of[id] != kNoPopulation)
                throw std::invalid_argument("neuron belongs to two output channels");
            channel_of[id] = c;
        }

    std::vector<std::vector<std::int64_t>> counts(g.outputs.size());
    for (auto& c : counts)
        c.assign(windows.n_frames, 0);

    const std::int64_t frame_len = windows.frame_len;
    const std::int64_t n_frames = windows.n_frames;
    std::int64_t horizon = 0;
    for (std::uint32_t c = 0; c < g.outputs.size(); ++c)
        horizon = std::max(horizon, n_frames * frame_len + offsets[c]);

    auto on_spike = [&](NeuronId i, std::int64_t s) {
        const std::uint32_t c = channel_of[i];
        if (c == kNoPopulation)
            return;
        const std::int64_t rel = s - offsets[c];
        if (rel < 0)
            return;
        const std::int64_t t = rel / frame_len;
        if (t >= n_frames)
            return;
        std::int64_t* cell = &counts[c][t];
#ifdef _OPENMP
#pragma omp atomic
#endif
        *cell += 1;
    };

    if (overflow) {
        OverflowProbe probe(g, overflow);
        std::vector<std::int64_t> thresholds(g.neurons.size());
        for (std::size_t i = 0; i < g.neurons.size(); ++i)
            thresholds[i] = g.neurons[i].threshold;
        run_core(g, input, horizon, parallel, on_spike,
                 [&](std::int64_t s, const std::vector<std::int64_t>& v,
                     const std::vector<std::uint8_t>&) { probe.inspect(s, v, thresholds); });
    } else {
        run_core(g, input, horizon, parallel, on_spike, NoSettled{});
    }
    return counts;
}

void run_with_observer(const CircuitGraph& g, const SpikeInput& input, std::int64_t n_steps,
                       const StepObserver& observer)
{
    run_core(
        g, input, n_steps, false, [](NeuronId, std::int64_t) {},
        [&](std::int64_t s, const std::vector<std::int64_t>& v,
            const std::vector<std::uint8_t>& fired) { observer(s, v, fired); });
}

std::vector<OverflowEvent> detect_overflow(const CircuitGraph& g, const SpikeInput& input,
                                           std::int64_t n_steps)
{
    std::vector<OverflowEvent> events;
    OverflowProbe probe(g, &events);
    std::vector<std::int64_t> thresholds(g.neurons.size());
    for (std::size_t i = 0; i < g.neurons.size(); ++i)
        thresholds[i] = g.neurons[i].threshold;

    run_core(
        g, input, n_steps, false, [](NeuronId, std::int64_t) {},
        [&](std::int64_t s, const std::vector<std::int64_t>& v, const std::vector<std::uint8_t>&) {
            probe.inspect(s, v, thresholds);
        });
    return events;
}

} // namespace spikelds
