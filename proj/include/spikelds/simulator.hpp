#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "spikelds/graph.hpp"

namespace spikelds {

// Emission times (steps, ascending) per external input line. A line emits at
// most one spike per step; the spike reaches each routed target after
// 1 + route delay steps.
struct SpikeInput {
    std::vector<std::vector<std::int64_t>> times;

    std::uint32_t n_lines() const { return static_cast<std::uint32_t>(times.size()); }
    static SpikeInput silent(std::uint32_t n_lines) { return {std::vector<std::vector<std::int64_t>>(n_lines)}; }
    void check_sorted() const;
};

struct Raster {
    std::vector<std::vector<std::int64_t>> times; // per neuron, ascending

    std::int64_t total_spikes() const;
};

struct RunOptions {
    bool parallel = false;          // OpenMP stepper; bit-identical to the serial one
    bool record_raster = true;
    bool record_potentials = false; // settled potential per (step, neuron); small runs only
};

struct RunResult {
    Raster raster;
    std::vector<std::vector<std::int64_t>> potentials; // [step][neuron] when recorded
    std::int64_t steps = 0;
};

// Reference runner. Deterministic: identical (graph, input, options) produce
// identical results, in serial and parallel mode alike (all integer updates
// commute).
RunResult run_network(const CircuitGraph& g, const SpikeInput& input, std::int64_t n_steps,
                      const RunOptions& options = {});

// Windowed spike counting for long experiments where a full raster would not
// fit in memory: counts[c][t] = spikes of output channel c in
// [t*frame_len + offset[c], (t+1)*frame_len + offset[c]).
struct FrameWindows {
    std::uint32_t frame_len = 1;
    std::int64_t n_frames = 0;
    std::vector<std::int64_t> offsets; // per output channel; single entry = shared
};

struct OverflowEvent;

std::vector<std::vector<std::int64_t>> run_frame_counts(const CircuitGraph& g,
                                                        const SpikeInput& input,
                                                        const FrameWindows& windows,
                                                        bool parallel = false,
                                                        std::vector<OverflowEvent>* overflow = nullptr);

// Per-step inspection hook: called after integration, before firing, with the
// settled potentials. Serial only; meant for invariant tests.
using StepObserver =
    std::function<void(std::int64_t step, const std::vector<std::int64_t>& potentials,
                       const std::vector<std::uint8_t>& fired_prev)>;

void run_with_observer(const CircuitGraph& g, const SpikeInput& input, std::int64_t n_steps,
                       const StepObserver& observer);

// A ladder population defers spikes when its settled potential demands more
// simultaneous spikes than the population can emit in one step. Flags every
// (step, population) where that happens for Add/Cancel populations; free
// neurons are flagged when the end-of-step potential still reaches threshold.
struct OverflowEvent {
    std::int64_t step = 0;
    NeuronId neuron = 0;        // representative (top of the ladder)
    std::uint32_t population = kNoPopulation;
    std::int64_t deferred = 0;  // spikes that could not be emitted this step
};

std::vector<OverflowEvent> detect_overflow(const CircuitGraph& g, const SpikeInput& input,
                                           std::int64_t n_steps);

} // namespace spikelds
