#include "doctest.h"

#include "spikelds/simulator.hpp"

#include <random>
#include <stdexcept>

using namespace spikelds;

namespace {

// hand-wired graphs, bypassing the circuit builders
struct Wire {
    CircuitGraph g;

    NeuronId neuron(std::int64_t threshold, std::uint32_t output_delay = 0)
    {
        NeuronSpec n;
        n.threshold = threshold;
        n.output_delay = output_delay;
        g.neurons.push_back(std::move(n));
        return static_cast<NeuronId>(g.neurons.size() - 1);
    }

    void route(RouteSource src, NeuronId dst, std::int32_t weight, std::uint32_t delay = 0)
    {
        Route r;
        r.src = src;
        r.target = dst;
        r.synapse = static_cast<std::uint32_t>(g.neurons[dst].weights.size());
        r.delay = delay;
        g.neurons[dst].weights.push_back(weight);
        g.routes.push_back(r);
    }
};

SpikeInput one_line(std::vector<std::int64_t> times)
{
    SpikeInput in;
    in.times.push_back(std::move(times));
    return in;
}

} // namespace

TEST_CASE("firing subtracts the threshold and the excess carries over")
{
    Wire w;
    w.g.n_inputs = 1;
    const NeuronId n = w.neuron(3);
    w.route(RouteSource::input(0), n, 2);

    // arrivals at steps 1..4, +2 each: v = 2, 4(fire, ->1), 3(fire, ->0), 2
    const RunResult r = run_network(w.g, one_line({0, 1, 2, 3}), 8);
    CHECK(r.raster.times[n] == std::vector<std::int64_t>{2, 3});
}

TEST_CASE("a neuron fires at most once per step and drains a backlog one spike at a time")
{
    Wire w;
    w.g.n_inputs = 1;
    const NeuronId n = w.neuron(1);
    w.route(RouteSource::input(0), n, 5);

    const RunResult r = run_network(w.g, one_line({0}), 10);
    CHECK(r.raster.times[n] == std::vector<std::int64_t>{1, 2, 3, 4, 5});
}

TEST_CASE("delivery takes 1 + route delay + sender output delay")
{
    Wire w;
    w.g.n_inputs = 1;
    const NeuronId a = w.neuron(1, /*output_delay=*/2);
    const NeuronId b = w.neuron(1);
    w.route(RouteSource::input(0), a, 1, /*delay=*/3);
    w.route(RouteSource::neuron(a), b, 1, /*delay=*/1);

    const RunResult r = run_network(w.g, one_line({0}), 12);
    // input at 0 arrives at a after 1+3; a's spike reaches b after 1+1+2
    CHECK(r.raster.times[a] == std::vector<std::int64_t>{4});
    CHECK(r.raster.times[b] == std::vector<std::int64_t>{8});
}

TEST_CASE("a unit self-loop sustains firing indefinitely")
{
    Wire w;
    w.g.n_inputs = 1;
    const NeuronId n = w.neuron(1);
    w.route(RouteSource::input(0), n, 1);
    w.route(RouteSource::neuron(n), n, 1);

    const RunResult r = run_network(w.g, one_line({0}), 50);
    REQUIRE(r.raster.times[n].size() == 49);
    for (std::int64_t s = 1; s < 50; ++s)
        CHECK(r.raster.times[n][static_cast<std::size_t>(s - 1)] == s);
}

TEST_CASE("inhibition lowers the potential and can drive it negative")
{
    Wire w;
    w.g.n_inputs = 2;
    const NeuronId n = w.neuron(2);
    w.route(RouteSource::input(0), n, 2);
    w.route(RouteSource::input(1), n, -5);

    SpikeInput in;
    in.times = {{0, 1, 2, 3, 4}, {0}};
    const RunResult r = run_network(w.g, in, 8);
    // v: -3, -1, 1, 3 (fire -> 1), 3 (fire -> 1)
    CHECK(r.raster.times[n] == std::vector<std::int64_t>{4, 5});
}

TEST_CASE("settled potentials are visible to the observer before firing")
{
    Wire w;
    w.g.n_inputs = 1;
    const NeuronId n = w.neuron(3);
    w.route(RouteSource::input(0), n, 2);

    std::vector<std::int64_t> settled;
    run_with_observer(w.g, one_line({0, 1}), 4,
                      [&](std::int64_t, const std::vector<std::int64_t>& v,
                          const std::vector<std::uint8_t>&) { settled.push_back(v[n]); });
    CHECK(settled == std::vector<std::int64_t>{0, 2, 4, 1});

    RunOptions opt;
    opt.record_potentials = true;
    const RunResult r = run_network(w.g, one_line({0, 1}), 4, opt);
    REQUIRE(r.potentials.size() == 4);
    for (std::size_t s = 0; s < 4; ++s)
        CHECK(r.potentials[s][n] == settled[s]);
}

TEST_CASE("frame counts window per channel with independent offsets")
{
    Wire w;
    w.g.n_inputs = 1;
    const NeuronId a = w.neuron(1);
    const NeuronId b = w.neuron(1);
    w.route(RouteSource::input(0), a, 1);
    w.route(RouteSource::input(0), b, 1, /*delay=*/2);
    w.g.outputs.push_back({"fast", {a}});
    w.g.outputs.push_back({"slow", {b}});

    const SpikeInput in = one_line({0, 1, 2, 3, 4});

    FrameWindows fw;
    fw.frame_len = 3;
    fw.n_frames = 3;
    fw.offsets = {0, 2};
    auto counts = run_frame_counts(w.g, in, fw);
    // a fires 1..5, b fires 3..7; the offset re-aligns the windows
    CHECK(counts[0] == std::vector<std::int64_t>{2, 3, 0});
    CHECK(counts[1] == std::vector<std::int64_t>{2, 3, 0});

    // single entry = shared offset
    fw.offsets = {0};
    counts = run_frame_counts(w.g, in, fw);
    CHECK(counts[0] == std::vector<std::int64_t>{2, 3, 0});
    CHECK(counts[1] == std::vector<std::int64_t>{0, 3, 2});

    // spikes before a window's start are dropped
    fw.offsets = {4, 4};
    counts = run_frame_counts(w.g, in, fw);
    CHECK(counts[0] == std::vector<std::int64_t>{2, 0, 0});
}

TEST_CASE("serial and parallel stepping produce bit-identical results")
{
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::int64_t> thr(1, 5);
    std::uniform_int_distribution<std::int32_t> wgt(-3, 4);
    std::uniform_int_distribution<std::uint32_t> dly(0, 7);
    std::uniform_int_distribution<std::uint32_t> odly(0, 2);

    Wire w;
    w.g.n_inputs = 16;
    const std::uint32_t n = 80;
    for (std::uint32_t i = 0; i < n; ++i)
        w.neuron(thr(rng), odly(rng));
    std::uniform_int_distribution<std::uint32_t> pick(0, n - 1);
    std::uniform_int_distribution<std::uint32_t> line(0, 15);
    for (int e = 0; e < 500; ++e) {
        std::int32_t g = wgt(rng);
        if (g == 0)
            g = 1;
        if (e % 5 == 0)
            w.route(RouteSource::input(line(rng)), pick(rng), g, dly(rng));
        else
            w.route(RouteSource::neuron(pick(rng)), pick(rng), g, dly(rng));
    }
    for (std::uint32_t i = 0; i < n; i += 7)
        w.g.outputs.push_back({"o" + std::to_string(i), {i}});

    SpikeInput in = SpikeInput::silent(16);
    std::bernoulli_distribution spike(0.3);
    for (auto& lane : in.times)
        for (std::int64_t s = 0; s < 300; ++s)
            if (spike(rng))
                lane.push_back(s);

    RunOptions serial, parallel;
    parallel.parallel = true;
    const RunResult rs = run_network(w.g, in, 300, serial);
    const RunResult rp = run_network(w.g, in, 300, parallel);
    REQUIRE(rs.raster.times.size() == rp.raster.times.size());
    CHECK(rs.raster.total_spikes() > 0);
    for (std::size_t i = 0; i < rs.raster.times.size(); ++i)
        CHECK(rs.raster.times[i] == rp.raster.times[i]);

    FrameWindows fw;
    fw.frame_len = 10;
    fw.n_frames = 29;
    fw.offsets = {1};
    CHECK(run_frame_counts(w.g, in, fw, false) == run_frame_counts(w.g, in, fw, true));
}

TEST_CASE("malformed stimuli and graphs are rejected")
{
    Wire w;
    w.g.n_inputs = 1;
    const NeuronId n = w.neuron(1);
    w.route(RouteSource::input(0), n, 1);

    CHECK_THROWS_AS(run_network(w.g, one_line({3, 2}), 5), std::invalid_argument);
    CHECK_THROWS_AS(run_network(w.g, one_line({-1}), 5), std::invalid_argument);

    SpikeInput wide = SpikeInput::silent(2);
    CHECK_THROWS_AS(run_network(w.g, wide, 5), std::invalid_argument);

    // synapse never driven
    Wire bad;
    bad.g.n_inputs = 1;
    const NeuronId m = bad.neuron(1);
    bad.g.neurons[m].weights.push_back(1);
    CHECK_THROWS_AS(bad.g.validate(), std::invalid_argument);

    // synapse driven twice
    Wire dup;
    dup.g.n_inputs = 1;
    const NeuronId d = dup.neuron(1);
    dup.route(RouteSource::input(0), d, 1);
    Route second = dup.g.routes.back();
    dup.g.routes.push_back(second);
    CHECK_THROWS_AS(dup.g.validate(), std::invalid_argument);

    // non-positive threshold
    Wire zt;
    zt.g.n_inputs = 0;
    zt.neuron(1);
    zt.g.neurons[0].threshold = 0;
    CHECK_THROWS_AS(zt.g.validate(), std::invalid_argument);
}

TEST_CASE("frame window plumbing validates its arguments")
{
    Wire w;
    w.g.n_inputs = 1;
    const NeuronId n = w.neuron(1);
    w.route(RouteSource::input(0), n, 1);
    w.g.outputs.push_back({"out", {n}});

    FrameWindows fw;
    fw.frame_len = 0;
    fw.n_frames = 1;
    CHECK_THROWS_AS(run_frame_counts(w.g, one_line({}), fw), std::invalid_argument);

    fw.frame_len = 5;
    fw.offsets = {0, 1, 2};
    CHECK_THROWS_AS(run_frame_counts(w.g, one_line({}), fw), std::invalid_argument);
}
