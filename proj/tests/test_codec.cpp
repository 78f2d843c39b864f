#include "doctest.h"

#include "spikelds/codec.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>

using namespace spikelds;

TEST_CASE("codec capacity and amplitude")
{
    CodecConfig cfg;
    cfg.frame_len = 25;
    cfg.pop_size = 21;
    cfg.eta = 0.9;
    CHECK(cfg.capacity() == 525);
    CHECK(cfg.amplitude() == 472); // floor(0.9 * 525)

    cfg.eta = 1.0;
    CHECK(cfg.amplitude() == cfg.capacity());

    cfg = {15, 5, 0.9};
    CHECK(cfg.amplitude() == 67);
}

TEST_CASE("codec configuration bounds")
{
    CHECK_THROWS_AS((CodecConfig{0, 5, 0.9}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((CodecConfig{10, 0, 0.9}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((CodecConfig{10, 22, 0.9}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((CodecConfig{10, 5, 0.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((CodecConfig{10, 5, 1.1}).validate(), std::invalid_argument);
    CHECK_NOTHROW((CodecConfig{1, 1, 1.0}).validate());
}

TEST_CASE("round_half_away rounds half cases away from zero")
{
    CHECK(round_half_away(0.0) == 0);
    CHECK(round_half_away(0.5) == 1);
    CHECK(round_half_away(-0.5) == -1);
    CHECK(round_half_away(1.49) == 1);
    CHECK(round_half_away(-1.49) == -1);
    CHECK(round_half_away(2.5) == 3);
    CHECK(round_half_away(-2.5) == -3);
}

TEST_CASE("spread_count places distinct, evenly loaded slots")
{
    CodecConfig cfg{25, 21, 0.9};
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::int64_t> draw(0, cfg.capacity());

    for (int rep = 0; rep < 200; ++rep) {
        const std::int64_t count = rep == 0 ? 0 : (rep == 1 ? cfg.capacity() : draw(rng));
        const auto slots = spread_count(count, cfg);
        REQUIRE(static_cast<std::int64_t>(slots.size()) == count);

        std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
        std::vector<std::int64_t> per_step(cfg.frame_len, 0);
        for (auto [line, step] : slots) {
            CHECK(line < cfg.pop_size);
            CHECK(step < cfg.frame_len);
            CHECK(seen.insert({line, step}).second); // no slot reused
            ++per_step[step];
        }
        const std::int64_t per_step_cap =
            (count + cfg.frame_len - 1) / cfg.frame_len; // ceil
        for (std::int64_t c : per_step)
            CHECK(c <= per_step_cap);
    }

    CHECK_THROWS_AS(spread_count(-1, cfg), std::invalid_argument);
    CHECK_THROWS_AS(spread_count(cfg.capacity() + 1, cfg), std::invalid_argument);
}

TEST_CASE("encode splits by sign and decodes back exactly")
{
    CodecConfig cfg{20, 7, 0.9};
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<std::int64_t> draw(-cfg.amplitude(), cfg.amplitude());

    std::vector<std::int64_t> x(40);
    for (auto& v : x)
        v = draw(rng);
    x[0] = 0;
    x[1] = cfg.amplitude();
    x[2] = -cfg.amplitude();

    const EncodedSignal enc = encode(x, cfg);
    REQUIRE(enc.plus.size() == cfg.pop_size);
    REQUIRE(enc.minus.size() == cfg.pop_size);

    std::vector<SpikeFrame> frames(x.size());
    auto tally = [&](const std::vector<std::vector<std::int64_t>>& lines, bool plus) {
        for (const auto& line : lines)
            for (std::int64_t t : line) {
                const std::size_t f = static_cast<std::size_t>(t / cfg.frame_len);
                REQUIRE(f < frames.size());
                (plus ? frames[f].plus : frames[f].minus) += 1;
            }
    };
    tally(enc.plus, true);
    tally(enc.minus, false);

    // one side stays silent per frame
    for (std::size_t t = 0; t < x.size(); ++t)
        CHECK(frames[t].plus * frames[t].minus == 0);
    CHECK(decode(frames) == x);

    CHECK_THROWS_AS(encode({cfg.amplitude() + 1}, cfg), std::invalid_argument);
}

TEST_CASE("per-line emissions are strictly ascending after encoding")
{
    CodecConfig cfg{10, 3, 1.0};
    std::vector<std::int64_t> x = {30, -30, 17, 0, -1, 30};
    const EncodedSignal enc = encode(x, cfg);
    SpikeInput in;
    in.times = enc.plus;
    in.times.insert(in.times.end(), enc.minus.begin(), enc.minus.end());
    CHECK_NOTHROW(in.check_sorted());
}

TEST_CASE("multi-channel encoding groups plus then minus lines per channel")
{
    CodecConfig cfg{10, 4, 0.9};
    CHECK(channel_plus_line(0, cfg) == 0);
    CHECK(channel_minus_line(0, cfg) == 4);
    CHECK(channel_plus_line(2, cfg) == 16);
    CHECK(channel_minus_line(2, cfg) == 20);

    Eigen::MatrixXi x(2, 3);
    x << 5, -7, 0, -36, 36, 1;
    const SpikeInput in = encode_channels(x, cfg);
    REQUIRE(in.n_lines() == 2 * 2 * cfg.pop_size);

    auto frame_count = [&](std::uint32_t first, std::int64_t frame) {
        std::int64_t c = 0;
        for (std::uint32_t l = 0; l < cfg.pop_size; ++l)
            for (std::int64_t t : in.times[first + l])
                if (t / cfg.frame_len == frame)
                    ++c;
        return c;
    };
    CHECK(frame_count(channel_plus_line(0, cfg), 0) == 5);
    CHECK(frame_count(channel_minus_line(0, cfg), 0) == 0);
    CHECK(frame_count(channel_minus_line(0, cfg), 1) == 7);
    CHECK(frame_count(channel_minus_line(1, cfg), 0) == 36);
    CHECK(frame_count(channel_plus_line(1, cfg), 1) == 36);
    CHECK(frame_count(channel_plus_line(1, cfg), 2) == 1);
}

TEST_CASE("decode_counts subtracts minus rows from plus rows")
{
    std::vector<std::vector<std::int64_t>> counts = {
        {3, 0, 7}, // plus ch 0
        {1, 1, 1}, // plus ch 1
        {0, 2, 7}, // minus ch 0
        {1, 0, 5}, // minus ch 1
    };
    const Eigen::MatrixXi d = decode_counts(counts);
    REQUIRE(d.rows() == 2);
    REQUIRE(d.cols() == 3);
    CHECK(d(0, 0) == 3);
    CHECK(d(0, 1) == -2);
    CHECK(d(0, 2) == 0);
    CHECK(d(1, 0) == 0);
    CHECK(d(1, 2) == -4);

    counts.pop_back();
    CHECK_THROWS_AS(decode_counts(counts), std::invalid_argument);
    counts = {{1, 2}, {1}};
    CHECK_THROWS_AS(decode_counts(counts), std::invalid_argument);
}

TEST_CASE("normalize_signal hits the codec amplitude at its peak")
{
    CodecConfig cfg{25, 21, 0.9};
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss(0.0, 2.5);
    Eigen::MatrixXd x(3, 50);
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x(i) = gauss(rng);

    const NormalizedSignal n = normalize_signal(x, cfg);
    CHECK(n.values.cwiseAbs().maxCoeff() == cfg.amplitude());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        CHECK(std::abs(n.values(i) - x(i) * n.scale) <= 0.5);

    const NormalizedSignal z = normalize_signal(Eigen::MatrixXd::Zero(2, 2), cfg);
    CHECK(z.scale == 1.0);
    CHECK(z.values.isZero());
}
