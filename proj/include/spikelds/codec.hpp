#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spikelds/simulator.hpp"

namespace spikelds {

// Frame code: a signed integer x with |x| <= eta*p*frame_len is carried per
// frame as x = (plus spikes) - (minus spikes), spread over p lines and
// frame_len steps. eta < 1 keeps headroom so downstream stages are not driven
// at line capacity.
struct CodecConfig {
    std::uint32_t frame_len = 25;
    std::uint32_t pop_size = 21;
    double eta = 0.9;

    std::int64_t capacity() const { return static_cast<std::int64_t>(frame_len) * pop_size; }
    // Largest representable magnitude after the eta margin.
    std::int64_t amplitude() const;
    void validate() const; // frame_len>0, 1<=pop_size<=21, 0<eta<=1
};

// Per-frame spike counts of one signed channel pair.
struct SpikeFrame {
    std::int64_t plus = 0;
    std::int64_t minus = 0;
    std::int64_t value() const { return plus - minus; }
};

// Positions for `count` spikes inside one frame, evenly spaced over the
// p*frame_len (step-major) slot grid so no step carries more than
// ceil(count/frame_len) spikes per population.
std::vector<std::pair<std::uint32_t, std::uint32_t>> // (line, step-in-frame)
spread_count(std::int64_t count, const CodecConfig& cfg);

// One signed integer series -> plus/minus line groups (p lines each).
struct EncodedSignal {
    std::vector<std::vector<std::int64_t>> plus;  // [p][emission steps]
    std::vector<std::vector<std::int64_t>> minus; // [p][emission steps]
};

EncodedSignal encode(const std::vector<std::int64_t>& x, const CodecConfig& cfg);

// Multi-channel convenience: column t of `x` is frame t. Lines are grouped
// per channel: channel c occupies lines [c*2p, (c+1)*2p), plus lines first.
SpikeInput encode_channels(const Eigen::MatrixXi& x, const CodecConfig& cfg);
std::uint32_t channel_plus_line(std::uint32_t channel, const CodecConfig& cfg);
std::uint32_t channel_minus_line(std::uint32_t channel, const CodecConfig& cfg);

// Signed per-frame values from plus/minus counts.
std::vector<std::int64_t> decode(const std::vector<SpikeFrame>& frames);

// Counts-per-frame matrices (as produced by run_frame_counts, channels
// ordered plus_0..plus_{m-1}, minus_0..minus_{m-1}) -> decoded m x T matrix.
Eigen::MatrixXi decode_counts(const std::vector<std::vector<std::int64_t>>& counts);

// Scale a real-valued signal matrix into codec range: out ~ x * scale with
// max |out| = amplitude(). Rounds half away from zero. Returns the scale so
// callers can map decoded integers back (x ~ out / scale).
struct NormalizedSignal {
    Eigen::MatrixXi values;
    double scale = 1.0;
};

NormalizedSignal normalize_signal(const Eigen::MatrixXd& x, const CodecConfig& cfg);

std::int64_t round_half_away(double v);

} // namespace spikelds
