#include "spikelds/codec.hpp"

#include <cmath>
#include <stdexcept>

namespace spikelds {

std::int64_t CodecConfig::amplitude() const
{
    return static_cast<std::int64_t>(std::floor(eta * pop_size * frame_len));
}

void CodecConfig::validate() const
{
    if (frame_len == 0)
        throw std::invalid_argument("frame_len must be positive");
    if (pop_size == 0 || pop_size > 21)
        throw std::invalid_argument("pop_size must be in 1..21");
    if (!(eta > 0.0) || eta > 1.0)
        throw std::invalid_argument("eta must be in (0, 1]");
}

std::int64_t round_half_away(double v)
{
    return static_cast<std::int64_t>(v < 0 ? std::ceil(v - 0.5) : std::floor(v + 0.5));
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> spread_count(std::int64_t count,
                                                                  const CodecConfig& cfg)
{
    cfg.validate();
    if (count < 0 || count > cfg.capacity())
        throw std::invalid_argument("frame count outside 0..p*frame_len");
    // Even spacing over the step-major slot grid: slot q = step*p + line.
    // Strictly increasing slots (count <= capacity), so each (line, step) is
    // used at most once and no step carries more than ceil(count/frame_len)
    // spikes.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> slots;
    slots.reserve(count);
    const std::int64_t cap = cfg.capacity();
    for (std::int64_t k = 0; k < count; ++k) {
        const std::int64_t q = k * cap / count;
        slots.emplace_back(static_cast<std::uint32_t>(q % cfg.pop_size),
                           static_cast<std::uint32_t>(q / cfg.pop_size));
    }
    return slots;
}

EncodedSignal encode(const std::vector<std::int64_t>& x, const CodecConfig& cfg)
{
    cfg.validate();
    EncodedSignal out;
    out.plus.resize(cfg.pop_size);
    out.minus.resize(cfg.pop_size);
    const std::int64_t amp = cfg.amplitude();
    for (std::size_t t = 0; t < x.size(); ++t) {
        if (std::llabs(x[t]) > amp)
            throw std::invalid_argument("frame value exceeds codec amplitude");
        auto& side = x[t] >= 0 ? out.plus : out.minus;
        const std::int64_t base = static_cast<std::int64_t>(t) * cfg.frame_len;
        for (auto [line, step] : spread_count(std::llabs(x[t]), cfg))
            side[line].push_back(base + step);
    }
    return out;
}

std::uint32_t channel_plus_line(std::uint32_t channel, const CodecConfig& cfg)
{
    return channel * 2 * cfg.pop_size;
}

std::uint32_t channel_minus_line(std::uint32_t channel, const CodecConfig& cfg)
{
    return channel * 2 * cfg.pop_size + cfg.pop_size;
}

SpikeInput encode_channels(const Eigen::MatrixXi& x, const CodecConfig& cfg)
{
    const std::uint32_t n = static_cast<std::uint32_t>(x.rows());
    SpikeInput input = SpikeInput::silent(n * 2 * cfg.pop_size);
    for (std::uint32_t c = 0; c < n; ++c) {
        std::vector<std::int64_t> series(x.cols());
        for (Eigen::Index t = 0; t < x.cols(); ++t)
            series[t] = x(c, t);
        EncodedSignal enc = encode(series, cfg);
        for (std::uint32_t l = 0; l < cfg.pop_size; ++l) {
            input.times[channel_plus_line(c, cfg) + l] = std::move(enc.plus[l]);
            input.times[channel_minus_line(c, cfg) + l] = std::move(enc.minus[l]);
        }
    }
    return input;
}

std::vector<std::int64_t> decode(const std::vector<SpikeFrame>& frames)
{
    std::vector<std::int64_t> out;
    out.reserve(frames.size());
    for (const SpikeFrame& f : frames)
        out.push_back(f.value());
    return out;
}

Eigen::MatrixXi decode_counts(const std::vector<std::vector<std::int64_t>>& counts)
{
    if (counts.size() % 2 != 0)
        throw std::invalid_argument("expected plus and minus count rows");
    const std::size_t m = counts.size() / 2;
    const std::size_t T = counts.empty() ? 0 : counts.front().size();
    Eigen::MatrixXi decoded(m, T);
    for (std::size_t i = 0; i < m; ++i) {
        if (counts[i].size() != T || counts[m + i].size() != T)
            throw std::invalid_argument("count rows have unequal length");
        for (std::size_t t = 0; t < T; ++t)
            decoded(i, t) = static_cast<int>(counts[i][t] - counts[m + i][t]);
    }
    return decoded;
}

NormalizedSignal normalize_signal(const Eigen::MatrixXd& x, const CodecConfig& cfg)
{
    cfg.validate();
    const double peak = x.cwiseAbs().maxCoeff();
    NormalizedSignal out;
    out.scale = peak > 0.0 ? static_cast<double>(cfg.amplitude()) / peak : 1.0;
    out.values.resize(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            out.values(i, j) = static_cast<int>(round_half_away(x(i, j) * out.scale));
    return out;
}

} // namespace spikelds
