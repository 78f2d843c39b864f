#include "spikelds/rational.hpp"

#include <cmath>
#include <stdexcept>

namespace spikelds {

namespace {

struct Best {
    double err2 = -1.0;
    RationalWeight r;

    // strict improvement only: scanning in ascending (den, num) order makes
    // ties resolve to the smallest den, then the smallest num
    void offer(double w, std::int32_t num, std::int32_t den)
    {
        const double d = w - static_cast<double>(num) / den;
        const double e = d * d;
        if (err2 < 0.0 || e < err2) {
            err2 = e;
            r = {num, den};
        }
    }
};

std::int32_t clamp32(double v, std::int32_t lo, std::int32_t hi)
{
    if (v < lo)
        return lo;
    if (v > hi)
        return hi;
    return static_cast<std::int32_t>(v);
}

} // namespace

RationalWeight approx_weight(double w, RationalBounds bounds)
{
    if (!(w >= 0.0) || !std::isfinite(w))
        throw std::invalid_argument("weight must be finite and nonnegative");
    if (bounds.num_max < 0 || bounds.den_max < 1)
        throw std::invalid_argument("bad rational bounds");
    if (w == 0.0)
        return {0, 1};

    Best best;
    if (bounds.den_max <= bounds.num_max) {
        // scan denominators; the optimal numerator for fixed den is floor or
        // ceil of w*den
        for (std::int32_t den = 1; den <= bounds.den_max; ++den) {
            const double x = w * den;
            const std::int32_t lo = clamp32(std::floor(x), 0, bounds.num_max);
            const std::int32_t hi = clamp32(std::ceil(x), 0, bounds.num_max);
            best.offer(w, lo, den);
            if (hi != lo)
                best.offer(w, hi, den);
        }
    } else {
        // more denominators than numerators: scan numerators instead
        best.offer(w, 0, 1);
        for (std::int32_t num = 1; num <= bounds.num_max; ++num) {
            const double x = num / w;
            const std::int32_t lo = clamp32(std::floor(x), 1, bounds.den_max);
            const std::int32_t hi = clamp32(std::ceil(x), 1, bounds.den_max);
            // ascending num gives ascending optimal den, so ties still land
            // on the smallest den first
            best.offer(w, num, lo);
            if (hi != lo)
                best.offer(w, num, hi);
        }
    }
    return best.r;
}

RationalWeight approx_weight_exhaustive(double w, RationalBounds bounds)
{
    if (!(w >= 0.0) || !std::isfinite(w))
        throw std::invalid_argument("weight must be finite and nonnegative");
    Best best;
    for (std::int32_t den = 1; den <= bounds.den_max; ++den)
        for (std::int32_t num = 0; num <= bounds.num_max; ++num)
            best.offer(w, num, den);
    return best.r;
}

} // namespace spikelds
