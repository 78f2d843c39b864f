#pragma once

#include <cstdint>
#include <numeric>

namespace spikelds {

// Synaptic gain expressed as alpha/beta: an input spike adds alpha to the
// membrane and each output spike costs beta. Hardware bounds both parts.
struct RationalWeight {
    std::int32_t num = 0; // alpha >= 0
    std::int32_t den = 1; // beta >= 1

    double value() const { return static_cast<double>(num) / den; }
    bool operator==(const RationalWeight&) const = default;

    RationalWeight reduced() const
    {
        std::int32_t g = std::gcd(num, den);
        if (g == 0)
            return {0, 1};
        return {num / g, den / g};
    }
};

struct RationalBounds {
    std::int32_t num_max = 255;
    std::int32_t den_max = 255;
};

// Best rational approximation of w >= 0 on the bounded grid
// {0..num_max} x {1..den_max}, minimizing (w - num/den)^2.
// Ties break toward the smallest den, then the smallest num.
// Runs in O(min(num_max, den_max)) by scanning the smaller axis and testing
// the floor/ceil of the real-valued optimum on the other.
RationalWeight approx_weight(double w, RationalBounds bounds = {});

// Exhaustive O(num_max * den_max) scan with the same tie-breaking. Slow;
// kept as an independent check of approx_weight.
RationalWeight approx_weight_exhaustive(double w, RationalBounds bounds = {});

} // namespace spikelds
