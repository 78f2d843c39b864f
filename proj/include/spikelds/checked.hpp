#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace spikelds {

// All membrane arithmetic is checked: silent wrap-around would corrupt spike
// counts, so overflow is a hard error.
struct ArithmeticOverflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::int64_t checked_add(std::int64_t a, std::int64_t b)
{
    std::int64_t out;
    if (__builtin_add_overflow(a, b, &out))
        throw ArithmeticOverflow("int64 addition overflow: " + std::to_string(a) +
                                 " + " + std::to_string(b));
    return out;
}

inline std::int64_t checked_sub(std::int64_t a, std::int64_t b)
{
    std::int64_t out;
    if (__builtin_sub_overflow(a, b, &out))
        throw ArithmeticOverflow("int64 subtraction overflow: " + std::to_string(a) +
                                 " - " + std::to_string(b));
    return out;
}

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b)
{
    std::int64_t out;
    if (__builtin_mul_overflow(a, b, &out))
        throw ArithmeticOverflow("int64 multiplication overflow: " + std::to_string(a) +
                                 " * " + std::to_string(b));
    return out;
}

} // namespace spikelds
