#ifndef TORUS_CYCLES_PRECISION_HPP
#define TORUS_CYCLES_PRECISION_HPP

#include <array>
#include <string>
#include <type_traits>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "torus_cycles/errors.hpp"

namespace torus_cycles {

namespace bmp = boost::multiprecision;

/// Binary floating point with a Bits-bit significand.
template <unsigned Bits>
using BinaryFloat = bmp::number<bmp::cpp_bin_float<Bits, bmp::digit_base_2>, bmp::et_off>;

using BigInt = bmp::cpp_int;
using Rational = bmp::cpp_rational;

inline constexpr std::array<unsigned, 4> supported_precision_bits{64, 128, 256, 512};
inline constexpr unsigned default_precision_bits = 128;

/// Rounds a requested significand width up to the nearest supported one.
inline unsigned resolve_precision(unsigned bits) {
    for (unsigned b : supported_precision_bits) {
        if (bits != 0 && bits <= b) return b;
    }
    throw invalid_argument("precision_bits must lie in [1, 512], got " + std::to_string(bits));
}

/// Calls f.template operator()<Real>() with Real the BinaryFloat matching
/// the resolved precision. All branches must return the same type.
template <class F>
decltype(auto) with_precision(unsigned bits, F&& f) {
    switch (resolve_precision(bits)) {
        case 64:
            return f.template operator()<BinaryFloat<64>>();
        case 128:
            return f.template operator()<BinaryFloat<128>>();
        case 256:
            return f.template operator()<BinaryFloat<256>>();
        default:
            return f.template operator()<BinaryFloat<512>>();
    }
}

/// Exact integer into Real (double, BinaryFloat, Rational or BigInt).
template <class Real>
Real from_integer(const BigInt& value) {
    if constexpr (std::is_arithmetic_v<Real>) {
        return value.template convert_to<Real>();
    } else {
        return Real(value);
    }
}

template <class Real>
double to_double(const Real& value) {
    if constexpr (std::is_arithmetic_v<Real>) {
        return static_cast<double>(value);
    } else {
        return value.template convert_to<double>();
    }
}

}  // namespace torus_cycles

#endif  // TORUS_CYCLES_PRECISION_HPP
