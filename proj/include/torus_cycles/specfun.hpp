#ifndef TORUS_CYCLES_SPECFUN_HPP
#define TORUS_CYCLES_SPECFUN_HPP

// Special functions behind the cycle-probability series: sinc, gamma at
// integer and half-integer arguments, Bessel J of integer and half-integer
// order, and the sum-of-squares counts psi_d(k).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "torus_cycles/errors.hpp"

namespace torus_cycles {

/// Unnormalized sinc: sin(x)/x, with sinc(0) = 1.
inline double sinc(double x) noexcept {
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sin(x) / x;
}

namespace detail {

inline long double gamma_half_ld(int twice_a) {
    if (twice_a < 1) {
        throw invalid_argument("gamma_half: argument must be positive, got twice_a = " +
                               std::to_string(twice_a));
    }
    long double g;
    long double a;
    if (twice_a % 2 == 0) {
        g = 1.0L;  // Gamma(1)
        a = 1.0L;
    } else {
        g = std::sqrt(std::numbers::pi_v<long double>);  // Gamma(1/2)
        a = 0.5L;
    }
    const long double target = twice_a / 2.0L;
    while (a < target) {
        g *= a;
        a += 1.0L;
    }
    return g;
}

}  // namespace detail

/// Gamma(twice_a / 2) for twice_a >= 1: a factorial for integer arguments and
/// sqrt(pi) times a product of half-integers otherwise.
inline double gamma_half(int twice_a) { return static_cast<double>(detail::gamma_half_ld(twice_a)); }

/// Order nu = twice_nu / 2 of a Bessel function.
class HalfIntOrder {
public:
    // Orders d/2 for dimensions up to 32.
    static constexpr int max_twice_nu = 32;

    explicit HalfIntOrder(int twice_nu) : twice_nu_(twice_nu) {
        if (twice_nu < 1 || twice_nu > max_twice_nu) {
            throw invalid_argument("bessel order must satisfy 1 <= 2*nu <= " +
                                   std::to_string(max_twice_nu) + ", got 2*nu = " +
                                   std::to_string(twice_nu));
        }
    }

    static HalfIntOrder for_dimension(int d) { return HalfIntOrder(d); }

    int twice_nu() const noexcept { return twice_nu_; }
    double value() const noexcept { return twice_nu_ / 2.0; }
    bool is_integer() const noexcept { return twice_nu_ % 2 == 0; }

private:
    int twice_nu_;
};

namespace detail {

// Ascending series. Used where the alternating terms stay below ~1e4 times
// the result, so long double keeps ~1e-15 absolute accuracy.
inline long double bessel_series(int twice_nu, long double x) {
    const long double nu = twice_nu / 2.0L;
    const long double half = x / 2.0L;
    const long double half2 = half * half;
    long double term = std::pow(half, nu) / gamma_half_ld(twice_nu + 2);
    long double sum = term;
    for (int k = 0; k < 500; ++k) {
        term *= -half2 / ((k + 1) * (k + 1 + nu));
        sum += term;
        if (std::abs(term) <= 1e-22L * std::abs(sum) && k > half) break;
    }
    return sum;
}

// J_{l+1/2}(x) from the spherical Bessel function j_l via upward recurrence.
// Stable while l <= x.
inline long double bessel_half_upward(int l, long double x) {
    const long double s = std::sin(x);
    const long double c = std::cos(x);
    long double jm = s / x;  // j_0
    long double scale = std::sqrt(2.0L * x / std::numbers::pi_v<long double>);
    if (l == 0) return scale * jm;
    long double j = s / (x * x) - c / x;  // j_1
    for (int k = 1; k < l; ++k) {
        const long double next = (2 * k + 1) / x * j - jm;
        jm = j;
        j = next;
    }
    return scale * j;
}

// Miller's downward recurrence for integer order n, normalized with
// J_0 + 2 sum_k J_{2k} = 1.
inline long double bessel_miller(int n, long double x) {
    const long double top = std::max<long double>(x, n) + 30.0L + 10.0L * std::cbrt(x);
    int start = 2 * static_cast<int>(std::ceil(top / 2.0L));
    long double jp1 = 0.0L;
    long double j = 1e-30L;
    long double norm = 0.0L;
    long double result = (start == n) ? j : 0.0L;
    for (int k = start; k > 0; --k) {
        const long double jm1 = (2.0L * k / x) * j - jp1;
        jp1 = j;
        j = jm1;  // J_{k-1}
        const int idx = k - 1;
        if (idx == n) result = j;
        if (idx > 0 && idx % 2 == 0) norm += 2.0L * j;
        if (std::abs(j) > 1e300L) {
            j *= 1e-300L;
            jp1 *= 1e-300L;
            norm *= 1e-300L;
            result *= 1e-300L;
        }
    }
    norm += j;
    return result / norm;
}

// Hankel asymptotic expansion, valid for x >> nu^2.
inline long double bessel_hankel(int twice_nu, long double x) {
    const long double nu = twice_nu / 2.0L;
    const long double mu = 4.0L * nu * nu;
    long double p = 1.0L;
    long double q = 0.0L;
    long double b = 1.0L;
    long double prev = 1.0L;
    for (int k = 1; k < 200; ++k) {
        const long double odd = 2.0L * k - 1.0L;
        b *= (mu - odd * odd) / (8.0L * k * x);
        if (b == 0.0L) break;
        if (std::abs(b) > std::abs(prev)) break;
        // b_k enters P or Q with sign (-1)^{floor(k/2)}.
        const long double signed_b = ((k / 2) % 2 == 0) ? b : -b;
        if (k % 2 == 0) {
            p += signed_b;
        } else {
            q += signed_b;
        }
        if (std::abs(b) < 1e-22L) break;
        prev = b;
    }
    const long double chi = x - (nu / 2.0L + 0.25L) * std::numbers::pi_v<long double>;
    return std::sqrt(2.0L / (std::numbers::pi_v<long double> * x)) *
           (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace detail

/// Bessel function of the first kind J_nu(x) for x >= 0 and nu = twice_nu/2.
///
/// x <= 12 (or x below the order): ascending series. Beyond that,
/// half-integer orders use the trigonometric closed forms through upward
/// recurrence; integer orders use Miller's downward recurrence, switching to
/// the Hankel expansion once x >= max(40, nu^2).
inline double bessel_j(HalfIntOrder order, double x) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
        throw invalid_argument("bessel_j: argument must be finite and nonnegative");
    }
    if (x == 0.0) return 0.0;
    const int twice_nu = order.twice_nu();
    const long double nu = twice_nu / 2.0L;
    const long double xl = x;
    if (xl <= 12.0L || xl < nu) {
        return static_cast<double>(detail::bessel_series(twice_nu, xl));
    }
    if (xl >= std::max<long double>(40.0L, nu * nu)) {
        return static_cast<double>(detail::bessel_hankel(twice_nu, xl));
    }
    if (!order.is_integer()) {
        return static_cast<double>(detail::bessel_half_upward((twice_nu - 1) / 2, xl));
    }
    return static_cast<double>(detail::bessel_miller(twice_nu / 2, xl));
}

/// psi_d(0..K): number of x in Z^d with |x|^2 = k.
struct LatticeCountTable {
    int d = 0;
    std::vector<std::uint64_t> counts;

    std::uint64_t operator[](std::size_t k) const { return counts[k]; }
    std::size_t size() const noexcept { return counts.size(); }
};

/// Builds psi_d(k) for k = 0..k_max from psi_1 by
///   psi_d(k) = psi_{d-1}(k) + 2 * sum_{1 <= m <= sqrt(k)} psi_{d-1}(k - m^2).
inline LatticeCountTable psi_counts(int d, std::int64_t k_max) {
    if (d < 1) throw invalid_argument("psi_counts: dimension must be >= 1");
    if (k_max < 0) throw invalid_argument("psi_counts: k_max must be >= 0");
    const auto size = static_cast<std::size_t>(k_max) + 1;

    std::vector<std::uint64_t> cur(size, 0);
    cur[0] = 1;
    for (std::size_t m = 1; m * m < size; ++m) cur[m * m] = 2;

    for (int dim = 2; dim <= d; ++dim) {
        std::vector<std::uint64_t> next = cur;
        for (std::size_t m = 1; m * m < size; ++m) {
            const std::size_t shift = m * m;
            for (std::size_t k = shift; k < size; ++k) {
                std::uint64_t add = 0;
                if (__builtin_mul_overflow(cur[k - shift], std::uint64_t{2}, &add) ||
                    __builtin_add_overflow(next[k], add, &next[k])) {
                    throw capacity_error("psi_counts: count exceeds 64 bits");
                }
            }
        }
        cur = std::move(next);
    }
    return LatticeCountTable{d, std::move(cur)};
}

}  // namespace torus_cycles

#endif  // TORUS_CYCLES_SPECFUN_HPP
