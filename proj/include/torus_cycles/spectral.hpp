#ifndef TORUS_CYCLES_SPECTRAL_HPP
#define TORUS_CYCLES_SPECTRAL_HPP

// Expected characteristic polynomial E det(xI + A) and permanental polynomial
// E per(xI + A) of a random adjacency matrix, built from the cycle
// probabilities by expanding every permutation around the cycle through
// vertex 1:
//
//   P_n(x) = x P_{n-1}(x) + sum_{q=2}^{n} s_q (n-1)!/(n-q)! Theta(q) P_{n-q}(x)
//
// with s_q = (-1)^{q-1} for the determinant, s_q = 1 for the permanent and
// P_0 = 1. Everything downstream (elementary symmetric functions, expected
// Hamilton cycle counts, thresholds) is read off these polynomials.
//
// All routines are templated on the scalar so the same code runs in exact
// rational arithmetic (oracle comparisons) and in wide binary floating point.

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "torus_cycles/cycleprob.hpp"
#include "torus_cycles/errors.hpp"
#include "torus_cycles/geometry.hpp"
#include "torus_cycles/precision.hpp"

namespace torus_cycles {

enum class PolyKind { characteristic, permanental };

template <class Real>
struct ExpectedPolynomial {
    int n = 0;
    PolyKind kind = PolyKind::characteristic;
    // coeffs[k] multiplies x^k; size n + 1.
    std::vector<Real> coeffs;

    /// Expected determinant (characteristic) or permanent (permanental).
    const Real& constant_term() const { return coeffs.front(); }

    Real operator()(const Real& x) const {
        Real acc(0);
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
        return acc;
    }
};

/// Runs the recurrence for a given cycle-probability sequence.
/// theta[q] is Theta(q) for 2 <= q <= n; theta[0] and theta[1] are unused.
template <class Real>
ExpectedPolynomial<Real> expected_polynomial(std::span<const Real> theta, int n, PolyKind kind) {
    if (n < 0) throw invalid_argument("vertex count n must be >= 0");
    if (static_cast<int>(theta.size()) < n + 1) {
        throw invalid_argument("cycle probability sequence shorter than n + 1");
    }
    std::vector<std::vector<Real>> polys(static_cast<std::size_t>(n) + 1);
    polys[0] = {Real(1)};
    for (int m = 1; m <= n; ++m) {
        std::vector<Real> cur(static_cast<std::size_t>(m) + 1, Real(0));
        const auto& prev = polys[m - 1];
        for (std::size_t k = 0; k < prev.size(); ++k) cur[k + 1] += prev[k];

        BigInt falling = 1;  // (m-1)! / (m-q)!
        for (int q = 2; q <= m; ++q) {
            falling *= (m - q + 1);
            Real weight = from_integer<Real>(falling) * theta[q];
            if (kind == PolyKind::characteristic && q % 2 == 0) weight = -weight;
            const auto& sub = polys[m - q];
            for (std::size_t k = 0; k < sub.size(); ++k) cur[k] += weight * sub[k];
        }
        polys[m] = std::move(cur);
    }
    return ExpectedPolynomial<Real>{n, kind, std::move(polys[n])};
}

/// Theta(q) = p^q (p for q = 2), evaluated in Real.
template <class Real>
std::vector<Real> er_theta_sequence(const Real& p, int n) {
    std::vector<Real> theta(static_cast<std::size_t>(std::max(n, 1)) + 1, Real(0));
    if (n >= 2) theta[2] = p;
    Real power = p * p;
    for (int q = 3; q <= n; ++q) {
        power *= p;
        theta[q] = power;
    }
    return theta;
}

/// Theta identically 1: the complete graph.
template <class Real>
std::vector<Real> complete_theta_sequence(int n) {
    return std::vector<Real>(static_cast<std::size_t>(std::max(n, 1)) + 1, Real(1));
}

/// Theta(model, q) for q = 2..n. The geometric series are evaluated once per
/// q; a series that misses tol raises numerical_failure naming q.
template <class Real>
std::vector<Real> theta_sequence(const GraphModel& model, int n, const SeriesOptions& opts = {}) {
    if (const auto* er = std::get_if<ErModel>(&model)) return er_theta_sequence(Real(er->p), n);
    std::vector<Real> theta(static_cast<std::size_t>(std::max(n, 1)) + 1, Real(0));
    for (int q = 2; q <= n; ++q) {
        const SeriesValue sv = torus_cycles::theta(model, q, opts);
        if (!sv.converged) {
            throw numerical_failure("cycle probability series for q = " + std::to_string(q) +
                                        " did not reach tol (estimated tail " +
                                        std::to_string(sv.truncation_bound) + " after " +
                                        std::to_string(sv.terms_used) + " shells)",
                                    q);
        }
        theta[q] = Real(sv.value);
    }
    return theta;
}

template <class Real>
ExpectedPolynomial<Real> lambda_poly(const GraphModel& model, int n, const SeriesOptions& opts = {}) {
    const auto theta = theta_sequence<Real>(model, n, opts);
    return expected_polynomial<Real>(theta, n, PolyKind::characteristic);
}

template <class Real>
ExpectedPolynomial<Real> gamma_poly(const GraphModel& model, int n, const SeriesOptions& opts = {}) {
    const auto theta = theta_sequence<Real>(model, n, opts);
    return expected_polynomial<Real>(theta, n, PolyKind::permanental);
}

/// Expected elementary symmetric functions of the adjacency eigenvalues.
template <class Real>
struct EsfTable {
    int n = 0;
    // values[k] = E e_k(lambda_1, ..., lambda_n), k = 0..n.
    std::vector<Real> values;
};

/// e_k is the coefficient of x^{n-k} in E det(xI + A).
template <class Real>
EsfTable<Real> esf_from_lambda(const ExpectedPolynomial<Real>& lambda) {
    if (lambda.kind != PolyKind::characteristic) {
        throw invalid_argument("elementary symmetric functions come from the characteristic polynomial");
    }
    return EsfTable<Real>{lambda.n, std::vector<Real>(lambda.coeffs.rbegin(), lambda.coeffs.rend())};
}

template <class Real>
EsfTable<Real> esf_table(const GraphModel& model, int n, const SeriesOptions& opts = {}) {
    return esf_from_lambda(lambda_poly<Real>(model, n, opts));
}

/// Expected number of Hamilton cycles, Theta(n) (n-1)!/2.
template <class Real>
Real hamilton_expectation(const GraphModel& model, int n, const SeriesOptions& opts = {}) {
    if (n < 3) throw invalid_argument("Hamilton cycles need n >= 3, got " + std::to_string(n));
    BigInt cycles = 1;
    for (int j = 3; j <= n - 1; ++j) cycles *= j;  // (n-1)!/2
    Real cycle_prob;
    if (const auto* er = std::get_if<ErModel>(&model)) {
        cycle_prob = er_theta_sequence(Real(er->p), n)[n];
    } else {
        const SeriesValue sv = theta(model, n, opts);
        if (!sv.converged) {
            throw numerical_failure("cycle probability series for q = " + std::to_string(n) +
                                        " did not reach tol",
                                    n);
        }
        cycle_prob = Real(sv.value);
    }
    return cycle_prob * from_integer<Real>(cycles);
}

// ---------------------------------------------------------------------------
// Thresholds

enum class ThresholdQuantity { hamilton, permanent };

inline std::string_view to_string(ThresholdQuantity q) noexcept {
    return q == ThresholdQuantity::hamilton ? "hamilton" : "permanent";
}

struct ErFamily {};

struct GrFamily {
    int d = 2;
    Metric sigma = Metric::euclidean;
};

/// A model parameterized by its edge probability.
using ModelFamily = std::variant<ErFamily, GrFamily>;

inline double max_edge_probability(const ModelFamily& family) {
    if (const auto* gr = std::get_if<GrFamily>(&family)) return max_edge_probability(gr->d, gr->sigma);
    return 1.0;
}

/// The member of the family with edge probability p > 0; geometric models
/// map p to r through the ball volume.
inline GraphModel model_at(const ModelFamily& family, double p) {
    if (std::holds_alternative<ErFamily>(family)) return make_er(p);
    const auto& gr = std::get<GrFamily>(family);
    return make_gr(gr.d, gr.sigma, r_from_p(gr.d, gr.sigma, p));
}

inline std::string describe(const ModelFamily& family) {
    if (std::holds_alternative<ErFamily>(family)) return "ER";
    const auto& gr = std::get<GrFamily>(family);
    return "GR d=" + std::to_string(gr.d) + " sigma=" + std::string(to_string(gr.sigma));
}

/// Expected Hamilton-cycle count or expected permanent at edge probability p.
/// p = 0 is the empty graph.
template <class Real>
Real threshold_target(const ModelFamily& family, double p, int n, ThresholdQuantity quantity,
                      const SeriesOptions& opts = {}) {
    if (p == 0.0) return Real(n == 0 ? 1 : 0);
    const GraphModel model = model_at(family, p);
    if (quantity == ThresholdQuantity::hamilton) return hamilton_expectation<Real>(model, n, opts);
    return gamma_poly<Real>(model, n, opts).constant_term();
}

class no_threshold : public numerical_failure {
public:
    using numerical_failure::numerical_failure;
};

struct ThresholdOptions {
    double p_tol = 1e-6;
    int monotonic_samples = 16;
    SeriesOptions series{};
};

struct ThresholdResult {
    int n = 0;
    ThresholdQuantity quantity = ThresholdQuantity::hamilton;
    // Smallest edge probability found with expectation >= 1 (upper end of
    // the final bracket).
    double edge_probability = 0.0;
    double bracket_width = 0.0;
};

/// Bisection on the edge probability for the point where the expectation
/// reaches 1. The expectation is checked to be nondecreasing on
/// monotonic_samples equally spaced probabilities first.
template <class Real>
ThresholdResult threshold(const ModelFamily& family, int n, ThresholdQuantity quantity,
                          const ThresholdOptions& opts = {}) {
    if (n < 3) throw invalid_argument("threshold needs n >= 3, got " + std::to_string(n));
    if (!(opts.p_tol > 0.0)) throw invalid_argument("threshold tolerance must be positive");
    const double p_max = max_edge_probability(family);
    auto target = [&](double p) { return threshold_target<Real>(family, p, n, quantity, opts.series); };

    Real previous(0);
    Real at_max(0);
    for (int i = 1; i <= opts.monotonic_samples; ++i) {
        const double p = p_max * i / opts.monotonic_samples;
        Real value = target(p);
        if (value < previous * Real(1 - 1e-9)) {
            throw numerical_failure("expected " + std::string(to_string(quantity)) +
                                    " is not nondecreasing in p for " + describe(family) +
                                    ", n = " + std::to_string(n));
        }
        previous = value;
        at_max = value;
    }
    if (opts.monotonic_samples < 1) at_max = target(p_max);
    if (at_max < Real(1)) {
        throw no_threshold("expected " + std::string(to_string(quantity)) + " stays below 1 for " +
                           describe(family) + ", n = " + std::to_string(n) +
                           " (value at p = " + std::to_string(p_max) + " is " +
                           std::to_string(to_double(at_max)) + ")");
    }

    double lo = 0.0;
    double hi = p_max;
    while (hi - lo > opts.p_tol) {
        const double mid = 0.5 * (lo + hi);
        if (target(mid) >= Real(1)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return ThresholdResult{n, quantity, hi, hi - lo};
}

}  // namespace torus_cycles

#endif  // TORUS_CYCLES_SPECTRAL_HPP
