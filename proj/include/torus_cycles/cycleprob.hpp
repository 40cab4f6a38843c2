#ifndef TORUS_CYCLES_CYCLEPROB_HPP
#define TORUS_CYCLES_CYCLEPROB_HPP

// Probability Theta(G, q) that one fixed labeled q-cycle is present, for the
// Erdos-Renyi model (closed form) and the geometric model on the unit torus
// (Fourier series over the integer lattice).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <variant>

#include "torus_cycles/errors.hpp"
#include "torus_cycles/geometry.hpp"
#include "torus_cycles/specfun.hpp"

namespace torus_cycles {

struct ErModel {
    double p = 0.0;
};

struct GrModel {
    BallSpec ball;
};

/// Either H(n, p) or the geometric random graph on the d-torus.
using GraphModel = std::variant<ErModel, GrModel>;

inline GraphModel make_er(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw invalid_argument("edge probability p must lie in [0, 1], got " + std::to_string(p));
    }
    return ErModel{p};
}

inline GraphModel make_gr(int d, Metric sigma, double r) { return GrModel{BallSpec(d, sigma, r)}; }

inline double edge_probability(const GraphModel& model) {
    if (const auto* er = std::get_if<ErModel>(&model)) return er->p;
    return ball_volume(std::get<GrModel>(model).ball);
}

/// Partial sum of a cycle-probability series.
struct SeriesValue {
    double value = 0.0;
    // Certified for sigma = inf, an asymptotic estimate for sigma = 2.
    double truncation_bound = 0.0;
    std::int64_t terms_used = 0;
    bool converged = true;
};

struct SeriesOptions {
    double tol = 1e-12;
    // 0 selects the per-metric default below.
    std::int64_t k_max = 0;

    static constexpr std::int64_t default_k_max_chebyshev = 1'000'000;
    static constexpr std::int64_t default_k_max_euclidean = 100'000;
};

namespace detail {

inline void check_cycle_length(int q) {
    if (q < 2) throw invalid_argument("cycle length q must be >= 2, got " + std::to_string(q));
}

inline void check_tol(double tol) {
    if (!(tol > 0.0)) throw invalid_argument("tolerance must be positive");
}

// Neumaier compensated summation.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Values within the truncation bound (plus rounding) of [0, 1] are clamped;
// anything further out is a numerical failure.
inline double clamp_probability(double v, double bound, int q) {
    const double slack = bound + 64.0 * std::numeric_limits<double>::epsilon();
    if (v < 0.0) {
        if (-v <= slack) return 0.0;
        throw numerical_failure("cycle probability series for q = " + std::to_string(q) +
                                    " went negative (" + std::to_string(v) + ")",
                                q);
    }
    if (v > 1.0) {
        if (v - 1.0 <= slack) return 1.0;
        throw numerical_failure("cycle probability series for q = " + std::to_string(q) +
                                    " exceeded 1 (" + std::to_string(v) + ")",
                                q);
    }
    return v;
}

inline double ipow(double x, int n) noexcept {
    double result = 1.0;
    while (n > 0) {
        if (n & 1) result *= x;
        x *= x;
        n >>= 1;
    }
    return result;
}

// Bound on (2r)^q * 2 * sum_{k>K} |sinc(2 pi k r)|^q using |sinc(x)| <= 1/x
// and the integral test: 2 pi^{-q} K^{1-q} / (q-1). Independent of r.
inline double chebyshev_tail_1d(int q, double shells) {
    return 2.0 * std::pow(std::numbers::pi, -q) * std::pow(shells, 1.0 - q) / (q - 1);
}

}  // namespace detail

/// Erdos-Renyi cycle probability: p for q = 2, p^q otherwise.
inline double theta_er(double p, int q) {
    detail::check_cycle_length(q);
    if (!(p >= 0.0 && p <= 1.0)) {
        throw invalid_argument("edge probability p must lie in [0, 1], got " + std::to_string(p));
    }
    return q == 2 ? p : detail::ipow(p, q);
}

/// sigma = inf: Theta = [(2r)^q (1 + 2 sum_k sinc(2 pi k r)^q)]^d, the d-th
/// power of the one-dimensional cycle probability.
inline SeriesValue theta_gr_inf(int d, double r, int q, const SeriesOptions& opts = {}) {
    const BallSpec ball(d, Metric::chebyshev, r);
    detail::check_cycle_length(q);
    detail::check_tol(opts.tol);
    if (q == 2) return SeriesValue{ball_volume(ball), 0.0, 0, true};

    const std::int64_t k_max =
        opts.k_max > 0 ? opts.k_max : SeriesOptions::default_k_max_chebyshev;

    // Smallest K whose one-dimensional tail, propagated through the d-th
    // power with the prefactor bounded by 1, meets tol.
    const double target = opts.tol / d;
    auto shells = static_cast<std::int64_t>(std::ceil(
        std::pow(2.0 / (std::pow(std::numbers::pi, q) * (q - 1) * target), 1.0 / (q - 1))));
    shells = std::max<std::int64_t>(shells, 1);

    const double scale = detail::ipow(2.0 * r, q);
    const double step = 2.0 * std::numbers::pi * r;
    detail::CompensatedSum sum;
    std::int64_t done = 0;
    bool converged = true;
    double one_dim = 0.0;
    double bound = 0.0;
    for (;;) {
        if (shells > k_max) {
            shells = k_max;
            converged = false;
        }
        for (std::int64_t k = done + 1; k <= shells; ++k) {
            sum.add(detail::ipow(sinc(step * static_cast<double>(k)), q));
        }
        done = shells;
        one_dim = scale * (1.0 + 2.0 * sum.value());
        const double tail = detail::chebyshev_tail_1d(q, static_cast<double>(done));
        bound = std::pow(one_dim + tail, d) - std::pow(one_dim, d);
        if (bound <= opts.tol || !converged || done == k_max) {
            converged = converged && bound <= opts.tol;
            break;
        }
        shells = done * 2;
    }
    const double value = detail::clamp_probability(std::pow(one_dim, d), bound, q);
    return SeriesValue{value, bound, done, converged};
}

namespace detail {

// Asymptotic estimate of the tail of the sigma = 2 shell sum beyond K.
//
// For large k, |FT(2 pi sqrt k)| ~ A k^{-(d+1)/4} |cos(phase)| with
// A = r^{(d-1)/2} / pi, and lattice points have average density
// rho(k) = (d/2) omega_d k^{d/2-1}. Integrating the envelope gives
//   E(K) = (d/2) omega_d A^q K^{d/2 - q(d+1)/4} / (q(d+1)/4 - d/2).
// Even q: the terms do not cancel and the tail is E(K) times the mean of
// cos^q. Odd q: the terms alternate in sign with half-period sqrt(K)/r in
// k, so the tail is at most about one half-period block; the smaller of the
// two estimates is used. Both carry a factor 2 for lattice-count fluctuation.
class EuclideanTail {
public:
    EuclideanTail(int d, double r, int q) : q_(q) {
        const double omega_d = std::pow(std::numbers::pi, d / 2.0) / gamma_half(d + 2);
        const double amp_q = std::pow(std::pow(r, (d - 1) / 2.0) / std::numbers::pi, q);
        const double decay = q * (d + 1) / 4.0;
        density_coeff_ = d * omega_d * amp_q;  // 2 * (d/2) omega_d A^q
        envelope_exp_ = d / 2.0 - decay;  // exponent of E(K), < 0
        envelope_coeff_ = density_coeff_ / (decay - d / 2.0);
        block_exp_ = d / 2.0 - 0.5 - decay;  // exponent of the block estimate, < 0
        block_coeff_ = density_coeff_ * (2.0 / std::numbers::pi) / r;
        if (q % 2 == 0) {
            double mean = 1.0;  // binom(q, q/2) / 2^q
            for (int j = 1; j <= q / 2; ++j) mean *= (q / 2.0 + j) / (4.0 * j);
            envelope_coeff_ *= mean;
        }
        // The envelope is only meaningful once 2 pi r sqrt(K) is past the
        // turning region of J_{d/2}.
        const double nu = d / 2.0;
        const double x_min = std::max(10.0, nu * nu);
        min_shells_ = std::max<std::int64_t>(
            64, static_cast<std::int64_t>(std::ceil(std::pow(x_min / (2.0 * std::numbers::pi * r), 2))));
    }

    double operator()(double shells) const {
        const double envelope = envelope_coeff_ * std::pow(shells, envelope_exp_);
        if (q_ % 2 == 0) return envelope;
        return std::min(envelope, block_coeff_ * std::pow(shells, block_exp_));
    }

    // Smallest K >= min_shells with estimate(K) <= tol.
    std::int64_t shells_for(double tol) const {
        double k = std::pow(tol / envelope_coeff_, 1.0 / envelope_exp_);
        if (q_ % 2 != 0) k = std::min(k, std::pow(tol / block_coeff_, 1.0 / block_exp_));
        if (!std::isfinite(k) || k > 9.0e18) return std::numeric_limits<std::int64_t>::max();
        return std::max(min_shells_, static_cast<std::int64_t>(std::ceil(k)));
    }

private:
    int q_;
    double density_coeff_ = 0.0;
    double envelope_exp_ = 0.0;
    double envelope_coeff_ = 0.0;
    double block_exp_ = 0.0;
    double block_coeff_ = 0.0;
    std::int64_t min_shells_ = 64;
};

}  // namespace detail

/// sigma = 2, d >= 2: Theta = V^q + sum_{k>=1} psi_d(k) FT(2 pi sqrt k)^q,
/// summed shell by shell in k = |m|^2.
inline SeriesValue theta_gr_2(int d, double r, int q, const SeriesOptions& opts = {}) {
    if (d < 2) throw invalid_argument("theta_gr_2 requires d >= 2; use the sigma = inf form for d = 1");
    const BallSpec ball(d, Metric::euclidean, r);
    detail::check_cycle_length(q);
    detail::check_tol(opts.tol);
    const double volume = ball_volume(ball);
    if (q == 2) return SeriesValue{volume, 0.0, 0, true};

    const std::int64_t k_max =
        opts.k_max > 0 ? opts.k_max : SeriesOptions::default_k_max_euclidean;
    const detail::EuclideanTail tail(d, r, q);
    std::int64_t shells = tail.shells_for(opts.tol);
    bool converged = true;
    if (shells > k_max) {
        shells = k_max;
        converged = false;
    }

    const LatticeCountTable psi = psi_counts(d, shells);
    const HalfIntOrder order = HalfIntOrder::for_dimension(d);
    detail::CompensatedSum sum;
    sum.add(detail::ipow(volume, q));
    for (std::int64_t k = 1; k <= shells; ++k) {
        const std::uint64_t count = psi[static_cast<std::size_t>(k)];
        if (count == 0) continue;
        const double root = std::sqrt(static_cast<double>(k));
        const double ft = std::pow(r / root, d / 2.0) * bessel_j(order, 2.0 * std::numbers::pi * r * root);
        sum.add(static_cast<double>(count) * detail::ipow(ft, q));
    }
    const double bound = tail(static_cast<double>(shells));
    converged = converged && bound <= opts.tol;
    const double value = detail::clamp_probability(sum.value(), bound, q);
    return SeriesValue{value, bound, shells, converged};
}

/// Theta(model, q). In one dimension the sigma = 2 and sigma = inf balls
/// coincide, so d = 1 always takes the sinc series.
inline SeriesValue theta(const GraphModel& model, int q, const SeriesOptions& opts = {}) {
    detail::check_cycle_length(q);
    if (const auto* er = std::get_if<ErModel>(&model)) return SeriesValue{theta_er(er->p, q), 0.0, 0, true};
    const BallSpec& ball = std::get<GrModel>(model).ball;
    if (ball.sigma() == Metric::chebyshev || ball.d() == 1) return theta_gr_inf(ball.d(), ball.r(), q, opts);
    return theta_gr_2(ball.d(), ball.r(), q, opts);
}

}  // namespace torus_cycles

#endif  // TORUS_CYCLES_CYCLEPROB_HPP
