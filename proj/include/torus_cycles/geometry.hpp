#ifndef TORUS_CYCLES_GEOMETRY_HPP
#define TORUS_CYCLES_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "torus_cycles/errors.hpp"
#include "torus_cycles/specfun.hpp"

namespace torus_cycles {

/// L_sigma metric index. Only sigma = 2 and sigma = infinity have closed-form
/// ball transforms.
enum class Metric { euclidean, chebyshev };

inline std::string_view to_string(Metric m) noexcept {
    return m == Metric::euclidean ? "2" : "inf";
}

inline Metric parse_metric(std::string_view s) {
    if (s == "2") return Metric::euclidean;
    if (s == "inf" || s == "infinity") return Metric::chebyshev;
    throw invalid_argument("sigma must be 2 or inf, got '" + std::string(s) + "'");
}

/// Ball of radius r in the L_sigma metric on R^d, restricted to 0 < r <= 1/2
/// so that it embeds in the unit torus.
class BallSpec {
public:
    BallSpec(int d, Metric sigma, double r) : d_(d), sigma_(sigma), r_(r) {
        if (d < 1) throw invalid_argument("dimension d must be >= 1");
        if (!(r > 0.0 && r <= 0.5)) {
            throw out_of_range("r must lie in (0, 0.5], got " + std::to_string(r));
        }
    }

    int d() const noexcept { return d_; }
    Metric sigma() const noexcept { return sigma_; }
    double r() const noexcept { return r_; }

    friend bool operator==(const BallSpec&, const BallSpec&) = default;

private:
    int d_;
    Metric sigma_;
    double r_;
};

/// Volume of the ball, which is also the edge probability of the geometric
/// random graph.
inline double ball_volume(const BallSpec& spec) {
    const int d = spec.d();
    const double r = spec.r();
    if (spec.sigma() == Metric::chebyshev) return std::pow(2.0 * r, d);
    return std::pow(std::numbers::pi, d / 2.0) * std::pow(r, d) / gamma_half(d + 2);
}

/// Fourier transform of the ball indicator.
///
/// euclidean: radial form (2 pi r / w)^{d/2} J_{d/2}(r w) as a function of
/// w = |omega|_2, continuous at w = 0 where it equals the volume.
/// chebyshev: the one-dimensional factor 2 r sinc(w r); the d-dimensional
/// transform is the product of these over the coordinates.
inline double ball_ft(const BallSpec& spec, double omega_norm) {
    if (!(omega_norm >= 0.0)) throw invalid_argument("ball_ft: omega_norm must be >= 0");
    const double r = spec.r();
    if (spec.sigma() == Metric::chebyshev) return 2.0 * r * sinc(omega_norm * r);

    const int d = spec.d();
    const double x = r * omega_norm;
    if (x < 1e-8) return ball_volume(spec);
    return std::pow(2.0 * std::numbers::pi * r / omega_norm, d / 2.0) *
           bessel_j(HalfIntOrder::for_dimension(d), x);
}

/// Point of the unit torus [0,1)^d.
class TorusPoint {
public:
    explicit TorusPoint(std::vector<double> coords) : coords_(std::move(coords)) {
        for (double c : coords_) {
            if (!(c >= 0.0 && c < 1.0)) throw invalid_argument("torus coordinates must lie in [0, 1)");
        }
    }

    std::span<const double> coords() const noexcept { return coords_; }
    std::size_t dimension() const noexcept { return coords_.size(); }

private:
    std::vector<double> coords_;
};

namespace detail {

inline double wrap_delta(double a, double b) noexcept {
    const double delta = std::abs(a - b);
    return std::min(delta, 1.0 - delta);
}

// Distance between raw coordinate arrays; sizes must already agree.
inline double torus_distance_raw(const double* x, const double* y, int d, Metric sigma) noexcept {
    if (sigma == Metric::chebyshev) {
        double m = 0.0;
        for (int i = 0; i < d; ++i) m = std::max(m, wrap_delta(x[i], y[i]));
        return m;
    }
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        const double w = wrap_delta(x[i], y[i]);
        s += w * w;
    }
    return std::sqrt(s);
}

}  // namespace detail

/// L_sigma norm of the coordinate-wise wraparound differences.
inline double torus_distance(std::span<const double> x, std::span<const double> y, Metric sigma) {
    if (x.size() != y.size()) {
        throw invalid_argument("torus_distance: dimension mismatch (" + std::to_string(x.size()) +
                               " vs " + std::to_string(y.size()) + ")");
    }
    return detail::torus_distance_raw(x.data(), y.data(), static_cast<int>(x.size()), sigma);
}

inline double torus_distance(const TorusPoint& x, const TorusPoint& y, Metric sigma) {
    return torus_distance(x.coords(), y.coords(), sigma);
}

/// Inverse of ball_volume in r. Throws out_of_range when the required radius
/// exceeds 1/2.
inline double r_from_p(int d, Metric sigma, double p) {
    if (d < 1) throw invalid_argument("dimension d must be >= 1");
    if (!(p > 0.0 && p <= 1.0)) {
        throw out_of_range("edge probability must lie in (0, 1], got " + std::to_string(p));
    }
    double r;
    if (sigma == Metric::chebyshev) {
        r = std::pow(p, 1.0 / d) / 2.0;
    } else {
        r = std::pow(p * gamma_half(d + 2) / std::pow(std::numbers::pi, d / 2.0), 1.0 / d);
    }
    // Rounding at the largest admissible probability.
    if (r > 0.5 && r <= 0.5 * (1.0 + 1e-12)) r = 0.5;
    if (r > 0.5) {
        throw out_of_range("edge probability " + std::to_string(p) + " needs r = " +
                           std::to_string(r) + " > 0.5 for d = " + std::to_string(d) +
                           ", sigma = " + std::string(to_string(sigma)));
    }
    return r;
}

/// Largest edge probability the model reaches, at r = 1/2.
inline double max_edge_probability(int d, Metric sigma) { return ball_volume(BallSpec(d, sigma, 0.5)); }

}  // namespace torus_cycles

#endif  // TORUS_CYCLES_GEOMETRY_HPP
