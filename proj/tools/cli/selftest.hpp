#ifndef TORUS_CYCLES_CLI_SELFTEST_HPP
#define TORUS_CYCLES_CLI_SELFTEST_HPP

// Quick oracle cross-checks run by `torus-cycles selftest`. Each check pits
// a production routine against an independent computation.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "torus_cycles/torus_cycles.hpp"

namespace torus_cycles::cli {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace detail {

inline CheckResult guarded(const std::string& name, const std::function<std::string()>& body) {
    try {
        std::string failure = body();
        return {name, failure.empty(), failure};
    } catch (const std::exception& e) {
        return {name, false, std::string("threw: ") + e.what()};
    }
}

inline std::string check_er_exact() {
    for (int n = 2; n <= 4; ++n) {
        for (const Rational& p : {Rational(0), Rational(1, 4), Rational(1, 2), Rational(1)}) {
            const auto exact = oracle::exact_er_expectations(n, p);
            const auto theta = er_theta_sequence<Rational>(p, n);
            const auto lam = expected_polynomial<Rational>(theta, n, PolyKind::characteristic);
            const auto gam = expected_polynomial<Rational>(theta, n, PolyKind::permanental);
            if (lam.coeffs != exact.lambda || gam.coeffs != exact.gamma) {
                return "mismatch at n = " + std::to_string(n) + ", p = " + p.str();
            }
        }
    }
    return {};
}

inline std::string check_complete_graph() {
    for (int n = 2; n <= 20; ++n) {
        const auto lam = expected_polynomial<BigInt>(complete_theta_sequence<BigInt>(n), n, PolyKind::characteristic);
        const BigInt expected = BigInt((n % 2 == 0) ? -(n - 1) : (n - 1));
        if (lam.constant_term() != expected) return "det(K_" + std::to_string(n) + ")";
    }
    for (int n = 0; n <= 12; ++n) {
        const auto gam = expected_polynomial<BigInt>(complete_theta_sequence<BigInt>(n), n, PolyKind::permanental);
        if (gam.constant_term() != BigInt(oracle::derangements(n))) {
            return "per(K_" + std::to_string(n) + ")";
        }
    }
    return {};
}

inline std::string check_det_per(std::uint64_t seed) {
    oracle::CounterRng rng(seed, 0x5e1f);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + trial % 7;
        const auto g = oracle::sample_er(0.5, n, rng);
        const auto [det, per] = oracle::permutation_sums(g);
        if (oracle::exact_det(g) != det || oracle::exact_per(g) != BigInt(per)) {
            return "random graph " + std::to_string(trial) + " (n = " + std::to_string(n) + ")";
        }
    }
    return {};
}

inline std::string check_psi() {
    for (int d = 1; d <= 4; ++d) {
        const auto fast = psi_counts(d, 100);
        if (fast.counts != oracle::psi_bruteforce_table(d, 100)) return "d = " + std::to_string(d);
    }
    return {};
}

inline std::string check_closed_form() {
    for (double r : {0.05, 0.1, 0.2, 0.25}) {
        const auto sv = theta(make_gr(1, Metric::chebyshev, r), 3);
        if (std::abs(sv.value - 3 * r * r) > 1e-10) return "r = " + std::to_string(r);
    }
    return {};
}

inline std::string check_bessel() {
    for (double x : {0.3, 2.5, 11.0, 37.0, 120.0}) {
        const double ref = std::sqrt(2.0 / (std::numbers::pi * x)) * std::sin(x);
        if (std::abs(bessel_j(HalfIntOrder(1), x) - ref) > 1e-13) return "J_1/2(" + std::to_string(x) + ")";
    }
    for (double x : {0.5, 3.0, 20.0}) {
        const double lo = bessel_j(HalfIntOrder(1), x);
        const double mid = bessel_j(HalfIntOrder(3), x);
        const double hi = bessel_j(HalfIntOrder(5), x);
        if (std::abs(lo + hi - 3.0 * mid / x) > 1e-13) return "recurrence at x = " + std::to_string(x);
    }
    return {};
}

inline std::string check_monte_carlo(int threads, std::uint64_t seed) {
    oracle::McOptions mc;
    mc.samples = 200'000;
    mc.seed = seed;
    mc.threads = threads;
    const std::vector<BallSpec> balls{BallSpec(1, Metric::chebyshev, 0.2), BallSpec(2, Metric::euclidean, 0.2),
                                      BallSpec(3, Metric::chebyshev, 0.1)};
    for (const auto& ball : balls) {
        for (int q : {3, 4}) {
            const auto est = oracle::mc_cycle_prob(ball, q, mc, oracle::CycleSampler::path_conditioned);
            const double series = theta(GraphModel{GrModel{ball}}, q, SeriesOptions{1e-9}).value;
            if (std::abs(est.mean - series) > 5 * est.std_error) {
                return "d = " + std::to_string(ball.d()) + ", q = " + std::to_string(q) + ": series " +
                       std::to_string(series) + " vs " + std::to_string(est.mean) + " +- " +
                       std::to_string(est.std_error);
            }
        }
    }
    return {};
}

}  // namespace detail

inline std::vector<CheckResult> run_selftest(int threads, std::uint64_t seed) {
    using namespace detail;
    return {
        guarded("ER polynomials equal exact enumeration", check_er_exact),
        guarded("complete graph det and per", check_complete_graph),
        guarded("det/per against permutation sums", [&] { return check_det_per(seed); }),
        guarded("lattice counts against brute force", check_psi),
        guarded("1-d triangle probability 3r^2", check_closed_form),
        guarded("Bessel closed form and recurrence", check_bessel),
        guarded("cycle probabilities against Monte Carlo", [&] { return check_monte_carlo(threads, seed); }),
    };
}

}  // namespace torus_cycles::cli

#endif  // TORUS_CYCLES_CLI_SELFTEST_HPP
