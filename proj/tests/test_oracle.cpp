#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "torus_cycles/oracle.hpp"

namespace tc = torus_cycles;
namespace orc = torus_cycles::oracle;
using tc::BigInt;
using tc::Metric;
using tc::Rational;

namespace {

orc::AdjacencyMatrix from_mask(int n, std::uint32_t mask) {
    orc::AdjacencyMatrix m(n);
    int bit = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j, ++bit)
            if (mask & (1u << bit)) m.set_edge(i, j, true);
    return m;
}

orc::McOptions options(std::int64_t samples, std::uint64_t seed) {
    orc::McOptions o;
    o.samples = samples;
    o.seed = seed;
    return o;
}

}  // namespace

TEST(CounterRng, DeterministicPerSeedAndStream) {
    orc::CounterRng a(42, 3), b(42, 3), c(42, 4), d(43, 3);
    bool differs_c = false, differs_d = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a();
        EXPECT_EQ(x, b());
        differs_c |= x != c();
        differs_d |= x != d();
    }
    EXPECT_TRUE(differs_c);
    EXPECT_TRUE(differs_d);
}

TEST(CounterRng, UniformInUnitInterval) {
    orc::CounterRng rng(1);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
}

TEST(RunningStats, MergeMatchesSequential) {
    orc::RunningStats all, left, right;
    for (int i = 0; i < 1000; ++i) {
        const double x = std::sin(i * 0.37) * 5 + i % 7;
        all.add(x);
        (i < 400 ? left : right).add(x);
    }
    left.merge(right);
    EXPECT_EQ(left.count(), all.count());
    EXPECT_NEAR(left.mean(), all.mean(), 1e-12);
    EXPECT_NEAR(left.variance(), all.variance(), 1e-10);
    const auto est = all.estimate(9);
    EXPECT_NEAR(est.std_error, std::sqrt(all.variance() / 1000), 1e-15);
    EXPECT_EQ(est.seed, 9u);
}

TEST(AdjacencyMatrix, Validates) {
    EXPECT_THROW(orc::AdjacencyMatrix(2, {0, 1, 0, 0}), tc::invalid_argument);
    EXPECT_THROW(orc::AdjacencyMatrix(2, {1, 0, 0, 0}), tc::invalid_argument);
    EXPECT_THROW(orc::AdjacencyMatrix(2, {0, 2, 2, 0}), tc::invalid_argument);
    EXPECT_THROW(orc::AdjacencyMatrix(2, {0, 1, 1}), tc::invalid_argument);
    EXPECT_NO_THROW(orc::AdjacencyMatrix(2, {0, 1, 1, 0}));
    orc::AdjacencyMatrix m(3);
    EXPECT_THROW(m.set_edge(1, 1, true), tc::invalid_argument);
}

TEST(SampleGr, HalfRadiusChebyshevIsComplete) {
    for (int d = 1; d <= 4; ++d) {
        EXPECT_EQ(orc::sample_gr({d, Metric::chebyshev, 0.5}, 5, 17), orc::AdjacencyMatrix::complete(5));
    }
}

TEST(SampleGr, DeterministicForSeed) {
    const tc::BallSpec ball{2, Metric::euclidean, 0.3};
    EXPECT_EQ(orc::sample_gr(ball, 12, 99), orc::sample_gr(ball, 12, 99));
    EXPECT_FALSE(orc::sample_gr(ball, 12, 99) == orc::sample_gr(ball, 12, 100));
}

TEST(SampleGr, EdgeDensityMatchesVolume) {
    const tc::BallSpec ball{2, Metric::euclidean, 0.2};
    orc::CounterRng rng(5);
    orc::RunningStats stats;
    for (int i = 0; i < 100000; ++i) stats.add(orc::sample_gr(ball, 2, rng).edge_count());
    const auto est = stats.estimate(5);
    EXPECT_NEAR(est.mean, 0.12566, 4 * est.std_error + 1e-5);
    EXPECT_NEAR(est.mean, tc::ball_volume(ball), 4 * est.std_error);
}

TEST(McCycleProb, Examples) {
    const auto tri = orc::mc_cycle_prob({1, Metric::chebyshev, 0.1}, 3, options(1'000'000, 11));
    EXPECT_LE(std::abs(tri.mean - 0.03), 4 * tri.std_error);
    const auto full = orc::mc_cycle_prob({1, Metric::chebyshev, 0.5}, 4, options(10'000, 1));
    EXPECT_EQ(full.mean, 1.0);
    EXPECT_EQ(full.std_error, 0.0);
    const auto edge = orc::mc_cycle_prob({2, Metric::euclidean, 0.2}, 2, options(1'000'000, 2));
    EXPECT_LE(std::abs(edge.mean - tc::ball_volume({2, Metric::euclidean, 0.2})), 4 * edge.std_error);
    EXPECT_EQ(edge.samples, 1'000'000);
    EXPECT_EQ(edge.seed, 2u);
}

TEST(McCycleProb, PathConditionedAgreesWithDirect) {
    const tc::BallSpec ball{2, Metric::euclidean, 0.25};
    const auto direct = orc::mc_cycle_prob(ball, 4, options(1'000'000, 8));
    const auto path = orc::mc_cycle_prob(ball, 4, options(1'000'000, 8), orc::CycleSampler::path_conditioned);
    const double se = std::hypot(direct.std_error, path.std_error);
    EXPECT_LE(std::abs(direct.mean - path.mean), 4 * se);
    EXPECT_LT(path.std_error, direct.std_error);
}

// The 3r^2 closed form as a statistical gate over 100 seeds.
TEST(McCycleProb, WithinFourSigmaForNearlyAllSeeds) {
    const double r = 0.15;
    int within = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto est = orc::mc_cycle_prob({1, Metric::chebyshev, r}, 3, options(20'000, seed));
        within += std::abs(est.mean - 3 * r * r) <= 4 * est.std_error;
    }
    EXPECT_GE(within, 99);
}

TEST(McCycleProb, IndependentOfThreadCount) {
    auto opts = options(200'000, 77);
    opts.threads = 1;
    const auto one = orc::mc_cycle_prob({3, Metric::euclidean, 0.3}, 5, opts);
    opts.threads = 7;
    const auto seven = orc::mc_cycle_prob({3, Metric::euclidean, 0.3}, 5, opts);
    EXPECT_EQ(one.mean, seven.mean);
    EXPECT_EQ(one.std_error, seven.std_error);
}

// Parallel streams merged in order equal a hand-rolled sequential pass over
// the same per-stream generators.
TEST(McCycleProb, ParallelMergeEqualsSequentialStreams) {
    const tc::BallSpec ball{1, Metric::chebyshev, 0.2};
    auto opts = options(10'000, 5);
    opts.streams = 8;
    opts.threads = 4;
    const auto est = orc::mc_cycle_prob(ball, 3, opts);

    orc::RunningStats total;
    for (int s = 0; s < opts.streams; ++s) {
        orc::CounterRng rng(opts.seed, static_cast<std::uint64_t>(s));
        orc::RunningStats part;
        const std::int64_t count = opts.samples / opts.streams + (s < opts.samples % opts.streams ? 1 : 0);
        for (std::int64_t t = 0; t < count; ++t) {
            double x[3];
            for (double& c : x) c = rng.uniform();
            const bool hit = tc::detail::wrap_delta(x[0], x[1]) <= 0.2 && tc::detail::wrap_delta(x[1], x[2]) <= 0.2 &&
                             tc::detail::wrap_delta(x[2], x[0]) <= 0.2;
            part.add(hit ? 1.0 : 0.0);
        }
        total.merge(part);
    }
    EXPECT_EQ(est.mean, total.mean());
    EXPECT_EQ(est.samples, total.count());
}

TEST(MatrixExpectations, Examples) {
    const auto full = orc::mc_matrix_expectations(tc::make_er(1.0), 5, options(1000, 1));
    EXPECT_EQ(full.det.mean, 4.0);
    EXPECT_EQ(full.per.mean, 44.0);
    EXPECT_EQ(full.det.std_error, 0.0);
    const auto empty = orc::mc_matrix_expectations(tc::make_er(0.0), 5, options(1000, 1));
    EXPECT_EQ(empty.det.mean, 0.0);
    EXPECT_EQ(empty.per.mean, 0.0);

    const auto half = orc::mc_matrix_expectations(tc::make_er(0.5), 4, options(100'000, 3));
    const auto exact = orc::exact_er_expectations(4, Rational(1, 2));
    EXPECT_LE(std::abs(half.det.mean - exact.det.convert_to<double>()), 4 * half.det.std_error);
    EXPECT_LE(std::abs(half.per.mean - exact.per.convert_to<double>()), 4 * half.per.std_error);
    EXPECT_THROW(orc::mc_matrix_expectations(tc::make_er(0.5), 25, options(10, 1)), tc::capacity_error);
}

TEST(ExactDetPer, Examples) {
    const auto k2 = orc::AdjacencyMatrix::complete(2);
    EXPECT_EQ(orc::exact_det(k2), -1);
    EXPECT_EQ(orc::exact_per(k2), 1);
    const auto k4 = orc::AdjacencyMatrix::complete(4);
    EXPECT_EQ(orc::exact_det(k4), -3);
    EXPECT_EQ(orc::exact_per(k4), 9);
    const orc::AdjacencyMatrix zero(3);
    EXPECT_EQ(orc::exact_det(zero), 0);
    EXPECT_EQ(orc::exact_per(zero), 0);
    EXPECT_EQ(orc::exact_det(orc::AdjacencyMatrix(0)), 1);
}

TEST(ExactDetPer, CompleteGraphsUpToCapacity) {
    for (int n = 1; n <= orc::max_permanent_order; ++n) {
        const auto k = orc::AdjacencyMatrix::complete(n);
        EXPECT_EQ(orc::exact_det(k), (n % 2 ? 1 : -1) * (n - 1)) << n;
    }
    // per(K_n) = d_n = n d_{n-1} + (-1)^n
    BigInt d = 1;
    for (int n = 1; n <= 16; ++n) {
        d = d * n + (n % 2 ? -1 : 1);
        EXPECT_EQ(orc::exact_per(orc::AdjacencyMatrix::complete(n)), d) << n;
    }
    EXPECT_THROW(orc::exact_per(orc::AdjacencyMatrix(25)), tc::capacity_error);
}

TEST(ExactDetPer, ExhaustiveAgainstPermutationSumsUpToFour) {
    for (int n = 1; n <= 4; ++n) {
        const int slots = n * (n - 1) / 2;
        for (std::uint32_t mask = 0; mask < (1u << slots); ++mask) {
            const auto g = from_mask(n, mask);
            const auto [det, per] = orc::permutation_sums(g);
            EXPECT_EQ(orc::exact_det(g), det);
            EXPECT_EQ(orc::exact_per(g), per);
        }
    }
}

TEST(ExactDetPer, RandomAgainstPermutationSumsFiveAndSix) {
    orc::CounterRng rng(2024);
    for (int n : {5, 6}) {
        for (int t = 0; t < 1000; ++t) {
            const auto g = orc::sample_er(0.2 + 0.6 * rng.uniform(), n, rng);
            const auto [det, per] = orc::permutation_sums(g);
            ASSERT_EQ(orc::exact_det(g), det);
            ASSERT_EQ(orc::exact_per(g), per);
        }
    }
}

TEST(ExactErExpectations, Examples) {
    const Rational p(2, 9);
    const auto two = orc::exact_er_expectations(2, p);
    EXPECT_EQ(two.det, -p);
    EXPECT_EQ(two.per, p);
    const auto three = orc::exact_er_expectations(3, p);
    EXPECT_EQ(three.det, 2 * p * p * p);
    EXPECT_EQ(three.per, 2 * p * p * p);
    EXPECT_EQ(orc::exact_er_expectations(3, Rational(1)).det, 2);
    EXPECT_THROW(orc::exact_er_expectations(6, p), tc::capacity_error);
    EXPECT_THROW(orc::exact_er_expectations(3, Rational(3, 2)), tc::invalid_argument);
}

TEST(ExactErExpectations, CompleteGraphAtPOne) {
    for (int n = 2; n <= 5; ++n) {
        const auto e = orc::exact_er_expectations(n, Rational(1));
        EXPECT_EQ(e.det, n % 2 ? n - 1 : -(n - 1));
        EXPECT_EQ(e.per, orc::derangements(n));
    }
}

TEST(Derangements, Examples) {
    EXPECT_EQ(orc::derangements(4), 9u);
    EXPECT_EQ(orc::derangements(0), 1u);
    EXPECT_EQ(orc::derangements(1), 0u);
    EXPECT_THROW(orc::derangements(13), tc::capacity_error);
    EXPECT_THROW(orc::derangements_by_enumeration(-1), tc::capacity_error);
}

TEST(Derangements, FormulaMatchesEnumeration) {
    for (int n = 0; n <= 11; ++n) EXPECT_EQ(orc::derangements(n), orc::derangements_by_enumeration(n)) << n;
}

TEST(PsiBruteforce, Examples) {
    EXPECT_EQ(orc::psi_bruteforce(3, 1), 6u);
    EXPECT_EQ(orc::psi_bruteforce(2, 25), 12u);
    EXPECT_EQ(orc::psi_bruteforce(4, 0), 1u);
    EXPECT_THROW(orc::psi_bruteforce(5, 1), tc::capacity_error);
    EXPECT_THROW(orc::psi_bruteforce(2, 401), tc::capacity_error);
}
