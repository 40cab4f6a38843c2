#ifndef TORUS_CYCLES_ORACLE_HPP
#define TORUS_CYCLES_ORACLE_HPP

// Ground truth that does not go through the series or the recurrences:
// Monte Carlo simulation on the torus, exhaustive enumeration of small
// Erdos-Renyi graphs, exact determinants and permanents, derangement counts
// and brute-force lattice counts.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numeric>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "torus_cycles/cycleprob.hpp"
#include "torus_cycles/errors.hpp"
#include "torus_cycles/geometry.hpp"
#include "torus_cycles/precision.hpp"

namespace torus_cycles::oracle {

// ---------------------------------------------------------------------------
// Random numbers

/// Counter-based generator: the k-th output of a stream is
/// mix(key + k * golden_gamma) (SplitMix64). Streams are keyed by
/// (seed, stream index), so parallel workers draw disjoint, reproducible
/// sequences without sharing state.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(seed ^ mix(stream + 0x6a09e667f3bcc909ULL))) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept {
        counter_ += golden_gamma;
        return mix(key_ + counter_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    static constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ULL;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// ---------------------------------------------------------------------------
// Estimates

struct McEstimate {
    double mean = 0.0;
    // Sample standard deviation / sqrt(samples).
    double std_error = 0.0;
    std::int64_t samples = 0;
    std::uint64_t seed = 0;
};

/// Welford accumulator with the pairwise merge of Chan et al.
class RunningStats {
public:
    void add(double x) noexcept {
        ++count_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(count_);
        m2_ += delta * (x - mean_);
    }

    void merge(const RunningStats& other) noexcept {
        if (other.count_ == 0) return;
        if (count_ == 0) {
            *this = other;
            return;
        }
        const auto total = static_cast<double>(count_ + other.count_);
        const double delta = other.mean_ - mean_;
        mean_ += delta * static_cast<double>(other.count_) / total;
        m2_ += other.m2_ + delta * delta * static_cast<double>(count_) *
                               static_cast<double>(other.count_) / total;
        count_ += other.count_;
    }

    std::int64_t count() const noexcept { return count_; }
    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }

    McEstimate estimate(std::uint64_t seed) const {
        const double se = count_ > 0 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0;
        return McEstimate{mean_, se, count_, seed};
    }

private:
    std::int64_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct McOptions {
    std::int64_t samples = 1'000'000;
    std::uint64_t seed = 1;
    // Work is split into this many independent streams; the result depends
    // on (samples, seed, streams) only, never on the thread count.
    int streams = 64;
    // 0 = hardware concurrency.
    int threads = 0;
};

namespace detail {

inline int resolve_threads(int threads) {
    if (threads > 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs body(rng, count, acc) once per stream, each stream with its own
// counter-keyed generator and accumulator. Accumulators come back in stream
// order so callers can merge deterministically.
template <class Acc, class Body>
std::vector<Acc> run_streams(const McOptions& opts, Body&& body) {
    if (opts.samples < 1) throw invalid_argument("Monte Carlo needs at least one sample");
    if (opts.streams < 1) throw invalid_argument("Monte Carlo needs at least one stream");
    const int streams = opts.streams;
    std::vector<Acc> partial(static_cast<std::size_t>(streams));
    auto run_one = [&](int s) {
        const std::int64_t count =
            opts.samples / streams + (s < opts.samples % streams ? 1 : 0);
        CounterRng rng(opts.seed, static_cast<std::uint64_t>(s));
        body(rng, count, partial[static_cast<std::size_t>(s)]);
    };

    const int workers = std::min(resolve_threads(opts.threads), streams);
    if (workers <= 1) {
        for (int s = 0; s < streams; ++s) run_one(s);
        return partial;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (int s = next.fetch_add(1); s < streams; s = next.fetch_add(1)) run_one(s);
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                    next.store(streams);
                }
            });
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return partial;
}

inline void uniform_torus_point(CounterRng& rng, double* out, int d) noexcept {
    for (int i = 0; i < d; ++i) out[i] = rng.uniform();
}

// Uniform point of the ball around the origin (rejection from the cube for
// sigma = 2).
inline void uniform_ball_offset(CounterRng& rng, const BallSpec& ball, double* out) noexcept {
    const int d = ball.d();
    const double r = ball.r();
    for (;;) {
        double norm2 = 0.0;
        for (int i = 0; i < d; ++i) {
            out[i] = (2.0 * rng.uniform() - 1.0) * r;
            norm2 += out[i] * out[i];
        }
        if (ball.sigma() == Metric::chebyshev || norm2 <= r * r) return;
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Graphs

/// Symmetric 0/1 matrix with zero diagonal.
class AdjacencyMatrix {
public:
    explicit AdjacencyMatrix(int n) : n_(n), entries_(static_cast<std::size_t>(n) * n, 0) {
        if (n < 0) throw invalid_argument("matrix order must be >= 0");
    }

    AdjacencyMatrix(int n, std::vector<std::uint8_t> entries) : n_(n), entries_(std::move(entries)) {
        if (n < 0 || entries_.size() != static_cast<std::size_t>(n) * n) {
            throw invalid_argument("adjacency matrix needs n*n entries");
        }
        for (int i = 0; i < n; ++i) {
            if (at(i, i) != 0) throw invalid_argument("adjacency matrix must have a zero diagonal");
            for (int j = 0; j < n; ++j) {
                if (at(i, j) > 1) throw invalid_argument("adjacency entries must be 0 or 1");
                if (at(i, j) != at(j, i)) throw invalid_argument("adjacency matrix must be symmetric");
            }
        }
    }

    static AdjacencyMatrix complete(int n) {
        AdjacencyMatrix m(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) m.entries_[static_cast<std::size_t>(i) * n + j] = 1;
        return m;
    }

    int order() const noexcept { return n_; }
    std::uint8_t operator()(int i, int j) const noexcept { return at(i, j); }

    void set_edge(int i, int j, bool present) {
        if (i == j) throw invalid_argument("no self loops in an adjacency matrix");
        entries_[static_cast<std::size_t>(i) * n_ + j] = present;
        entries_[static_cast<std::size_t>(j) * n_ + i] = present;
    }

    int edge_count() const noexcept {
        int e = 0;
        for (int i = 0; i < n_; ++i)
            for (int j = i + 1; j < n_; ++j) e += at(i, j);
        return e;
    }

    /// Rows and columns whose bit is set in mask.
    AdjacencyMatrix principal_submatrix(std::uint32_t mask) const {
        std::vector<int> keep;
        for (int i = 0; i < n_; ++i)
            if (mask & (1u << i)) keep.push_back(i);
        AdjacencyMatrix sub(static_cast<int>(keep.size()));
        for (std::size_t a = 0; a < keep.size(); ++a)
            for (std::size_t b = 0; b < keep.size(); ++b)
                sub.entries_[a * keep.size() + b] = at(keep[a], keep[b]);
        return sub;
    }

    friend bool operator==(const AdjacencyMatrix&, const AdjacencyMatrix&) = default;

private:
    std::uint8_t at(int i, int j) const noexcept { return entries_[static_cast<std::size_t>(i) * n_ + j]; }

    int n_;
    std::vector<std::uint8_t> entries_;
};

/// n uniform torus points, joined when within distance r.
inline AdjacencyMatrix sample_gr(const BallSpec& ball, int n, CounterRng& rng) {
    if (n < 1) throw invalid_argument("vertex count n must be >= 1");
    const int d = ball.d();
    std::vector<double> pts(static_cast<std::size_t>(n) * d);
    for (int i = 0; i < n; ++i) detail::uniform_torus_point(rng, &pts[static_cast<std::size_t>(i) * d], d);
    AdjacencyMatrix m(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double dist = torus_cycles::detail::torus_distance_raw(
                &pts[static_cast<std::size_t>(i) * d], &pts[static_cast<std::size_t>(j) * d], d, ball.sigma());
            if (dist <= ball.r()) m.set_edge(i, j, true);
        }
    return m;
}

inline AdjacencyMatrix sample_gr(const BallSpec& ball, int n, std::uint64_t seed) {
    CounterRng rng(seed);
    return sample_gr(ball, n, rng);
}

inline AdjacencyMatrix sample_er(double p, int n, CounterRng& rng) {
    if (n < 1) throw invalid_argument("vertex count n must be >= 1");
    AdjacencyMatrix m(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.uniform() < p) m.set_edge(i, j, true);
    return m;
}

inline AdjacencyMatrix sample_graph(const GraphModel& model, int n, CounterRng& rng) {
    if (const auto* er = std::get_if<ErModel>(&model)) return sample_er(er->p, n, rng);
    return sample_gr(std::get<GrModel>(model).ball, n, rng);
}

// ---------------------------------------------------------------------------
// Exact determinant and permanent

inline constexpr int max_permanent_order = 24;

/// Fraction-free (Bareiss) elimination in 128-bit integers. Entries of
/// intermediate matrices are minors of a 0/1 matrix, bounded well inside
/// 64 bits for n <= 24; their pairwise products fit in 128.
inline std::int64_t exact_det(const AdjacencyMatrix& m) {
    const int n = m.order();
    if (n > max_permanent_order) {
        throw capacity_error("exact_det supports n <= " + std::to_string(max_permanent_order));
    }
    if (n == 0) return 1;
    std::vector<__int128> a(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(i) * n + j] = m(i, j);
    auto at = [&](int i, int j) -> __int128& { return a[static_cast<std::size_t>(i) * n + j]; };

    int sign = 1;
    __int128 prev = 1;
    for (int k = 0; k < n - 1; ++k) {
        if (at(k, k) == 0) {
            int pivot = -1;
            for (int i = k + 1; i < n; ++i) {
                if (at(i, k) != 0) {
                    pivot = i;
                    break;
                }
            }
            if (pivot < 0) return 0;
            for (int j = 0; j < n; ++j) std::swap(at(k, j), at(pivot, j));
            sign = -sign;
        }
        for (int i = k + 1; i < n; ++i) {
            for (int j = k + 1; j < n; ++j) {
                at(i, j) = (at(i, j) * at(k, k) - at(i, k) * at(k, j)) / prev;
            }
        }
        prev = at(k, k);
    }
    return static_cast<std::int64_t>(sign * at(n - 1, n - 1));
}

/// Ryser's inclusion-exclusion formula with Gray-code column updates:
/// per(A) = (-1)^n sum_S (-1)^{|S|} prod_i sum_{j in S} a_ij.
/// Partial sums are taken modulo 2^128; the permanent itself is below
/// 24! < 2^80, so the wrapped result is exact.
inline BigInt exact_per(const AdjacencyMatrix& m) {
    const int n = m.order();
    if (n > max_permanent_order) {
        throw capacity_error("exact_per supports n <= " + std::to_string(max_permanent_order));
    }
    if (n == 0) return 1;
    using u128 = unsigned __int128;
    std::vector<int> row_sums(static_cast<std::size_t>(n), 0);
    u128 total = 0;
    int subset_size = 0;
    const std::uint32_t limit = 1u << n;
    for (std::uint32_t g = 1; g < limit; ++g) {
        const int col = std::countr_zero(g);
        const bool added = ((g ^ (g >> 1)) >> col) & 1u;
        const int delta = added ? 1 : -1;
        subset_size += delta;
        u128 product = 1;
        for (int i = 0; i < n; ++i) {
            row_sums[static_cast<std::size_t>(i)] += delta * m(i, col);
            product *= static_cast<u128>(row_sums[static_cast<std::size_t>(i)]);
        }
        if ((n - subset_size) % 2 == 0) {
            total += product;
        } else {
            total -= product;
        }
    }
    const auto lo = static_cast<std::uint64_t>(total);
    const auto hi = static_cast<std::uint64_t>(total >> 64);
    BigInt result = hi;
    result <<= 64;
    result += lo;
    return result;
}

// ---------------------------------------------------------------------------
// Monte Carlo

enum class CycleSampler {
    // q independent uniform points; the indicator of all q cycle edges.
    direct,
    // x_1 uniform and x_{i+1} uniform in the ball around x_i, which is the
    // law of the points given the q-1 path edges; the estimate is
    // beta^{q-1} times the indicator of the closing edge.
    path_conditioned,
};

/// Probability that the labeled cycle 1-2-...-q-1 is present.
inline McEstimate mc_cycle_prob(const BallSpec& ball, int q, const McOptions& opts,
                                CycleSampler sampler = CycleSampler::direct) {
    if (q < 2) throw invalid_argument("cycle length q must be >= 2");
    const int d = ball.d();
    const double r = ball.r();
    const Metric sigma = ball.sigma();
    const double path_weight = std::pow(ball_volume(ball), q - 1);

    auto body = [&](CounterRng& rng, std::int64_t count, RunningStats& stats) {
        std::vector<double> pts(static_cast<std::size_t>(q) * d);
        std::vector<double> step(static_cast<std::size_t>(d));
        auto point = [&](int i) { return &pts[static_cast<std::size_t>(i) * d]; };
        for (std::int64_t t = 0; t < count; ++t) {
            if (sampler == CycleSampler::direct) {
                for (int i = 0; i < q; ++i) detail::uniform_torus_point(rng, point(i), d);
                bool present = true;
                const int edges = (q == 2) ? 1 : q;
                for (int e = 0; e < edges && present; ++e) {
                    const int a = e;
                    const int b = (e + 1) % q;
                    present = torus_cycles::detail::torus_distance_raw(point(a), point(b), d, sigma) <= r;
                }
                stats.add(present ? 1.0 : 0.0);
            } else {
                if (q == 2) {
                    stats.add(path_weight);
                    continue;
                }
                detail::uniform_torus_point(rng, point(0), d);
                for (int i = 1; i < q; ++i) {
                    detail::uniform_ball_offset(rng, ball, step.data());
                    for (int c = 0; c < d; ++c) {
                        double x = point(i - 1)[c] + step[static_cast<std::size_t>(c)];
                        x -= std::floor(x);
                        point(i)[c] = x;
                    }
                }
                const bool closes =
                    torus_cycles::detail::torus_distance_raw(point(q - 1), point(0), d, sigma) <= r;
                stats.add(closes ? path_weight : 0.0);
            }
        }
    };
    RunningStats total;
    for (const auto& part : detail::run_streams<RunningStats>(opts, body)) total.merge(part);
    return total.estimate(opts.seed);
}

struct MatrixExpectations {
    McEstimate det;
    McEstimate per;
};

/// Sample means of det(A) and per(A) over sampled graphs.
inline MatrixExpectations mc_matrix_expectations(const GraphModel& model, int n, const McOptions& opts) {
    if (n < 1) throw invalid_argument("vertex count n must be >= 1");
    if (n > max_permanent_order) {
        throw capacity_error("Monte Carlo determinant/permanent supports n <= " +
                             std::to_string(max_permanent_order));
    }
    struct Pair {
        RunningStats det;
        RunningStats per;
    };
    auto body = [&](CounterRng& rng, std::int64_t count, Pair& acc) {
        for (std::int64_t t = 0; t < count; ++t) {
            const AdjacencyMatrix g = sample_graph(model, n, rng);
            acc.det.add(static_cast<double>(exact_det(g)));
            acc.per.add(exact_per(g).convert_to<double>());
        }
    };
    RunningStats det_total;
    RunningStats per_total;
    for (const auto& part : detail::run_streams<Pair>(opts, body)) {
        det_total.merge(part.det);
        per_total.merge(part.per);
    }
    return MatrixExpectations{det_total.estimate(opts.seed), per_total.estimate(opts.seed)};
}

// ---------------------------------------------------------------------------
// Exact enumeration

inline constexpr int max_exact_er_order = 5;

struct ErExactExpectations {
    Rational det;
    Rational per;
    // Coefficients of E det(xI + A) and E per(xI + A); index k multiplies x^k.
    std::vector<Rational> lambda;
    std::vector<Rational> gamma;
};

/// Sums over all 2^{n(n-1)/2} labeled graphs with weights
/// p^{e(G)} (1-p)^{E - e(G)}. The coefficient of x^k in det(xI + A) is the
/// sum of the principal minors of order n - k, likewise for the permanent.
inline ErExactExpectations exact_er_expectations(int n, const Rational& p) {
    if (n < 0) throw invalid_argument("vertex count n must be >= 0");
    if (n > max_exact_er_order) {
        throw capacity_error("exact ER enumeration supports n <= " + std::to_string(max_exact_er_order));
    }
    if (p < 0 || p > 1) throw invalid_argument("edge probability must lie in [0, 1]");

    std::vector<std::pair<int, int>> slots;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) slots.emplace_back(i, j);
    const int edges = static_cast<int>(slots.size());

    std::vector<Rational> p_pow(static_cast<std::size_t>(edges) + 1, Rational(1));
    std::vector<Rational> q_pow(static_cast<std::size_t>(edges) + 1, Rational(1));
    for (int e = 1; e <= edges; ++e) {
        p_pow[static_cast<std::size_t>(e)] = p_pow[static_cast<std::size_t>(e - 1)] * p;
        q_pow[static_cast<std::size_t>(e)] = q_pow[static_cast<std::size_t>(e - 1)] * (1 - p);
    }

    const auto size = static_cast<std::size_t>(n) + 1;
    std::vector<Rational> lambda(size, Rational(0));
    std::vector<Rational> gamma(size, Rational(0));
    for (std::uint32_t mask = 0; mask < (1u << edges); ++mask) {
        AdjacencyMatrix g(n);
        for (int e = 0; e < edges; ++e)
            if (mask & (1u << e)) g.set_edge(slots[static_cast<std::size_t>(e)].first, slots[static_cast<std::size_t>(e)].second, true);
        const int present = std::popcount(mask);
        const Rational weight = p_pow[static_cast<std::size_t>(present)] * q_pow[static_cast<std::size_t>(edges - present)];
        if (weight == 0) continue;
        for (std::uint32_t subset = 0; subset < (1u << n); ++subset) {
            const AdjacencyMatrix minor = g.principal_submatrix(subset);
            const auto k = static_cast<std::size_t>(n - std::popcount(subset));
            lambda[k] += weight * exact_det(minor);
            gamma[k] += weight * Rational(exact_per(minor));
        }
    }
    return ErExactExpectations{lambda[0], gamma[0], std::move(lambda), std::move(gamma)};
}

inline constexpr int max_permutation_sum_order = 9;

/// Leibniz and permanent sums over all n! permutations; slow, independent
/// of the elimination and Ryser code above.
inline std::pair<std::int64_t, std::int64_t> permutation_sums(const AdjacencyMatrix& m) {
    const int n = m.order();
    if (n > max_permutation_sum_order) {
        throw capacity_error("permutation sums support n <= " + std::to_string(max_permutation_sum_order));
    }
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::int64_t det = 0;
    std::int64_t per = 0;
    do {
        int term = 1;
        for (int i = 0; i < n && term; ++i) term = m(i, perm[static_cast<std::size_t>(i)]);
        if (!term) continue;
        int inversions = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) inversions += perm[static_cast<std::size_t>(i)] > perm[static_cast<std::size_t>(j)];
        det += inversions % 2 ? -1 : 1;
        ++per;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return {det, per};
}

inline constexpr int max_derangement_order = 12;

/// Derangement count by inclusion-exclusion: d_n = sum_k (-1)^k n!/k!.
inline std::uint64_t derangements(int n) {
    if (n < 0 || n > max_derangement_order) {
        throw capacity_error("derangements supports 0 <= n <= " + std::to_string(max_derangement_order));
    }
    std::int64_t total = 0;
    std::int64_t term = 1;  // n!/k! built from k = n downwards
    for (int k = n; k >= 0; --k) {
        total += (k % 2 == 0) ? term : -term;
        term *= k;
    }
    return static_cast<std::uint64_t>(total);
}

namespace detail {

inline std::uint64_t count_derangements(int pos, int n, std::uint32_t used) {
    if (pos == n) return 1;
    std::uint64_t total = 0;
    for (int v = 0; v < n; ++v) {
        if (v == pos || (used & (1u << v))) continue;
        total += count_derangements(pos + 1, n, used | (1u << v));
    }
    return total;
}

}  // namespace detail

/// Derangement count by walking every permutation without a fixed point.
inline std::uint64_t derangements_by_enumeration(int n) {
    if (n < 0 || n > max_derangement_order) {
        throw capacity_error("derangements supports 0 <= n <= " + std::to_string(max_derangement_order));
    }
    return detail::count_derangements(0, n, 0);
}

inline constexpr int max_bruteforce_dimension = 4;
inline constexpr std::int64_t max_bruteforce_norm = 400;

/// #{x in Z^d : |x|^2 = k} for k = 0..k_max, by scanning the integer box.
inline std::vector<std::uint64_t> psi_bruteforce_table(int d, std::int64_t k_max) {
    if (d < 1 || d > max_bruteforce_dimension || k_max < 0 || k_max > max_bruteforce_norm) {
        throw capacity_error("psi_bruteforce supports 1 <= d <= 4 and 0 <= k <= 400");
    }
    const auto side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(k_max))));
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(k_max) + 1, 0);
    std::vector<int> x(static_cast<std::size_t>(d), -side);
    for (;;) {
        std::int64_t norm = 0;
        for (int c : x) norm += static_cast<std::int64_t>(c) * c;
        if (norm <= k_max) ++counts[static_cast<std::size_t>(norm)];
        int i = 0;
        while (i < d && x[static_cast<std::size_t>(i)] == side) x[static_cast<std::size_t>(i++)] = -side;
        if (i == d) break;
        ++x[static_cast<std::size_t>(i)];
    }
    return counts;
}

inline std::uint64_t psi_bruteforce(int d, std::int64_t k) { return psi_bruteforce_table(d, k).back(); }

}  // namespace torus_cycles::oracle

#endif  // TORUS_CYCLES_ORACLE_HPP
