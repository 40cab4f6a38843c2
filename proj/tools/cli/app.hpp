#ifndef TORUS_CYCLES_CLI_APP_HPP
#define TORUS_CYCLES_CLI_APP_HPP

// torus-cycles command line: cycle-prob, hamilton, threshold, spectral, mc,
// psi, selftest, plot. run() is the whole program; main only forwards argv.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cli/csv.hpp"
#include "cli/selftest.hpp"
#include "cli/svg.hpp"
#include "torus_cycles/torus_cycles.hpp"

namespace torus_cycles::cli {

enum exit_code : int { ok = 0, usage = 2, numerical = 3, capacity = 4 };

/// Every flag any subcommand accepts; each subcommand registers the subset
/// it understands.
struct Options {
    std::string model = "er";
    std::optional<double> p;
    int d = 2;
    std::string sigma = "2";
    std::optional<double> r;
    std::vector<int> q;
    std::optional<int> n;
    double tol = 1e-12;
    std::int64_t k_max = 0;
    unsigned precision_bits = default_precision_bits;
    std::int64_t samples = 1'000'000;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string plot;
    bool mc_fallback = false;
    int threads = 0;

    std::string sweep;
    std::optional<double> start;
    std::optional<double> stop;
    int points = 0;

    std::string quantity = "hamilton";
    bool compare = false;
    double p_tol = 1e-6;
    std::string what = "cycle";
    std::string sampler = "path";
    int figure = 1;
    bool log_y = false;
    std::int64_t psi_k_max = 10;
};

namespace detail {

inline std::uint64_t resolve_seed(const Options& o) {
    if (o.seed) return *o.seed;
    if (const char* env = std::getenv("TORUS_CYCLES_SEED"); env && *env) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (*end != '\0') throw invalid_argument(std::string("TORUS_CYCLES_SEED is not an integer: ") + env);
        return v;
    }
    return 1;
}

inline SeriesOptions series_options(const Options& o) { return SeriesOptions{o.tol, o.k_max}; }

inline oracle::McOptions mc_options(const Options& o) {
    if (o.samples < 1) throw invalid_argument("--samples must be >= 1");
    oracle::McOptions mc;
    mc.samples = o.samples;
    mc.seed = resolve_seed(o);
    mc.threads = o.threads;
    return mc;
}

inline int worker_count(int threads) {
    if (threads < 0) throw invalid_argument("--threads must be >= 0");
    return oracle::detail::resolve_threads(threads);
}

/// results[i] = f(i), evaluated on a small pool; the first failure by index
/// is rethrown so errors are as deterministic as the output.
template <class T, class F>
std::vector<T> parallel_map(int threads, std::size_t count, F&& f) {
    std::vector<std::optional<T>> slots(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                slots[i].emplace(f(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto pool = std::min<std::size_t>(static_cast<std::size_t>(worker_count(threads)), count);
    if (pool <= 1) {
        worker();
    } else {
        std::vector<std::jthread> workers;
        for (std::size_t t = 0; t < pool; ++t) workers.emplace_back(worker);
    }
    std::vector<T> results;
    results.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        results.push_back(std::move(*slots[i]));
    }
    return results;
}

// ---------------------------------------------------------------------------
// Models and sweeps

struct ModelPoint {
    // Empty graph when p == 0 for a geometric family.
    GraphModel model;
    double p = 0.0;
    std::optional<double> r;
};

inline bool is_gr(const Options& o) {
    if (o.model == "er") return false;
    if (o.model == "gr") return true;
    throw invalid_argument("--model must be er or gr, got '" + o.model + "'");
}

inline ModelFamily family_of(const Options& o) {
    if (!is_gr(o)) return ErFamily{};
    if (o.d < 1) throw invalid_argument("--d must be >= 1");
    return GrFamily{o.d, parse_metric(o.sigma)};
}

inline ModelPoint point_at_p(const Options& o, double p) {
    const ModelFamily family = family_of(o);
    if (!(p >= 0.0)) throw invalid_argument("edge probability p must be >= 0");
    if (p == 0.0) return {make_er(0.0), 0.0, std::nullopt};
    if (!is_gr(o)) return {make_er(p), p, std::nullopt};
    GraphModel m = model_at(family, p);
    return {m, p, std::get<GrModel>(m).ball.r()};
}

inline ModelPoint point_at_r(const Options& o, double r) {
    if (!is_gr(o)) throw invalid_argument("--r applies to --model gr only");
    if (o.d < 1) throw invalid_argument("--d must be >= 1");
    GraphModel m = make_gr(o.d, parse_metric(o.sigma), r);
    return {m, edge_probability(m), r};
}

inline ModelPoint fixed_point(const Options& o) {
    if (o.p && o.r) throw invalid_argument("give either --p or --r, not both");
    if (o.r) return point_at_r(o, *o.r);
    if (o.p) return point_at_p(o, *o.p);
    throw invalid_argument(is_gr(o) ? "--model gr needs --r or --p" : "--model er needs --p");
}

enum class SweepVar { none, p, r, n };

struct Sweep {
    SweepVar var = SweepVar::none;
    std::vector<double> values;
};

inline Sweep make_sweep(const Options& o, std::initializer_list<SweepVar> allowed) {
    if (o.sweep.empty()) {
        if (o.start || o.stop || o.points) throw invalid_argument("--start/--stop/--points need --sweep");
        return {};
    }
    SweepVar var;
    if (o.sweep == "p") {
        var = SweepVar::p;
    } else if (o.sweep == "r") {
        var = SweepVar::r;
    } else if (o.sweep == "n") {
        var = SweepVar::n;
    } else {
        throw invalid_argument("--sweep must be p, r or n, got '" + o.sweep + "'");
    }
    if (std::find(allowed.begin(), allowed.end(), var) == allowed.end()) {
        throw invalid_argument("--sweep " + o.sweep + " is not available for this subcommand");
    }
    if (!o.start || !o.stop) throw invalid_argument("--sweep needs --start and --stop");
    const double a = *o.start, b = *o.stop;
    if (!(a < b)) throw invalid_argument("sweep needs start < stop");

    Sweep s{var, {}};
    if (var == SweepVar::n) {
        if (a != std::floor(a) || b != std::floor(b)) throw invalid_argument("an n sweep needs integer bounds");
        if (o.points) throw invalid_argument("an n sweep visits every integer; drop --points");
        for (auto v = static_cast<long>(a); v <= static_cast<long>(b); ++v) s.values.push_back(static_cast<double>(v));
        return s;
    }
    if (o.points < 2) throw invalid_argument("sweep needs --points >= 2");
    if (var == SweepVar::r) {
        if (!is_gr(o)) throw invalid_argument("--sweep r applies to --model gr only");
        if (!(a > 0.0 && b <= 0.5)) throw out_of_range("r must lie in (0, 0.5], sweep covers [" +
                                                      format_double(a) + ", " + format_double(b) + "]");
    }
    if (var == SweepVar::p) {
        const double p_max = max_edge_probability(family_of(o));
        if (a < 0.0 || b > p_max * (1 + 1e-12)) {
            throw out_of_range("p sweep must lie in [0, " + format_double(p_max) + "] for this model");
        }
    }
    for (int i = 0; i < o.points; ++i) {
        // Exact endpoints; interior points by interpolation.
        const double t = static_cast<double>(i) / (o.points - 1);
        s.values.push_back(i == o.points - 1 ? b : a + (b - a) * t);
    }
    return s;
}

inline int require_n(const Options& o) {
    if (!o.n) throw invalid_argument("--n is required");
    return *o.n;
}

// Model descriptor cells: model, d, sigma, r, p.
inline std::vector<Cell> model_cells(const Options& o, const ModelPoint& pt) {
    std::vector<Cell> cells;
    cells.emplace_back(std::string(is_gr(o) ? "gr" : "er"));
    if (is_gr(o)) {
        cells.emplace_back(static_cast<std::int64_t>(o.d));
        cells.emplace_back(std::string(to_string(parse_metric(o.sigma))));
    } else {
        cells.emplace_back(std::monostate{});
        cells.emplace_back(std::monostate{});
    }
    cells.emplace_back(pt.r ? Cell{*pt.r} : Cell{std::monostate{}});
    cells.emplace_back(pt.p);
    return cells;
}

inline std::vector<std::string> model_header() { return {"model", "d", "sigma", "r", "p"}; }

// ---------------------------------------------------------------------------
// Output

struct Output {
    std::ostream& out;
    std::ostream& err;
};

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw invalid_argument("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw invalid_argument("failed writing '" + path + "'");
}

inline void emit_table(const Options& o, const Output& io, const CsvTable& table) {
    if (o.out.empty()) {
        write_csv(io.out, table);
    } else {
        write_text(o.out, to_csv(table));
    }
}

inline std::vector<double> column(const CsvTable& t, std::size_t col) {
    std::vector<double> v;
    for (const auto& row : t.rows) {
        v.push_back(std::holds_alternative<std::monostate>(row[col]) ? std::nan("") : cell_as_double(row[col]));
    }
    return v;
}

inline std::size_t column_index(const CsvTable& t, const std::string& name) {
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end()) throw invalid_argument("no column named " + name);
    return static_cast<std::size_t>(it - t.header.begin());
}

/// SVG of y columns against an x column, written to --plot when given.
inline void maybe_plot(const Options& o, const CsvTable& t, const std::string& x,
                       const std::vector<std::pair<std::string, std::string>>& ys, Axes axes) {
    if (o.plot.empty()) return;
    axes.log_y = axes.log_y || o.log_y;
    const auto xs = column(t, column_index(t, x));
    std::vector<Series> series;
    for (const auto& [col, label] : ys) series.push_back(Series{label, xs, column(t, column_index(t, col))});
    write_text(o.plot, emit_svg(series, axes));
}

inline std::string sweep_name(SweepVar v) {
    switch (v) {
        case SweepVar::p: return "p";
        case SweepVar::r: return "r";
        case SweepVar::n: return "n";
        default: return "";
    }
}

// Context constants for determinant plots, from their closed forms.
inline void print_determinant_constants(std::ostream& err, int n) {
    if (n < 4) return;
    const double upper = std::pow(n + 1.0, (n + 1.0) / 2.0) / std::pow(2.0, n);
    const double constructed = (n - 3.0) * std::pow(3.0, n / 4 - 1);
    err << "note: n = " << n << ": |det| of a 0/1 matrix is at most (n+1)^((n+1)/2)/2^n = "
        << format_double(upper) << "; a known construction reaches (n-3)*3^(floor(n/4)-1) = "
        << format_double(constructed) << '\n';
}

// ---------------------------------------------------------------------------
// Subcommands

inline int cmd_cycle_prob(const Options& o, const Output& io) {
    if (o.q.empty()) throw invalid_argument("--q is required");
    for (int q : o.q) {
        if (q < 2) throw invalid_argument("cycle length q must be >= 2, got " + std::to_string(q));
    }
    const Sweep sweep = make_sweep(o, {SweepVar::p, SweepVar::r});
    std::vector<ModelPoint> points;
    if (sweep.var == SweepVar::none) {
        points.push_back(fixed_point(o));
    } else {
        for (double v : sweep.values) points.push_back(sweep.var == SweepVar::p ? point_at_p(o, v) : point_at_r(o, v));
    }
    const SeriesOptions so = series_options(o);
    const auto mc = mc_options(o);

    struct Job {
        std::size_t point;
        int q;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < points.size(); ++i)
        for (int q : o.q) jobs.push_back({i, q});

    struct Result {
        SeriesValue sv;
        std::optional<oracle::McEstimate> mc;
    };
    // MC runs its own stream pool, so jobs go one at a time when it may be needed.
    const auto results = parallel_map<Result>(o.mc_fallback ? 1 : o.threads, jobs.size(), [&](std::size_t j) {
        const auto& pt = points[jobs[j].point];
        const int q = jobs[j].q;
        Result res{theta(pt.model, q, so), std::nullopt};
        if (!res.sv.converged) {
            if (!o.mc_fallback) {
                throw numerical_failure("cycle probability series for q = " + std::to_string(q) +
                                            " did not reach tol = " + format_double(o.tol) +
                                            " (estimated tail " + format_double(res.sv.truncation_bound) +
                                            "); rerun with --mc-fallback or a looser --tol",
                                        q);
            }
            const auto& ball = std::get<GrModel>(pt.model).ball;
            res.mc = oracle::mc_cycle_prob(ball, q, mc, oracle::CycleSampler::path_conditioned);
        }
        return res;
    });

    CsvTable t;
    t.header = model_header();
    for (const char* h : {"q", "value", "truncation_bound", "std_error", "terms_used", "converged", "method"})
        t.header.emplace_back(h);
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        const auto& res = results[j];
        auto row = model_cells(o, points[jobs[j].point]);
        row.emplace_back(static_cast<std::int64_t>(jobs[j].q));
        if (res.mc) {
            io.err << "warning: q = " << jobs[j].q << ": series missed tol, reporting a Monte Carlo estimate ("
                   << res.mc->samples << " samples, seed " << res.mc->seed << ")\n";
            row.emplace_back(res.mc->mean);
            row.emplace_back(res.sv.truncation_bound);
            row.emplace_back(res.mc->std_error);
            row.emplace_back(res.sv.terms_used);
            row.emplace_back(std::string("false"));
            row.emplace_back(std::string("monte-carlo"));
        } else {
            row.emplace_back(res.sv.value);
            row.emplace_back(res.sv.truncation_bound);
            row.emplace_back(std::monostate{});
            row.emplace_back(res.sv.terms_used);
            row.emplace_back(std::string("true"));
            row.emplace_back(std::string("series"));
        }
        t.rows.push_back(std::move(row));
    }
    emit_table(o, io, t);
    if (sweep.var != SweepVar::none && !o.plot.empty()) {
        if (o.q.size() != 1) throw invalid_argument("--plot with a sweep needs a single --q");
        maybe_plot(o, t, sweep_name(sweep.var), {{"value", "q=" + std::to_string(o.q.front())}},
                   {"Labeled cycle probability", sweep_name(sweep.var), "Theta(q)"});
    }
    return ok;
}

inline int cmd_hamilton(const Options& o, const Output& io) {
    const Sweep sweep = make_sweep(o, {SweepVar::p, SweepVar::r, SweepVar::n});
    struct Job {
        ModelPoint pt;
        int n;
    };
    std::vector<Job> jobs;
    if (sweep.var == SweepVar::n) {
        const ModelPoint pt = fixed_point(o);
        for (double v : sweep.values) jobs.push_back({pt, static_cast<int>(v)});
    } else if (sweep.var == SweepVar::none) {
        jobs.push_back({fixed_point(o), require_n(o)});
    } else {
        const int n = require_n(o);
        for (double v : sweep.values) jobs.push_back({sweep.var == SweepVar::p ? point_at_p(o, v) : point_at_r(o, v), n});
    }
    const SeriesOptions so = series_options(o);
    const auto taus = parallel_map<double>(o.threads, jobs.size(), [&](std::size_t i) {
        return with_precision(o.precision_bits, [&]<class Real>() {
            return to_double(hamilton_expectation<Real>(jobs[i].pt.model, jobs[i].n, so));
        });
    });
    CsvTable t;
    t.header = model_header();
    t.header.emplace_back("n");
    t.header.emplace_back("tau");
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        auto row = model_cells(o, jobs[i].pt);
        row.emplace_back(static_cast<std::int64_t>(jobs[i].n));
        row.emplace_back(taus[i]);
        t.rows.push_back(std::move(row));
    }
    emit_table(o, io, t);
    if (sweep.var != SweepVar::none) {
        maybe_plot(o, t, sweep_name(sweep.var), {{"tau", describe(family_of(o))}},
                   {"Expected Hamilton cycles", sweep_name(sweep.var), "tau", false, true});
    }
    return ok;
}

inline ThresholdQuantity parse_quantity(const std::string& s) {
    if (s == "hamilton") return ThresholdQuantity::hamilton;
    if (s == "permanent") return ThresholdQuantity::permanent;
    throw invalid_argument("--quantity must be hamilton or permanent, got '" + s + "'");
}

inline std::string legend(const ModelFamily& f) {
    if (std::holds_alternative<ErFamily>(f)) return "ER";
    const auto& gr = std::get<GrFamily>(f);
    return "GR d=" + std::to_string(gr.d) + " σ=" + (gr.sigma == Metric::euclidean ? "2" : "∞");
}

struct ThresholdRun {
    std::vector<int> ns;
    // One column per family; nullopt where the target never reaches 1 or
    // the series cannot be evaluated.
    std::vector<std::vector<std::optional<ThresholdResult>>> results;
    std::vector<std::string> warnings;
};

inline ThresholdRun run_thresholds(const Options& o, const std::vector<ModelFamily>& families,
                                   const std::vector<int>& ns, ThresholdQuantity quantity, bool tolerate) {
    ThresholdOptions topt;
    topt.p_tol = o.p_tol;
    topt.series = series_options(o);
    const std::size_t jobs = ns.size() * families.size();
    struct Outcome {
        std::optional<ThresholdResult> result;
        std::string warning;
    };
    const auto outcomes = parallel_map<Outcome>(o.threads, jobs, [&](std::size_t j) {
        const int n = ns[j / families.size()];
        const ModelFamily& fam = families[j % families.size()];
        try {
            return with_precision(o.precision_bits, [&]<class Real>() {
                return Outcome{threshold<Real>(fam, n, quantity, topt), {}};
            });
        } catch (const numerical_failure& e) {
            if (!tolerate) throw;
            return Outcome{std::nullopt, legend(fam) + ", n = " + std::to_string(n) + ": " + e.what()};
        }
    });
    ThresholdRun run{ns, std::vector<std::vector<std::optional<ThresholdResult>>>(families.size()), {}};
    for (std::size_t j = 0; j < jobs; ++j) {
        run.results[j % families.size()].push_back(outcomes[j].result);
        if (!outcomes[j].warning.empty()) run.warnings.push_back(outcomes[j].warning);
    }
    return run;
}

inline CsvTable threshold_compare_table(const ThresholdRun& run) {
    CsvTable t{{"n", "threshold_er", "threshold_gr"}, {}};
    for (std::size_t i = 0; i < run.ns.size(); ++i) {
        std::vector<Cell> row{static_cast<std::int64_t>(run.ns[i])};
        for (const auto& col : run.results) {
            row.push_back(col[i] ? Cell{col[i]->edge_probability} : Cell{std::monostate{}});
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline std::vector<int> threshold_ns(const Options& o) {
    const Sweep sweep = make_sweep(o, {SweepVar::n});
    if (sweep.var == SweepVar::none) return {require_n(o)};
    std::vector<int> ns;
    for (double v : sweep.values) ns.push_back(static_cast<int>(v));
    return ns;
}

inline int cmd_threshold(const Options& o, const Output& io) {
    const ThresholdQuantity quantity = parse_quantity(o.quantity);
    const std::vector<int> ns = threshold_ns(o);
    const bool sweeping = ns.size() > 1 || !o.sweep.empty();
    std::vector<ModelFamily> families;
    if (o.compare) {
        Options gr = o;
        gr.model = "gr";
        families = {ErFamily{}, family_of(gr)};
    } else {
        families = {family_of(o)};
    }
    const ThresholdRun run = run_thresholds(o, families, ns, quantity, sweeping);
    for (const auto& w : run.warnings) io.err << "warning: no threshold for " << w << '\n';

    CsvTable t;
    if (o.compare) {
        t = threshold_compare_table(run);
    } else {
        t.header = {"n", "model", "quantity", "threshold", "bracket_width"};
        for (std::size_t i = 0; i < ns.size(); ++i) {
            const auto& res = run.results[0][i];
            t.rows.push_back({static_cast<std::int64_t>(ns[i]), describe(families[0]),
                              std::string(to_string(quantity)),
                              res ? Cell{res->edge_probability} : Cell{std::monostate{}},
                              res ? Cell{res->bracket_width} : Cell{std::monostate{}}});
        }
    }
    emit_table(o, io, t);
    const std::string title = quantity == ThresholdQuantity::hamilton ? "Threshold for expected Hamilton cycles >= 1"
                                                                      : "Threshold for expected permanent >= 1";
    if (o.compare) {
        maybe_plot(o, t, "n", {{"threshold_er", legend(families[0])}, {"threshold_gr", legend(families[1])}},
                   {title, "n", "edge probability"});
    } else {
        maybe_plot(o, t, "n", {{"threshold", legend(families[0])}}, {title, "n", "edge probability"});
    }
    return ok;
}

struct DetPer {
    double det;
    double per;
};

inline DetPer det_per(const Options& o, const GraphModel& model, int n) {
    const SeriesOptions so = series_options(o);
    return with_precision(o.precision_bits, [&]<class Real>() {
        const auto theta = theta_sequence<Real>(model, n, so);
        return DetPer{to_double(expected_polynomial<Real>(theta, n, PolyKind::characteristic).constant_term()),
                      to_double(expected_polynomial<Real>(theta, n, PolyKind::permanental).constant_term())};
    });
}

inline int cmd_spectral(const Options& o, const Output& io) {
    const Sweep sweep = make_sweep(o, {SweepVar::p, SweepVar::r, SweepVar::n});
    const SeriesOptions so = series_options(o);
    if (sweep.var == SweepVar::none) {
        const ModelPoint pt = fixed_point(o);
        const int n = require_n(o);
        struct Coeffs {
            std::vector<double> lambda, gamma, esf;
        };
        const Coeffs c = with_precision(o.precision_bits, [&]<class Real>() {
            const auto theta = theta_sequence<Real>(pt.model, n, so);
            const auto lam = expected_polynomial<Real>(theta, n, PolyKind::characteristic);
            const auto gam = expected_polynomial<Real>(theta, n, PolyKind::permanental);
            const auto esf = esf_from_lambda(lam);
            Coeffs out;
            for (int k = 0; k <= n; ++k) {
                out.lambda.push_back(to_double(lam.coeffs[static_cast<std::size_t>(k)]));
                out.gamma.push_back(to_double(gam.coeffs[static_cast<std::size_t>(k)]));
                out.esf.push_back(to_double(esf.values[static_cast<std::size_t>(k)]));
            }
            return out;
        });
        CsvTable t{{"k", "lambda_coeff", "gamma_coeff", "esf"}, {}};
        for (int k = 0; k <= n; ++k) {
            const auto i = static_cast<std::size_t>(k);
            t.rows.push_back({static_cast<std::int64_t>(k), c.lambda[i], c.gamma[i], c.esf[i]});
        }
        print_determinant_constants(io.err, n);
        emit_table(o, io, t);
        return ok;
    }

    struct Job {
        ModelPoint pt;
        int n;
    };
    std::vector<Job> jobs;
    if (sweep.var == SweepVar::n) {
        const ModelPoint pt = fixed_point(o);
        for (double v : sweep.values) jobs.push_back({pt, static_cast<int>(v)});
    } else {
        const int n = require_n(o);
        for (double v : sweep.values) jobs.push_back({sweep.var == SweepVar::p ? point_at_p(o, v) : point_at_r(o, v), n});
    }
    const auto values = parallel_map<DetPer>(o.threads, jobs.size(),
                                             [&](std::size_t i) { return det_per(o, jobs[i].pt.model, jobs[i].n); });
    CsvTable t;
    t.header = model_header();
    for (const char* h : {"n", "det", "per"}) t.header.emplace_back(h);
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        auto row = model_cells(o, jobs[i].pt);
        row.emplace_back(static_cast<std::int64_t>(jobs[i].n));
        row.emplace_back(values[i].det);
        row.emplace_back(values[i].per);
        t.rows.push_back(std::move(row));
    }
    if (sweep.var == SweepVar::n) {
        for (double v : sweep.values) print_determinant_constants(io.err, static_cast<int>(v));
    } else {
        print_determinant_constants(io.err, jobs.front().n);
    }
    emit_table(o, io, t);
    const std::string label = legend(family_of(o));
    maybe_plot(o, t, sweep_name(sweep.var), {{"det", label + " det"}},
               {"Expected determinant", sweep_name(sweep.var), "E det"});
    return ok;
}

inline int cmd_mc(const Options& o, const Output& io) {
    const auto mc = mc_options(o);
    const ModelPoint pt = fixed_point(o);
    CsvTable t;
    t.header = model_header();
    for (const char* h : {"quantity", "size", "mean", "std_error", "samples", "seed", "series"}) t.header.emplace_back(h);

    if (o.what == "cycle") {
        if (!std::holds_alternative<GrModel>(pt.model)) {
            throw invalid_argument("mc --what cycle needs --model gr with r > 0");
        }
        if (o.q.empty()) throw invalid_argument("--q is required");
        oracle::CycleSampler sampler;
        if (o.sampler == "direct") {
            sampler = oracle::CycleSampler::direct;
        } else if (o.sampler == "path") {
            sampler = oracle::CycleSampler::path_conditioned;
        } else {
            throw invalid_argument("--sampler must be direct or path, got '" + o.sampler + "'");
        }
        const auto& ball = std::get<GrModel>(pt.model).ball;
        for (int q : o.q) {
            const auto est = oracle::mc_cycle_prob(ball, q, mc, sampler);
            const SeriesValue sv = theta(pt.model, q, series_options(o));
            auto row = model_cells(o, pt);
            row.emplace_back(std::string("cycle"));
            row.emplace_back(static_cast<std::int64_t>(q));
            row.emplace_back(est.mean);
            row.emplace_back(est.std_error);
            row.emplace_back(est.samples);
            row.emplace_back(static_cast<std::int64_t>(est.seed));
            row.emplace_back(sv.value);
            t.rows.push_back(std::move(row));
        }
    } else if (o.what == "matrix") {
        const int n = require_n(o);
        const auto est = oracle::mc_matrix_expectations(pt.model, n, mc);
        std::optional<DetPer> series;
        try {
            series = det_per(o, pt.model, n);
        } catch (const numerical_failure& e) {
            io.err << "warning: no series value: " << e.what() << '\n';
        }
        auto add = [&](const char* name, const oracle::McEstimate& e, std::optional<double> s) {
            auto row = model_cells(o, pt);
            row.emplace_back(std::string(name));
            row.emplace_back(static_cast<std::int64_t>(n));
            row.emplace_back(e.mean);
            row.emplace_back(e.std_error);
            row.emplace_back(e.samples);
            row.emplace_back(static_cast<std::int64_t>(e.seed));
            row.emplace_back(s ? Cell{*s} : Cell{std::monostate{}});
            t.rows.push_back(std::move(row));
        };
        add("det", est.det, series ? std::optional<double>(series->det) : std::nullopt);
        add("per", est.per, series ? std::optional<double>(series->per) : std::nullopt);
    } else {
        throw invalid_argument("--what must be cycle or matrix, got '" + o.what + "'");
    }
    emit_table(o, io, t);
    return ok;
}

inline int cmd_psi(const Options& o, const Output& io) {
    if (o.psi_k_max < 0) throw invalid_argument("--k-max must be >= 0");
    const LatticeCountTable table = psi_counts(o.d, o.psi_k_max);
    CsvTable t{{"k", "count"}, {}};
    for (std::size_t k = 0; k < table.size(); ++k) {
        if (table[k] > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
            throw capacity_error("psi count exceeds the CSV integer range");
        }
        t.rows.push_back({static_cast<std::int64_t>(k), static_cast<std::int64_t>(table[k])});
    }
    emit_table(o, io, t);
    return ok;
}

inline int cmd_selftest(const Options& o, const Output& io) {
    const auto report = run_selftest(o.threads, resolve_seed(o));
    for (const auto& c : report) io.out << (c.passed ? "ok   " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": ") << c.detail << '\n';
    const auto failed = std::count_if(report.begin(), report.end(), [](const auto& c) { return !c.passed; });
    if (failed) {
        io.err << "error: " << failed << " self-test check(s) failed\n";
        return numerical;
    }
    return ok;
}

// Figure reproductions: threshold curves (1, 4) and n = 20 expectation
// sweeps against p (2, 3).
inline int cmd_plot(const Options& o, const Output& io) {
    Options x = o;
    const int n = o.n.value_or(20);
    if (x.plot.empty()) x.plot = "figure" + std::to_string(o.figure) + ".svg";
    switch (o.figure) {
        case 1:
        case 4: {
            const bool ham = o.figure == 1;
            const GrFamily gr{2, ham ? Metric::euclidean : Metric::chebyshev};
            std::vector<int> ns;
            for (int v = 3; v <= n; ++v) ns.push_back(v);
            const auto quantity = ham ? ThresholdQuantity::hamilton : ThresholdQuantity::permanent;
            const ThresholdRun run = run_thresholds(x, {ErFamily{}, gr}, ns, quantity, true);
            for (const auto& w : run.warnings) io.err << "warning: no threshold for " << w << '\n';
            const CsvTable t = threshold_compare_table(run);
            emit_table(x, io, t);
            maybe_plot(x, t, "n", {{"threshold_er", "ER"}, {"threshold_gr", legend(gr)}},
                       {ham ? "Threshold for expected Hamilton cycles >= 1" : "Threshold for expected permanent >= 1",
                        "n", "edge probability"});
            return ok;
        }
        case 2:
        case 3: {
            const bool det = o.figure == 2;
            const GrFamily gr{det ? 3 : 1, Metric::chebyshev};
            const int points = o.points ? o.points : 1001;
            if (points < 2) throw invalid_argument("--points must be >= 2");
            const double p_max = std::min(1.0, max_edge_probability(gr));
            std::vector<double> ps;
            for (int i = 0; i < points; ++i) ps.push_back(i == points - 1 ? p_max : p_max * i / (points - 1));
            Options er_opts = x, gr_opts = x;
            er_opts.model = "er";
            gr_opts.model = "gr";
            gr_opts.d = gr.d;
            gr_opts.sigma = "inf";
            const auto values = parallel_map<std::pair<DetPer, DetPer>>(x.threads, ps.size(), [&](std::size_t i) {
                return std::pair{det_per(x, point_at_p(er_opts, ps[i]).model, n),
                                 det_per(x, point_at_p(gr_opts, ps[i]).model, n)};
            });
            const std::string what = det ? "det" : "per";
            CsvTable t{{"p", what + "_er", what + "_gr"}, {}};
            for (std::size_t i = 0; i < ps.size(); ++i) {
                const auto& [e, g] = values[i];
                t.rows.push_back({ps[i], det ? e.det : e.per, det ? g.det : g.per});
            }
            if (det) print_determinant_constants(io.err, n);
            emit_table(x, io, t);
            maybe_plot(x, t, "p", {{what + "_er", "ER"}, {what + "_gr", legend(gr)}},
                       {det ? "Expected determinant, n = " + std::to_string(n)
                            : "Expected permanent, n = " + std::to_string(n),
                        "edge probability", det ? "E det" : "E per", false, !det});
            return ok;
        }
        default:
            throw invalid_argument("--figure must be 1, 2, 3 or 4");
    }
}

}  // namespace detail

/// Parses argv and runs one subcommand. Diagnostics go to err, CSV to out
/// (or --out).
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    using namespace detail;
    Options o;
    CLI::App app{"Cycle probabilities, expected determinants/permanents and thresholds of random graphs on the torus",
                 "torus-cycles"};
    app.require_subcommand(1, 1);

    auto add_model = [&](CLI::App* s) {
        s->add_option("--model", o.model, "er or gr")->capture_default_str();
        s->add_option("--p", o.p, "edge probability");
        s->add_option("--d", o.d, "torus dimension")->capture_default_str();
        s->add_option("--sigma", o.sigma, "2 or inf")->capture_default_str();
        s->add_option("--r", o.r, "connection radius, 0 < r <= 0.5");
    };
    auto add_series = [&](CLI::App* s) {
        s->add_option("--tol", o.tol, "series truncation tolerance")->capture_default_str();
        s->add_option("--k-max", o.k_max, "shell cap for the series (0 = default)");
    };
    auto add_common = [&](CLI::App* s) {
        s->add_option("--out", o.out, "write CSV here instead of stdout");
        s->add_option("--threads", o.threads, "worker threads (0 = all cores)");
        s->add_option("--seed", o.seed, "RNG seed (default $TORUS_CYCLES_SEED, else 1)");
    };
    auto add_sweep = [&](CLI::App* s) {
        s->add_option("--sweep", o.sweep, "sweep variable: p, r or n");
        s->add_option("--start", o.start);
        s->add_option("--stop", o.stop);
        s->add_option("--points", o.points, "grid points for p and r sweeps");
        s->add_option("--plot", o.plot, "also write an SVG line plot here");
        s->add_flag("--log-y", o.log_y, "log-scaled y axis in the plot");
    };
    auto add_precision = [&](CLI::App* s) {
        s->add_option("--precision-bits", o.precision_bits, "significand bits (64, 128, 256 or 512)")
            ->capture_default_str();
    };
    auto add_mc = [&](CLI::App* s) { s->add_option("--samples", o.samples, "Monte Carlo samples")->capture_default_str(); };

    auto* cycle = app.add_subcommand("cycle-prob", "labeled cycle probability Theta(q)");
    add_model(cycle);
    add_series(cycle);
    add_common(cycle);
    add_sweep(cycle);
    add_mc(cycle);
    cycle->add_option("--q", o.q, "cycle length(s)")->expected(1, 64);
    cycle->add_flag("--mc-fallback", o.mc_fallback, "use Monte Carlo where the series misses tol");

    auto* ham = app.add_subcommand("hamilton", "expected number of Hamilton cycles");
    add_model(ham);
    add_series(ham);
    add_common(ham);
    add_sweep(ham);
    add_precision(ham);
    ham->add_option("--n", o.n, "vertex count");

    auto* thr = app.add_subcommand("threshold", "edge probability where the expectation reaches 1");
    add_model(thr);
    add_series(thr);
    add_common(thr);
    add_sweep(thr);
    add_precision(thr);
    thr->add_option("--n", o.n, "vertex count");
    thr->add_option("--quantity", o.quantity, "hamilton or permanent")->capture_default_str();
    thr->add_flag("--compare", o.compare, "ER against GR with the given --d/--sigma");
    thr->add_option("--p-tol", o.p_tol, "bisection tolerance on p")->capture_default_str();

    auto* spec = app.add_subcommand("spectral", "expected det/per polynomials and symmetric functions");
    add_model(spec);
    add_series(spec);
    add_common(spec);
    add_sweep(spec);
    add_precision(spec);
    spec->add_option("--n", o.n, "vertex count");

    auto* mc = app.add_subcommand("mc", "Monte Carlo estimates next to the series values");
    add_model(mc);
    add_series(mc);
    add_common(mc);
    add_mc(mc);
    add_precision(mc);
    mc->add_option("--what", o.what, "cycle or matrix")->capture_default_str();
    mc->add_option("--q", o.q, "cycle length(s)")->expected(1, 64);
    mc->add_option("--n", o.n, "matrix order");
    mc->add_option("--sampler", o.sampler, "direct or path")->capture_default_str();

    auto* psi = app.add_subcommand("psi", "number of integer vectors with |x|^2 = k");
    psi->add_option("--d", o.d, "dimension")->capture_default_str();
    psi->add_option("--k-max", o.psi_k_max, "largest k")->capture_default_str();
    psi->add_option("--out", o.out, "write CSV here instead of stdout");

    auto* self = app.add_subcommand("selftest", "oracle cross-checks");
    self->add_option("--threads", o.threads, "worker threads (0 = all cores)");
    self->add_option("--seed", o.seed, "RNG seed");

    auto* plot = app.add_subcommand("plot", "CSV and SVG for figures 1-4");
    add_series(plot);
    add_common(plot);
    add_precision(plot);
    plot->add_option("--figure", o.figure, "1: Hamilton thresholds, 2: determinant, 3: permanent, 4: permanent thresholds")
        ->required();
    plot->add_option("--n", o.n, "largest n (1, 4) or vertex count (2, 3); default 20");
    plot->add_option("--points", o.points, "p grid points for figures 2 and 3 (default 1001)");
    plot->add_option("--plot", o.plot, "SVG path (default figure<N>.svg)");
    plot->add_option("--p-tol", o.p_tol, "bisection tolerance on p")->capture_default_str();
    plot->add_flag("--log-y", o.log_y, "log-scaled y axis");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    }

    const Output io{out, err};
    try {
        if (*cycle) return cmd_cycle_prob(o, io);
        if (*ham) return cmd_hamilton(o, io);
        if (*thr) return cmd_threshold(o, io);
        if (*spec) return cmd_spectral(o, io);
        if (*mc) return cmd_mc(o, io);
        if (*psi) return cmd_psi(o, io);
        if (*self) return cmd_selftest(o, io);
        return cmd_plot(o, io);
    } catch (const capacity_error& e) {
        err << "error: " << e.what() << '\n';
        return capacity;
    } catch (const numerical_failure& e) {
        err << "error: " << e.what() << '\n';
        return numerical;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    } catch (const std::exception& e) {
        err << "error: internal: " << e.what() << '\n';
        return 1;
    }
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"torus-cycles"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace torus_cycles::cli

#endif  // TORUS_CYCLES_CLI_APP_HPP
