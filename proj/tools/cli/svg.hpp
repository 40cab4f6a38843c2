#ifndef TORUS_CYCLES_CLI_SVG_HPP
#define TORUS_CYCLES_CLI_SVG_HPP

// Minimal standalone SVG 1.1 line charts.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "torus_cycles/errors.hpp"

namespace torus_cycles::cli {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct Axes {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Range {
    double lo;
    double hi;
};

// 1-2-5 steps, about `target` ticks across [lo, hi].
inline std::vector<double> linear_ticks(Range r, int target = 6) {
    const double span = r.hi - r.lo;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (span / step <= target) break;
    }
    std::vector<double> ticks;
    for (double t = std::ceil(r.lo / step) * step; t <= r.hi + 1e-9 * span; t += step) {
        ticks.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
    }
    return ticks;
}

// Powers of ten, thinned to at most ~8 labels. Range is in log10 units.
inline std::vector<double> log_ticks(Range r) {
    const int first = static_cast<int>(std::ceil(r.lo - 1e-9));
    const int last = static_cast<int>(std::floor(r.hi + 1e-9));
    const int stride = std::max(1, (last - first) / 8 + 1);
    std::vector<double> ticks;
    for (int e = first; e <= last; e += stride) ticks.push_back(e);
    return ticks;
}

inline Range padded(double lo, double hi) {
    if (hi - lo <= 1e-12 * std::max(std::abs(lo), std::abs(hi))) {
        const double pad = lo == 0.0 ? 1.0 : 0.1 * std::abs(lo);
        return {lo - pad, hi + pad};
    }
    return {lo, hi};
}

}  // namespace detail

/// Line chart of one or more series with ticks and a legend. Points that
/// cannot be drawn (non-finite, or non-positive on a log axis) break the line.
inline std::string emit_svg(const std::vector<Series>& series, const Axes& axes) {
    if (series.empty()) throw invalid_argument("svg: at least one series is required");
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) throw invalid_argument("svg: series '" + s.label + "' has mismatched x/y");
        if (s.x.size() < 2) throw invalid_argument("svg: series '" + s.label + "' needs at least 2 points");
    }

    auto tx = [&](double v) { return axes.log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return axes.log_y ? std::log10(v) : v; };
    auto drawable = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!axes.log_x || x > 0) && (!axes.log_y || y > 0);
    };

    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!drawable(s.x[i], s.y[i])) continue;
            x_lo = std::min(x_lo, tx(s.x[i]));
            x_hi = std::max(x_hi, tx(s.x[i]));
            y_lo = std::min(y_lo, ty(s.y[i]));
            y_hi = std::max(y_hi, ty(s.y[i]));
        }
    }
    if (!std::isfinite(x_lo) || !std::isfinite(y_lo)) {
        throw invalid_argument("svg: no drawable points");
    }
    const detail::Range xr = detail::padded(x_lo, x_hi);
    const detail::Range yr = detail::padded(y_lo, y_hi);

    constexpr double width = 720, height = 480;
    constexpr double left = 90, right = 180, top = 50, bottom = 70;
    const double pw = width - left - right;
    const double ph = height - top - bottom;
    auto px = [&](double v) { return left + (v - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto py = [&](double v) { return top + ph - (v - yr.lo) / (yr.hi - yr.lo) * ph; };

    static constexpr std::array<const char*, 6> palette{"#1f77b4", "#d62728", "#2ca02c",
                                                        "#9467bd", "#ff7f0e", "#17becf"};

    std::ostringstream o;
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    if (!axes.title.empty()) {
        o << "<text x=\"" << detail::num(left + pw / 2) << "\" y=\"28\" text-anchor=\"middle\" font-size=\"15\">"
          << detail::xml_escape(axes.title) << "</text>\n";
    }
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

    const auto xt = axes.log_x ? detail::log_ticks(xr) : detail::linear_ticks(xr);
    for (double t : xt) {
        const double x = px(t);
        o << "<line x1=\"" << detail::num(x) << "\" y1=\"" << top + ph << "\" x2=\"" << detail::num(x)
          << "\" y2=\"" << top + ph + 5 << "\" stroke=\"black\"/>\n"
          << "<text x=\"" << detail::num(x) << "\" y=\"" << top + ph + 19 << "\" text-anchor=\"middle\">"
          << detail::tick_label(axes.log_x ? std::pow(10.0, t) : t) << "</text>\n";
    }
    const auto yt = axes.log_y ? detail::log_ticks(yr) : detail::linear_ticks(yr);
    for (double t : yt) {
        const double y = py(t);
        o << "<line x1=\"" << left - 5 << "\" y1=\"" << detail::num(y) << "\" x2=\"" << left << "\" y2=\""
          << detail::num(y) << "\" stroke=\"black\"/>\n"
          << "<text x=\"" << left - 8 << "\" y=\"" << detail::num(y + 4) << "\" text-anchor=\"end\">"
          << detail::tick_label(axes.log_y ? std::pow(10.0, t) : t) << "</text>\n";
    }
    if (!axes.x_label.empty()) {
        o << "<text x=\"" << detail::num(left + pw / 2) << "\" y=\"" << height - 20
          << "\" text-anchor=\"middle\">" << detail::xml_escape(axes.x_label) << "</text>\n";
    }
    if (!axes.y_label.empty()) {
        o << "<text transform=\"translate(22," << detail::num(top + ph / 2)
          << ") rotate(-90)\" text-anchor=\"middle\">" << detail::xml_escape(axes.y_label) << "</text>\n";
    }

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* colour = palette[k % palette.size()];
        std::string d;
        bool pen_down = false;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!drawable(s.x[i], s.y[i])) {
                pen_down = false;
                continue;
            }
            d += pen_down ? " L" : (d.empty() ? "M" : " M");
            d += detail::num(px(tx(s.x[i]))) + ',' + detail::num(py(ty(s.y[i])));
            pen_down = true;
        }
        o << "<path d=\"" << d << "\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\"/>\n";
        const double ly = top + 10 + 20.0 * static_cast<double>(k);
        o << "<line x1=\"" << left + pw + 15 << "\" y1=\"" << detail::num(ly) << "\" x2=\"" << left + pw + 40
          << "\" y2=\"" << detail::num(ly) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n"
          << "<text x=\"" << left + pw + 46 << "\" y=\"" << detail::num(ly + 4) << "\">"
          << detail::xml_escape(s.label) << "</text>\n";
    }
    o << "</g>\n</svg>\n";
    return o.str();
}

}  // namespace torus_cycles::cli

#endif  // TORUS_CYCLES_CLI_SVG_HPP
