#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qle/harness.hpp"

namespace qle {

inline constexpr double plot_floor = 1e-16;

namespace detail {

struct Axis {
    double lo, hi;
    bool log = false;
};

class Svg {
public:
    static constexpr double width = 640, height = 420, left = 70, right = 150, top = 30, bottom = 50;

    Svg(Axis x, Axis y, std::string title, std::string xlabel, std::string ylabel) : x_(x), y_(y) {
        out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
             << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
        out_ << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        out_ << "<text x=\"" << (left + (width - left - right) / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
             << title << "</text>\n";
        out_ << "<text x=\"" << (left + (width - left - right) / 2) << "\" y=\"" << (height - 10)
             << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
        out_ << "<text x=\"16\" y=\"" << (top + (height - top - bottom) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
             << (top + (height - top - bottom) / 2) << ")\">" << ylabel << "</text>\n";
        frame();
    }

    double px(double v) const { return left + frac(x_, v) * (width - left - right); }
    double py(double v) const { return height - bottom - frac(y_, v) * (height - top - bottom); }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color, bool dashed = false) {
        if (pts.empty()) return;
        out_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
        if (dashed) out_ << " stroke-dasharray=\"4 3\"";
        out_ << " points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) out_ << (i ? " " : "") << num(px(pts[i].first)) << ',' << num(py(pts[i].second));
        out_ << "\"/>\n";
    }

    void markers(const std::vector<std::pair<double, double>>& pts, const std::string& color) {
        for (const auto& [a, b] : pts)
            out_ << "<circle cx=\"" << num(px(a)) << "\" cy=\"" << num(py(b)) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }

    void legend(int slot, const std::string& label, const std::string& color, bool line) {
        const double x = width - right + 12, y = top + 14 + 16 * slot;
        if (line)
            out_ << "<line x1=\"" << x << "\" y1=\"" << y - 4 << "\" x2=\"" << x + 16 << "\" y2=\"" << y - 4
                 << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
        else
            out_ << "<circle cx=\"" << x + 8 << "\" cy=\"" << y - 4 << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        out_ << "<text x=\"" << x + 22 << "\" y=\"" << y << "\">" << label << "</text>\n";
    }

    std::string str() const { return out_.str() + "</svg>\n"; }

private:
    static std::string num(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return buf;
    }

    static double frac(const Axis& a, double v) {
        if (a.log) return (std::log10(v) - std::log10(a.lo)) / (std::log10(a.hi) - std::log10(a.lo));
        return (v - a.lo) / (a.hi - a.lo);
    }

    void ticks(const Axis& a, bool horizontal) {
        std::vector<double> vals;
        if (a.log) {
            for (int e = static_cast<int>(std::floor(std::log10(a.lo))); e <= static_cast<int>(std::ceil(std::log10(a.hi))); ++e) {
                const double v = std::pow(10.0, e);
                if (v >= a.lo * (1 - 1e-12) && v <= a.hi * (1 + 1e-12)) vals.push_back(v);
            }
            if (vals.size() > 8) {
                std::vector<double> thin;
                const std::size_t stride = (vals.size() + 7) / 8;
                for (std::size_t i = 0; i < vals.size(); i += stride) thin.push_back(vals[i]);
                vals = thin;
            }
        } else {
            for (int i = 0; i <= 5; ++i) vals.push_back(a.lo + (a.hi - a.lo) * i / 5.0);
        }
        for (double v : vals) {
            char label[32];
            if (a.log) std::snprintf(label, sizeof label, "1e%d", static_cast<int>(std::lround(std::log10(v))));
            else std::snprintf(label, sizeof label, "%.3g", v);
            if (horizontal) {
                out_ << "<line x1=\"" << num(px(v)) << "\" y1=\"" << height - bottom << "\" x2=\"" << num(px(v)) << "\" y2=\""
                     << height - bottom + 4 << "\" stroke=\"black\"/>\n";
                out_ << "<text x=\"" << num(px(v)) << "\" y=\"" << height - bottom + 16 << "\" text-anchor=\"middle\">" << label
                     << "</text>\n";
            } else {
                out_ << "<line x1=\"" << left - 4 << "\" y1=\"" << num(py(v)) << "\" x2=\"" << left << "\" y2=\"" << num(py(v))
                     << "\" stroke=\"black\"/>\n";
                out_ << "<text x=\"" << left - 6 << "\" y=\"" << num(py(v) + 4) << "\" text-anchor=\"end\">" << label
                     << "</text>\n";
            }
        }
    }

    void frame() {
        out_ << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << width - left - right << "\" height=\""
             << height - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
        ticks(x_, true);
        ticks(y_, false);
    }

    Axis x_, y_;
    std::ostringstream out_;
};

inline const std::vector<std::string>& palette() {
    static const std::vector<std::string> p{"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                            "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
    return p;
}

inline Axis padded(double lo, double hi) {
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

inline Axis log_axis(double lo, double hi) {
    lo = std::pow(10.0, std::floor(std::log10(lo)));
    hi = std::pow(10.0, std::ceil(std::log10(hi)));
    if (!(hi > lo)) hi = lo * 10.0;
    return {lo, hi, true};
}

}  // namespace detail

// Writes the two standard plots for a report; returns the files written. Gaps below
// plot_floor are drawn at the floor.
inline std::vector<std::filesystem::path> emit_plots(const ConvergenceReport& rep, const std::filesystem::path& dir,
                                                     std::ostream& warn = std::cerr) {
    if (rep.rows.empty()) {
        warn << "warning: report '" << rep.scenario << "' has no samples (empty t-grid); no plots written\n";
        return {};
    }
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> files;
    const auto& colors = detail::palette();

    std::vector<double> hbars;
    for (const auto& r : rep.rows) hbars.push_back(r.hbar);
    std::sort(hbars.begin(), hbars.end(), std::greater<>());
    hbars.erase(std::unique(hbars.begin(), hbars.end()), hbars.end());
    std::vector<std::string> series;
    for (const auto& r : rep.rows)
        if (std::find(series.begin(), series.end(), r.series) == series.end()) series.push_back(r.series);

    if (rep.quantity == Quantity::echo) {
        double tmax = 0.0, lo = 0.0, hi = 1.0;
        for (const auto& r : rep.rows) {
            tmax = std::max(tmax, r.t);
            lo = std::min(lo, r.sim_value);
            hi = std::max(hi, r.sim_value);
        }
        for (const auto& [t, v] : rep.theory_curve) {
            tmax = std::max(tmax, t);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        detail::Svg svg(detail::padded(0.0, tmax), detail::padded(lo, hi), rep.scenario + ": echo", "t (units of hbar/eps)",
                        "echo");
        int slot = 0;
        if (!rep.theory_curve.empty()) {
            svg.polyline(rep.theory_curve, "black");
            svg.legend(slot++, "limit", "black", true);
        } else {
            std::vector<std::pair<double, double>> pts;
            for (const auto& r : rep.rows)
                if (r.hbar == hbars.back() && !std::isnan(r.theory_value)) pts.push_back({r.t, r.theory_value});
            std::sort(pts.begin(), pts.end());
            if (!pts.empty()) {
                svg.polyline(pts, "black", true);
                svg.legend(slot++, "model", "black", true);
            }
        }
        for (std::size_t i = 0; i < hbars.size(); ++i) {
            std::vector<std::pair<double, double>> pts;
            for (const auto& r : rep.rows)
                if (r.hbar == hbars[i]) pts.push_back({r.t, r.sim_value});
            std::sort(pts.begin(), pts.end());
            const auto& c = colors[i % colors.size()];
            svg.markers(pts, c);
            char label[48];
            std::snprintf(label, sizeof label, "hbar=%.4g", hbars[i]);
            svg.legend(slot++, label, c, false);
        }
        files.push_back(dir / "echo_vs_t.svg");
        write_text(files.back(), svg.str());
    } else {
        double lo = 0.0, hi = 0.0;
        for (const auto& r : rep.rows) {
            lo = std::min({lo, r.sim_value, std::isnan(r.theory_value) ? lo : r.theory_value});
            hi = std::max({hi, r.sim_value, std::isnan(r.theory_value) ? hi : r.theory_value});
        }
        detail::Svg svg(detail::log_axis(hbars.back(), hbars.front()), detail::padded(lo, hi),
                        rep.scenario + ": pairing", "hbar", "Re value");
        int slot = 0;
        for (std::size_t i = 0; i < series.size(); ++i) {
            const auto& c = colors[i % colors.size()];
            std::vector<std::pair<double, double>> pts, th;
            for (const auto* r : rep.rows_of(series[i])) {
                pts.push_back({r->hbar, r->sim_value});
                if (!std::isnan(r->theory_value)) th.push_back({r->hbar, r->theory_value});
            }
            svg.polyline(pts, c);
            svg.markers(pts, c);
            svg.polyline(th, c, true);
            svg.legend(slot++, series[i], c, false);
        }
        files.push_back(dir / "value_vs_hbar.svg");
        write_text(files.back(), svg.str());
    }

    double gmax = plot_floor;
    for (const auto& r : rep.rows)
        if (!std::isnan(r.gap)) gmax = std::max(gmax, r.gap);
    detail::Svg svg(detail::log_axis(hbars.back(), hbars.front()), detail::log_axis(plot_floor, gmax),
                    rep.scenario + ": gap", "hbar", "|sim - theory|");
    int slot = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        std::vector<std::pair<double, double>> pts;
        for (const auto* r : rep.rows_of(series[i]))
            if (!std::isnan(r->gap)) pts.push_back({r->hbar, std::max(r->gap, plot_floor)});
        if (pts.empty()) continue;
        const auto& c = colors[i % colors.size()];
        svg.polyline(pts, c);
        svg.markers(pts, c);
        svg.legend(slot++, series[i], c, false);
    }
    files.push_back(dir / "gap_vs_hbar.svg");
    write_text(files.back(), svg.str());
    return files;
}

}  // namespace qle
