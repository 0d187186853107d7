#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "cli.hpp"
#include "spectral/error.hpp"

namespace spectral::cli {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        switch (c) {
            case '&': o += "&amp;"; break;
            case '<': o += "&lt;"; break;
            case '>': o += "&gt;"; break;
            case '"': o += "&quot;"; break;
            case '\'': o += "&apos;"; break;
            default: o += c;
        }
    }
    return o;
}

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    bool log = false;

    double t(double v) const { return log ? std::log10(v) : v; }
    double frac(double v) const { return (t(v) - lo) / (hi - lo); }
    double inv(double u) const { return log ? std::pow(10.0, u) : u; }
};

Axis make_axis(const std::vector<Series>& s, bool use_x, bool log) {
    Axis a;
    a.log = log;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& ser : s) {
        for (double v : use_x ? ser.x : ser.y) {
            if (log && !(v > 0.0)) throw Error(ErrorKind::ConfigError, "log-scale axis needs positive values");
            lo = std::min(lo, a.t(v));
            hi = std::max(hi, a.t(v));
        }
    }
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
        lo -= 0.5;
        hi += 0.5;
    }
    a.lo = lo;
    a.hi = hi;
    return a;
}

}  // namespace

std::string render_svg_plot(const std::vector<Series>& series, const PlotOptions& opts) {
    if (series.empty()) throw Error(ErrorKind::EmptySeries, "nothing to plot");
    for (const auto& s : series) {
        if (s.x.empty() || s.x.size() != s.y.size()) {
            throw Error(ErrorKind::EmptySeries, "series '" + s.name + "' is empty or has mismatched x/y");
        }
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                throw Error(ErrorKind::ConfigError, "series '" + s.name + "' has non-finite values");
            }
        }
    }
    const Axis ax = make_axis(series, true, opts.log_x);
    const Axis ay = make_axis(series, false, opts.log_y);
    const double left = 70, right = 150, top = 40, bottom = 50;
    const double w = opts.width, h = opts.height;
    const double pw = w - left - right, ph = h - top - bottom;
    auto px = [&](double v) { return left + ax.frac(v) * pw; };
    auto py = [&](double v) { return top + (1.0 - ay.frac(v)) * ph; };

    std::string o;
    o += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(opts.width) + "\" height=\"" +
         std::to_string(opts.height) + "\" viewBox=\"0 0 " + std::to_string(opts.width) + " " +
         std::to_string(opts.height) + "\">\n";
    o += "<rect x=\"0\" y=\"0\" width=\"" + num(w) + "\" height=\"" + num(h) + "\" fill=\"white\"/>\n";
    if (!opts.title.empty()) {
        o += "<text x=\"" + num(left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "font-size=\"15\">" + escape(opts.title) + "</text>\n";
    }
    o += "<g stroke=\"black\" stroke-width=\"1\">\n";
    o += "<line x1=\"" + num(left) + "\" y1=\"" + num(top + ph) + "\" x2=\"" + num(left + pw) + "\" y2=\"" +
         num(top + ph) + "\"/>\n";
    o += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) + "\" y2=\"" + num(top + ph) +
         "\"/>\n";
    o += "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int i = 0; i <= 5; ++i) {
        const double u = i / 5.0;
        const double xv = ax.inv(ax.lo + u * (ax.hi - ax.lo));
        const double yv = ay.inv(ay.lo + u * (ay.hi - ay.lo));
        const double x = left + u * pw;
        const double y = top + (1.0 - u) * ph;
        o += "<line x1=\"" + num(x) + "\" y1=\"" + num(top + ph) + "\" x2=\"" + num(x) + "\" y2=\"" +
             num(top + ph + 5) + "\" stroke=\"black\"/>\n";
        o += "<text x=\"" + num(x) + "\" y=\"" + num(top + ph + 18) + "\" text-anchor=\"middle\">" + label(xv) +
             "</text>\n";
        o += "<line x1=\"" + num(left - 5) + "\" y1=\"" + num(y) + "\" x2=\"" + num(left) + "\" y2=\"" + num(y) +
             "\" stroke=\"black\"/>\n";
        o += "<text x=\"" + num(left - 8) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + label(yv) +
             "</text>\n";
    }
    if (!opts.x_label.empty()) {
        o += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(h - 10) + "\" text-anchor=\"middle\">" +
             escape(opts.x_label + (opts.log_x ? " (log)" : "")) + "</text>\n";
    }
    if (!opts.y_label.empty()) {
        o += "<text x=\"16\" y=\"" + num(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
             num(top + ph / 2) + ")\">" + escape(opts.y_label + (opts.log_y ? " (log)" : "")) + "</text>\n";
    }
    o += "</g>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof kPalette / sizeof *kPalette)];
        o += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            if (i) o += ' ';
            o += num(px(series[s].x[i])) + "," + num(py(series[s].y[i]));
        }
        o += "\"><title>" + escape(series[s].name) + "</title></polyline>\n";
        const double ly = top + 12 + 18.0 * static_cast<double>(s);
        o += "<line x1=\"" + num(left + pw + 12) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(left + pw + 32) +
             "\" y2=\"" + num(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        o += "<text x=\"" + num(left + pw + 38) + "\" y=\"" + num(ly + 4) +
             "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(series[s].name) + "</text>\n";
    }
    o += "</svg>\n";
    return o;
}

void emit_svg_plot(const std::vector<Series>& series, const std::string& path, const PlotOptions& opts) {
    const std::string svg = render_svg_plot(series, opts);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
    out << svg;
}

}  // namespace spectral::cli
