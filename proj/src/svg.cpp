#include "loadcast/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "loadcast/csv.hpp"
#include "loadcast/errors.hpp"

namespace loadcast::svg {

namespace {

constexpr double kWidth = 840, kHeight = 520;
constexpr double kLeft = 70, kRight = 20, kTop = 50, kBottom = 50;

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void pad() {
        if (!(hi > lo)) {
            lo -= 1.0;
            hi += 1.0;
        }
        const double m = 0.03 * (hi - lo);
        lo -= m;
        hi += m;
    }
};

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

double nice_step(double span) {
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= m * mag) return m * mag;
    }
    return 10.0 * mag;
}

}  // namespace

void write_line_plot(const std::string& path, const LinePlot& plot) {
    Range rx, ry;
    for (const auto& s : plot.series) {
        for (double v : s.x) rx.add(v);
        for (double v : s.y) ry.add(v);
    }
    if (!std::isfinite(rx.lo) || !std::isfinite(ry.lo)) throw EmptyInput("plot has no data");
    rx.pad();
    ry.pad();

    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + (v - rx.lo) / (rx.hi - rx.lo) * pw; };
    auto py = [&](double v) { return kHeight - kBottom - (v - ry.lo) / (ry.hi - ry.lo) * ph; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"13\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << esc(plot.title) << "</text>\n";

    // axes + ticks
    out << "<g stroke=\"#333\" stroke-width=\"1\">";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight
        << "\" y2=\"" << kHeight - kBottom << "\"/>";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
        << kHeight - kBottom << "\"/></g>\n";
    const double sx = nice_step(rx.hi - rx.lo), sy = nice_step(ry.hi - ry.lo);
    for (double v = std::ceil(rx.lo / sx) * sx; v <= rx.hi + 1e-12; v += sx) {
        out << "<line x1=\"" << px(v) << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << px(v)
            << "\" y2=\"" << kHeight - kBottom + 5 << "\" stroke=\"#333\"/>";
        out << "<text x=\"" << px(v) << "\" y=\"" << kHeight - kBottom + 20
            << "\" text-anchor=\"middle\">" << csv::format_double(v) << "</text>\n";
    }
    for (double v = std::ceil(ry.lo / sy) * sy; v <= ry.hi + 1e-12; v += sy) {
        out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << py(v) << "\" x2=\"" << kLeft
            << "\" y2=\"" << py(v) << "\" stroke=\"#333\"/>";
        out << "<text x=\"" << kLeft - 9 << "\" y=\"" << py(v) + 4
            << "\" text-anchor=\"end\">" << csv::format_double(v) << "</text>\n";
    }
    out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 10
        << "\" text-anchor=\"middle\">" << esc(plot.xlabel) << "</text>\n";
    out << "<text x=\"16\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << kHeight / 2 << ")\">" << esc(plot.ylabel) << "</text>\n";

    double legend_y = kTop + 6;
    for (const auto& s : plot.series) {
        if (s.x.size() != s.y.size()) throw ParamError("series x/y length mismatch");
        if (s.points) {
            out << "<g fill=\"" << s.color << "\">";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                out << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"2\"/>";
            }
            out << "</g>\n";
        } else {
            out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.3\"";
            if (s.dashed) out << " stroke-dasharray=\"6 4\"";
            out << " points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (i) out << ' ';
                out << px(s.x[i]) << ',' << py(s.y[i]);
            }
            out << "\"/>\n";
        }
        if (!s.label.empty()) {
            out << "<rect x=\"" << kWidth - 190 << "\" y=\"" << legend_y - 9
                << "\" width=\"14\" height=\"4\" fill=\"" << s.color << "\"/>";
            out << "<text x=\"" << kWidth - 172 << "\" y=\"" << legend_y << "\">" << esc(s.label)
                << "</text>\n";
            legend_y += 18;
        }
    }

    if (plot.embed_data) {
        out << "<!-- data\n";
        for (const auto& s : plot.series) {
            out << "series," << s.label << '\n';
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                out << csv::format_double(s.x[i]) << ',' << csv::format_double(s.y[i]) << '\n';
            }
        }
        out << "-->\n";
    }
    out << "</svg>\n";

    std::ofstream f(path);
    if (!f) throw Error("cannot write plot: " + path);
    f << out.str();
}

}  // namespace loadcast::svg
