#pragma once

// Minimal SVG line plots for λ-path tradeoff curves. Fixed 800×500 viewBox,
// log-scale x, one <polyline> per curve, coordinates printed with fixed
// precision so output is byte-stable.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace xmodal::svg {

struct Curve {
    std::string name;
    std::vector<double> y;
    std::string color = "#1f77b4";
};

struct Panel {
    std::string y_label;
    std::vector<Curve> curves;
};

namespace detail {

inline std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

inline std::string escape(const std::string& s) {
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

}  // namespace detail

/// Stacked panels sharing a log-scale x axis. Non-finite or non-positive x
/// values are skipped, as are non-finite y values.
inline std::string line_plot(const std::string& title, const std::string& x_label, const std::vector<double>& x,
                             const std::vector<Panel>& panels) {
    using detail::fmt;
    constexpr double W = 800, H = 500, left = 80, right = 20, top = 40, bottom = 50, gap = 30;
    std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\" width=\"800\" height=\"500\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
    s += "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
         detail::escape(title) + "</text>\n";

    double lx0 = INFINITY, lx1 = -INFINITY;
    for (double v : x)
        if (v > 0 && std::isfinite(v)) {
            lx0 = std::min(lx0, std::log10(v));
            lx1 = std::max(lx1, std::log10(v));
        }
    if (!(lx0 <= lx1)) lx0 = 0, lx1 = 1;
    if (lx0 == lx1) lx0 -= 0.5, lx1 += 0.5;
    auto px = [&](double v) { return left + (std::log10(v) - lx0) / (lx1 - lx0) * (W - left - right); };

    const std::size_t np = std::max<std::size_t>(panels.size(), 1);
    const double ph = (H - top - bottom - gap * static_cast<double>(np - 1)) / static_cast<double>(np);
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const double y0 = top + static_cast<double>(p) * (ph + gap);
        double lo = INFINITY, hi = -INFINITY;
        for (const auto& c : panels[p].curves)
            for (double v : c.y)
                if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
        if (!(lo <= hi)) lo = 0, hi = 1;
        if (lo == hi) lo -= 0.5, hi += 0.5;
        auto py = [&](double v) { return y0 + ph - (v - lo) / (hi - lo) * ph; };

        s += "<rect x=\"" + fmt("%.2f", left) + "\" y=\"" + fmt("%.2f", y0) + "\" width=\"" +
             fmt("%.2f", W - left - right) + "\" height=\"" + fmt("%.2f", ph) +
             "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
        s += "<text x=\"8\" y=\"" + fmt("%.2f", y0 + ph / 2) +
             "\" font-family=\"sans-serif\" font-size=\"12\">" + detail::escape(panels[p].y_label) + "</text>\n";
        s += "<text x=\"" + fmt("%.2f", left - 4) + "\" y=\"" + fmt("%.2f", y0 + 10) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + fmt("%.3g", hi) + "</text>\n";
        s += "<text x=\"" + fmt("%.2f", left - 4) + "\" y=\"" + fmt("%.2f", y0 + ph) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + fmt("%.3g", lo) + "</text>\n";

        for (const auto& c : panels[p].curves) {
            s += "<polyline fill=\"none\" stroke=\"" + detail::escape(c.color) + "\" stroke-width=\"2\" points=\"";
            bool first = true;
            for (std::size_t i = 0; i < x.size() && i < c.y.size(); ++i) {
                if (!(x[i] > 0 && std::isfinite(x[i]) && std::isfinite(c.y[i]))) continue;
                if (!first) s += ' ';
                s += fmt("%.2f", px(x[i])) + "," + fmt("%.2f", py(c.y[i]));
                first = false;
            }
            s += "\"><title>" + detail::escape(c.name) + "</title></polyline>\n";
        }
    }
    // decade ticks
    for (int k = static_cast<int>(std::ceil(lx0)); k <= static_cast<int>(std::floor(lx1)); ++k) {
        const double xv = px(std::pow(10.0, k));
        s += "<text x=\"" + fmt("%.2f", xv) + "\" y=\"" + fmt("%.2f", H - bottom + 16) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">1e" + std::to_string(k) +
             "</text>\n";
    }
    s += "<text x=\"400\" y=\"" + fmt("%.2f", H - 10) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + detail::escape(x_label) +
         "</text>\n";
    s += "</svg>\n";
    return s;
}

}  // namespace xmodal::svg
