#pragma once

// Minimal static SVG figures: line plots and point heatmaps.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace svg {

struct Series {
    std::vector<double> x, y;
    std::string label;
    std::string color = "#1f77b4";
    bool dashed = false;
};

struct Band {
    double x0, x1;
    std::string color = "#dddddd";
};

struct LinePlot {
    std::string title, xlabel, ylabel;
    std::vector<Series> series;
    std::vector<Band> bands;
    bool log_y = false;
    int width = 640, height = 400;
};

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

inline std::string render(const LinePlot& p) {
    const double ml = 70, mr = 150, mt = 40, mb = 50;
    const double pw = p.width - ml - mr, ph = p.height - mt - mb;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    auto ty = [&](double y) { return p.log_y ? std::log10(std::max(y, 1e-300)) : y; };
    for (const auto& s : p.series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto sx = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return mt + (1.0 - (ty(y) - y0) / (y1 - y0)) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << p.width << "\" height=\"" << p.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& b : p.bands) {
        const double a = sx(std::max(b.x0, x0)), c = sx(std::min(b.x1, x1));
        if (c > a) o << "<rect x=\"" << a << "\" y=\"" << mt << "\" width=\"" << c - a << "\" height=\"" << ph << "\" fill=\"" << b.color << "\"/>\n";
    }
    o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
        o << "<text x=\"" << sx(xv) << "\" y=\"" << mt + ph + 16 << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
        const double ypx = mt + (1.0 - i / 4.0) * ph;
        o << "<text x=\"" << ml - 6 << "\" y=\"" << ypx + 4 << "\" text-anchor=\"end\">"
          << num(p.log_y ? std::pow(10.0, yv) : yv) << "</text>\n";
    }
    o << "<text x=\"" << ml + pw / 2 << "\" y=\"" << p.height - 10 << "\" text-anchor=\"middle\">" << escape(p.xlabel) << "</text>\n"
      << "<text x=\"16\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << mt + ph / 2 << ")\">"
      << escape(p.ylabel) << "</text>\n"
      << "<text x=\"" << ml + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(p.title) << "</text>\n";
    int row = 0;
    for (const auto& s : p.series) {
        o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
          << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << " points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            if (std::isfinite(s.y[i])) o << sx(s.x[i]) << ',' << sy(s.y[i]) << ' ';
        o << "\"/>\n";
        const double ly = mt + 10 + 18 * row++;
        o << "<line x1=\"" << ml + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << ml + pw + 34 << "\" y2=\"" << ly
          << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n"
          << "<text x=\"" << ml + pw + 40 << "\" y=\"" << ly + 4 << "\">" << escape(s.label) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

/// Colored squares at scattered 2D points; one panel per field, shared scale.
struct Heatmap {
    std::string title;
    std::vector<double> x, y;
    std::vector<std::vector<double>> fields;
    std::vector<std::string> labels;
    int panel = 260;
};

inline std::string color_of(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int r = static_cast<int>(255 * std::clamp(1.5 - std::abs(4 * t - 3), 0.0, 1.0));
    const int g = static_cast<int>(255 * std::clamp(1.5 - std::abs(4 * t - 2), 0.0, 1.0));
    const int b = static_cast<int>(255 * std::clamp(1.5 - std::abs(4 * t - 1), 0.0, 1.0));
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

inline std::string render(const Heatmap& h) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& f : h.fields)
        for (double v : f)
            if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
    if (!(hi > lo)) hi = lo + 1;
    const double xmin = *std::min_element(h.x.begin(), h.x.end()), xmax = *std::max_element(h.x.begin(), h.x.end());
    const double ymin = *std::min_element(h.y.begin(), h.y.end()), ymax = *std::max_element(h.y.begin(), h.y.end());
    const double cell = h.panel / std::sqrt(static_cast<double>(h.x.size())) + 1;
    const int W = static_cast<int>(h.fields.size()) * (h.panel + 30) + 30, H = h.panel + 80;
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(h.title) << " [" << num(lo)
      << ", " << num(hi) << "]</text>\n";
    for (std::size_t f = 0; f < h.fields.size(); ++f) {
        const double ox = 30 + f * (h.panel + 30.0), oy = 40;
        for (std::size_t i = 0; i < h.x.size(); ++i) {
            const double px = ox + (h.x[i] - xmin) / std::max(1e-12, xmax - xmin) * (h.panel - cell);
            const double py = oy + (1.0 - (h.y[i] - ymin) / std::max(1e-12, ymax - ymin)) * (h.panel - cell);
            o << "<rect x=\"" << px << "\" y=\"" << py << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
              << color_of((h.fields[f][i] - lo) / (hi - lo)) << "\"/>\n";
        }
        o << "<text x=\"" << ox + h.panel / 2.0 << "\" y=\"" << oy + h.panel + 20 << "\" text-anchor=\"middle\">"
          << escape(h.labels[f]) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

template <class Plot>
void write(const std::string& path, const Plot& p) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write figure " + path);
    out << render(p);
}

}  // namespace svg
