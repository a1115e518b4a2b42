#pragma once

// Self-contained SVG rendering of trace signals. Tracking-error signals get
// their +/- envelope overlays automatically.

#include <fstream>

#include "mrbc/trace.hpp"

namespace mrbc {

namespace detail {

struct Series {
    std::string label;
    Vec t;
    Vec y;
    bool overlay = false;  // envelope overlays render dashed
};

inline std::string svg_color(std::size_t i) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    return palette[i % (sizeof(palette) / sizeof(palette[0]))];
}

inline std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace detail

/// Renders the selected trace columns as an SVG line chart. For every ebar<i>
/// signal the +/- o_i envelope is overlaid. Rejects an empty signal list and
/// unknown columns.
inline void plot(const Trace& trace, const std::vector<std::string>& signals,
                 const std::string& path) {
    if (signals.empty()) throw ConfigError("plot requires at least one signal");
    if (trace.rows() == 0) throw ConfigError("plot requires a non-empty trace");

    const Vec t = trace.column("t");
    std::vector<detail::Series> series;
    for (const auto& name : signals) {
        detail::Series s;
        s.label = name;
        s.t = t;
        s.y = trace.column(name);  // throws on unknown column
        series.push_back(std::move(s));
        if (name.rfind("ebar", 0) == 0) {
            const std::string env_name = "o" + name.substr(4);
            const Vec o = trace.column(env_name);
            detail::Series up{"+" + env_name, t, o, true};
            Vec neg(o.size());
            for (std::size_t i = 0; i < o.size(); ++i) neg[i] = -o[i];
            detail::Series dn{"-" + env_name, t, std::move(neg), true};
            series.push_back(std::move(up));
            series.push_back(std::move(dn));
        }
    }

    double ymin = series[0].y[0], ymax = ymin;
    for (const auto& s : series)
        for (double v : s.y) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    if (ymax == ymin) {
        ymax += 1.0;
        ymin -= 1.0;
    }
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    const double tmin = t.front(), tmax = t.back() == t.front() ? t.front() + 1.0 : t.back();

    const double width = 960, height = 540;
    const double ml = 70, mr = 160, mt = 20, mb = 45;
    const double pw = width - ml - mr, ph = height - mt - mb;
    auto sx = [&](double tv) { return ml + (tv - tmin) / (tmax - tmin) * pw; };
    auto sy = [&](double yv) { return mt + (ymax - yv) / (ymax - ymin) * ph; };

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open plot output: " + path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // Axes and ticks.
    f << "<g stroke=\"#333\" stroke-width=\"1\" font-family=\"sans-serif\" font-size=\"12\">\n";
    f << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
      << mt + ph << "\"/>\n";
    f << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
      << "\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double tv = tmin + (tmax - tmin) * k / 5.0;
        const double yv = ymin + (ymax - ymin) * k / 5.0;
        f << "<line x1=\"" << sx(tv) << "\" y1=\"" << mt + ph << "\" x2=\"" << sx(tv)
          << "\" y2=\"" << mt + ph + 5 << "\"/>\n";
        f << "<text x=\"" << sx(tv) << "\" y=\"" << mt + ph + 20
          << "\" text-anchor=\"middle\" stroke=\"none\" fill=\"#333\">" << detail::svg_num(tv)
          << "</text>\n";
        f << "<line x1=\"" << ml - 5 << "\" y1=\"" << sy(yv) << "\" x2=\"" << ml << "\" y2=\""
          << sy(yv) << "\"/>\n";
        f << "<text x=\"" << ml - 8 << "\" y=\"" << sy(yv) + 4
          << "\" text-anchor=\"end\" stroke=\"none\" fill=\"#333\">" << detail::svg_num(yv)
          << "</text>\n";
    }
    f << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 8
      << "\" text-anchor=\"middle\" stroke=\"none\" fill=\"#333\">t [s]</text>\n";
    f << "</g>\n";

    // At most this many points per polyline; plots do not need every sample.
    const std::size_t max_pts = 2000;
    const std::size_t stride = std::max<std::size_t>(1, t.size() / max_pts);

    std::size_t color = 0;
    for (const auto& s : series) {
        f << "<polyline fill=\"none\" stroke=\"" << detail::svg_color(color) << "\""
          << (s.overlay ? " stroke-dasharray=\"6 4\" stroke-width=\"1\""
                        : " stroke-width=\"1.5\"")
          << " points=\"";
        for (std::size_t i = 0; i < s.t.size(); i += stride)
            f << detail::svg_num(sx(s.t[i])) << ',' << detail::svg_num(sy(s.y[i])) << ' ';
        f << detail::svg_num(sx(s.t.back())) << ',' << detail::svg_num(sy(s.y.back()));
        f << "\"/>\n";
        f << "<text x=\"" << ml + pw + 10 << "\" y=\"" << mt + 16 + 18 * color
          << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
          << detail::svg_color(color) << "\">" << s.label << "</text>\n";
        ++color;
    }
    f << "</svg>\n";
}

}  // namespace mrbc
