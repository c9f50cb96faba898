#include "dsim/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "dsim/errors.hpp"

namespace dsim {

namespace {

constexpr double kWidth = 860.0, kHeight = 520.0;
constexpr double kLeft = 70.0, kRight = 30.0, kTop = 50.0, kBottom = 55.0;

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void grow(double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void pad() {
        if (!(hi > lo)) {
            lo -= 1.0;
            hi += 1.0;
        } else {
            const double m = 0.05 * (hi - lo);
            lo -= m;
            hi += m;
        }
    }
};

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series) {
    Range xr, yr;
    for (const auto& s : series) {
        for (double v : *s.x) xr.grow(v);
        for (double v : *s.y) yr.grow(v);
    }
    xr.pad();
    yr.pad();

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * plot_w; };
    auto py = [&](double y) { return kTop + (yr.hi - y) / (yr.hi - yr.lo) * plot_h; };

    std::ofstream out(path);
    if (!out) throw SimError("cannot write plot file: " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight
        << "' viewBox='0 0 " << kWidth << " " << kHeight << "'>\n"
        << "<rect width='100%' height='100%' fill='white'/>\n"
        << "<text x='" << kWidth / 2 << "' y='28' text-anchor='middle' font-size='18' "
        << "font-family='sans-serif'>" << title << "</text>\n";

    // Grid and tick labels.
    out << "<g font-size='12' font-family='sans-serif' fill='#444'>\n";
    for (int i = 0; i <= 5; ++i) {
        const double fx = xr.lo + (xr.hi - xr.lo) * i / 5.0;
        const double fy = yr.lo + (yr.hi - yr.lo) * i / 5.0;
        out << "<line x1='" << px(fx) << "' y1='" << kTop << "' x2='" << px(fx) << "' y2='"
            << kTop + plot_h << "' stroke='#ddd'/>\n"
            << "<line x1='" << kLeft << "' y1='" << py(fy) << "' x2='" << kLeft + plot_w
            << "' y2='" << py(fy) << "' stroke='#ddd'/>\n"
            << "<text x='" << px(fx) << "' y='" << kTop + plot_h + 18
            << "' text-anchor='middle'>" << std::round(fx * 100.0) / 100.0 << "</text>\n"
            << "<text x='" << kLeft - 8 << "' y='" << py(fy) + 4
            << "' text-anchor='end'>" << std::round(fy * 100.0) / 100.0 << "</text>\n";
    }
    out << "</g>\n"
        << "<rect x='" << kLeft << "' y='" << kTop << "' width='" << plot_w << "' height='"
        << plot_h << "' fill='none' stroke='#333'/>\n"
        << "<text x='" << kLeft + plot_w / 2 << "' y='" << kHeight - 12
        << "' text-anchor='middle' font-size='14' font-family='sans-serif'>" << x_label
        << "</text>\n"
        << "<text x='16' y='" << kTop + plot_h / 2
        << "' text-anchor='middle' font-size='14' font-family='sans-serif' transform='rotate(-90 "
        << 16 << " " << kTop + plot_h / 2 << ")'>" << y_label << "</text>\n";

    for (const auto& s : series) {
        out << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
        const std::size_t n = s.x->size();
        const std::size_t stride = std::max<std::size_t>(1, n / 4000);
        for (std::size_t i = 0; i < n; i += stride)
            out << px((*s.x)[i]) << "," << py((*s.y)[i]) << " ";
        if (n > 0) out << px((*s.x)[n - 1]) << "," << py((*s.y)[n - 1]);
        out << "'/>\n";
    }

    double ly = kTop + 14.0;
    for (const auto& s : series) {
        out << "<line x1='" << kLeft + plot_w - 150 << "' y1='" << ly - 4 << "' x2='"
            << kLeft + plot_w - 125 << "' y2='" << ly - 4 << "' stroke='" << s.color
            << "' stroke-width='2'/>\n"
            << "<text x='" << kLeft + plot_w - 118 << "' y='" << ly
            << "' font-size='12' font-family='sans-serif'>" << s.label << "</text>\n";
        ly += 18.0;
    }
    out << "</svg>\n";
}

}  // namespace dsim
