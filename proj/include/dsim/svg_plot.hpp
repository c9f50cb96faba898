#ifndef DSIM_SVG_PLOT_HPP
#define DSIM_SVG_PLOT_HPP

#include <string>
#include <vector>

namespace dsim {

struct PlotSeries {
    std::string label;
    const std::vector<double>* x = nullptr;
    const std::vector<double>* y = nullptr;
    std::string color = "#1f77b4";
};

/// Renders line series into a standalone SVG file with axes and a legend.
void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series);

}  // namespace dsim

#endif  // DSIM_SVG_PLOT_HPP
