#pragma once

#include <string>
#include <vector>

namespace impnet::svgplot {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool scatter = false;  // points instead of a polyline
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    int width = 900;
    int height = 560;
};

// Static SVG with axes, ticks and a legend; series colors cycle a fixed
// palette so output is deterministic.
void write_svg(const std::vector<Series>& series, const PlotSpec& spec,
               const std::string& path);

// Multi-panel variant (grid of sub-plots), used for per-element overlays.
struct Panel {
    PlotSpec spec;
    std::vector<Series> series;
};
void write_svg_grid(const std::vector<Panel>& panels, int columns,
                    const std::string& title, const std::string& path);

}  // namespace impnet::svgplot
