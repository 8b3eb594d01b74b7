#include "impnet/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace impnet::svgplot {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void include(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void pad() {
        if (!(hi > lo)) {
            lo -= 1.0;
            hi += 1.0;
        } else {
            const double margin = 0.05 * (hi - lo);
            lo -= margin;
            hi += margin;
        }
    }
};

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

void render_panel(std::ostringstream& out, const std::vector<Series>& series,
                  const PlotSpec& spec, double ox, double oy) {
    const double ml = 70, mr = 20, mt = 36, mb = 46;
    const double pw = spec.width - ml - mr;
    const double ph = spec.height - mt - mb;

    auto ty = [&](double v) { return spec.log_y ? std::log10(std::max(v, 1e-300)) : v; };

    Range rx, ry;
    for (const Series& s : series) {
        for (double v : s.x) rx.include(v);
        for (double v : s.y) ry.include(ty(v));
    }
    if (!std::isfinite(rx.lo) || !std::isfinite(ry.lo)) {
        rx = {0.0, 1.0};
        ry = {0.0, 1.0};
    }
    rx.pad();
    ry.pad();

    auto px = [&](double v) { return ox + ml + (v - rx.lo) / (rx.hi - rx.lo) * pw; };
    auto py = [&](double v) {
        return oy + mt + ph - (ty(v) - ry.lo) / (ry.hi - ry.lo) * ph;
    };

    out << "<rect x='" << ox + ml << "' y='" << oy + mt << "' width='" << pw
        << "' height='" << ph << "' fill='white' stroke='#333'/>\n";
    out << "<text x='" << ox + ml + pw / 2 << "' y='" << oy + 20
        << "' text-anchor='middle' font-size='15'>" << spec.title << "</text>\n";

    // ticks
    for (int i = 0; i <= 5; ++i) {
        const double fx = rx.lo + (rx.hi - rx.lo) * i / 5.0;
        const double gy = ry.lo + (ry.hi - ry.lo) * i / 5.0;
        out << "<line x1='" << px(fx) << "' y1='" << oy + mt + ph << "' x2='"
            << px(fx) << "' y2='" << oy + mt + ph + 5 << "' stroke='#333'/>\n";
        out << "<text x='" << px(fx) << "' y='" << oy + mt + ph + 18
            << "' text-anchor='middle' font-size='11'>" << fmt(fx) << "</text>\n";
        const double yv = spec.log_y ? std::pow(10.0, gy) : gy;
        const double ypix = oy + mt + ph - (gy - ry.lo) / (ry.hi - ry.lo) * ph;
        out << "<line x1='" << ox + ml - 5 << "' y1='" << ypix << "' x2='"
            << ox + ml << "' y2='" << ypix << "' stroke='#333'/>\n";
        out << "<text x='" << ox + ml - 8 << "' y='" << ypix + 4
            << "' text-anchor='end' font-size='11'>" << fmt(yv) << "</text>\n";
    }
    out << "<text x='" << ox + ml + pw / 2 << "' y='" << oy + spec.height - 8
        << "' text-anchor='middle' font-size='12'>" << spec.x_label << "</text>\n";
    out << "<text x='" << ox + 16 << "' y='" << oy + mt + ph / 2
        << "' text-anchor='middle' font-size='12' transform='rotate(-90 " << ox + 16
        << " " << oy + mt + ph / 2 << ")'>" << spec.y_label << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const Series& s = series[si];
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(*kPalette))];
        if (s.scatter) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                out << "<circle cx='" << px(s.x[i]) << "' cy='" << py(s.y[i])
                    << "' r='2.4' fill='" << color << "' fill-opacity='0.75'/>\n";
            }
        } else {
            out << "<polyline fill='none' stroke='" << color
                << "' stroke-width='1.4' points='";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
            }
            out << "'/>\n";
        }
        if (!s.label.empty()) {
            const double lx = ox + ml + 10;
            const double lyy = oy + mt + 16 + 16.0 * static_cast<double>(si);
            out << "<rect x='" << lx << "' y='" << lyy - 9
                << "' width='10' height='10' fill='" << color << "'/>\n";
            out << "<text x='" << lx + 14 << "' y='" << lyy
                << "' font-size='11'>" << s.label << "</text>\n";
        }
    }
}

}  // namespace

void write_svg(const std::vector<Series>& series, const PlotSpec& spec,
               const std::string& path) {
    std::ostringstream out;
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << spec.width
        << "' height='" << spec.height << "'>\n";
    out << "<rect width='100%' height='100%' fill='#fafafa'/>\n";
    render_panel(out, series, spec, 0, 0);
    out << "</svg>\n";
    std::ofstream f(path);
    if (!f) throw std::runtime_error("svgplot: cannot open " + path);
    f << out.str();
}

void write_svg_grid(const std::vector<Panel>& panels, int columns,
                    const std::string& title, const std::string& path) {
    if (panels.empty() || columns < 1) {
        throw std::invalid_argument("svgplot: empty grid");
    }
    const int rows =
        static_cast<int>((panels.size() + columns - 1) / static_cast<std::size_t>(columns));
    const int pw = panels[0].spec.width;
    const int ph = panels[0].spec.height;
    std::ostringstream out;
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << pw * columns
        << "' height='" << ph * rows + 28 << "'>\n";
    out << "<rect width='100%' height='100%' fill='#fafafa'/>\n";
    out << "<text x='" << pw * columns / 2
        << "' y='18' text-anchor='middle' font-size='16'>" << title << "</text>\n";
    for (std::size_t i = 0; i < panels.size(); ++i) {
        const double ox = static_cast<double>(static_cast<int>(i) % columns) * pw;
        const double oy = 28.0 + static_cast<double>(static_cast<int>(i) / columns) * ph;
        render_panel(out, panels[i].series, panels[i].spec, ox, oy);
    }
    out << "</svg>\n";
    std::ofstream f(path);
    if (!f) throw std::runtime_error("svgplot: cannot open " + path);
    f << out.str();
}

}  // namespace impnet::svgplot
