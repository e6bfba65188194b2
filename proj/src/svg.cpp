#include "acpsbc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace acpsbc {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 720;
constexpr int kPlotHeight = 420;
constexpr int kMargin = 50;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"};
constexpr int kPaletteSize = 10;

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(2);
    s << std::fixed << v;
    return s.str();
}

struct Frame {
    double x0, x1, y0, y1;
    double px0, px1, py0, py1;  // pixel corners (py grows downward)

    double x(double wx) const { return px0 + (wx - x0) / (x1 - x0) * (px1 - px0); }
    double y(double wy) const { return py0 + (wy - y0) / (y1 - y0) * (py1 - py0); }
};

void polyline(std::ostringstream& svg, const Frame& f, const std::vector<Eigen::Vector2d>& pts,
              const std::string& color, double width, double opacity = 1.0) {
    if (pts.size() < 2) return;
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width
        << "\" stroke-opacity=\"" << opacity << "\" points=\"";
    for (const auto& p : pts) svg << fmt(f.x(p.x())) << "," << fmt(f.y(p.y())) << " ";
    svg << "\"/>\n";
}

void open_svg(std::ostringstream& svg, int height) {
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << kWidth << " " << height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void save(const std::ostringstream& svg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write svg: " + path);
    out << svg.str() << "</svg>\n";
}

Frame series_frame(double n_steps_s, double lo, double hi) {
    if (!(hi > lo)) hi = lo + 1.0;
    const double pad = 0.08 * (hi - lo);
    return {0.0,          n_steps_s, lo - pad, hi + pad, kMargin, kWidth - kMargin,
            kPlotHeight - kMargin, kMargin};
}

void series_axes(std::ostringstream& svg, const Frame& f, const std::string& x_label,
                 const std::string& y_label) {
    svg << "<line x1=\"" << fmt(f.px0) << "\" y1=\"" << fmt(f.py0) << "\" x2=\"" << fmt(f.px1)
        << "\" y2=\"" << fmt(f.py0) << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg << "<line x1=\"" << fmt(f.px0) << "\" y1=\"" << fmt(f.py0) << "\" x2=\"" << fmt(f.px0)
        << "\" y2=\"" << fmt(f.py1) << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << fmt((f.px0 + f.px1) / 2) << "\" y=\"" << fmt(f.py0 + 35)
        << "\" font-size=\"13\" text-anchor=\"middle\">" << x_label << "</text>\n";
    svg << "<text x=\"" << fmt(f.px0 - 35) << "\" y=\"" << fmt((f.py0 + f.py1) / 2)
        << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 " << fmt(f.px0 - 35) << " "
        << fmt((f.py0 + f.py1) / 2) << ")\">" << y_label << "</text>\n";
    // y tick labels at the extremes and zero when inside
    for (const double v : {f.y0, 0.0, f.y1}) {
        if (v < f.y0 || v > f.y1) continue;
        svg << "<text x=\"" << fmt(f.px0 - 6) << "\" y=\"" << fmt(f.y(v) + 4)
            << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
    }
}

void zero_line(std::ostringstream& svg, const Frame& f) {
    if (0.0 < f.y0 || 0.0 > f.y1) return;
    svg << "<line x1=\"" << fmt(f.px0) << "\" y1=\"" << fmt(f.y(0.0)) << "\" x2=\"" << fmt(f.px1)
        << "\" y2=\"" << fmt(f.y(0.0))
        << "\" stroke=\"black\" stroke-width=\"1\" stroke-dasharray=\"6,4\"/>\n";
}

std::pair<double, double> series_range(const std::vector<const std::vector<double>*>& all) {
    double lo = 0.0;
    double hi = 0.0;
    bool first = true;
    for (const auto* s : all) {
        for (const double v : *s) {
            if (!std::isfinite(v)) continue;
            if (first) {
                lo = hi = v;
                first = false;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
    lo = std::min(lo, 0.0);  // keep the reference line visible
    return {lo, hi};
}

void draw_series(std::ostringstream& svg, const Frame& f, const std::vector<double>& values, double dt,
                 const std::string& color) {
    std::vector<Eigen::Vector2d> pts;
    pts.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        if (std::isfinite(values[i])) pts.emplace_back(static_cast<double>(i) * dt, values[i]);
    polyline(svg, f, pts, color, 1.5);
}

}  // namespace

void write_trajectory_svg(const TrajectoryLog& log, const Scenario& scenario, const std::string& path) {
    const double e = scenario.workspace_half_extent;
    Frame f{-e, e, -e, e, kMargin, kWidth - kMargin, kHeight - kMargin, kMargin};
    std::ostringstream svg;
    open_svg(svg, kHeight);
    svg << "<rect x=\"" << fmt(f.x(-e)) << "\" y=\"" << fmt(f.y(e)) << "\" width=\""
        << fmt(f.x(e) - f.x(-e)) << "\" height=\"" << fmt(f.y(-e) - f.y(e))
        << "\" fill=\"none\" stroke=\"#999\"/>\n";
    const double px_per_m = (f.x(e) - f.x(-e)) / (2.0 * e);
    for (const ObstacleSpec& o : scenario.obstacles)
        svg << "<circle cx=\"" << fmt(f.x(o.center.x())) << "\" cy=\"" << fmt(f.y(o.center.y()))
            << "\" r=\"" << fmt(o.radius * px_per_m) << "\" fill=\"#bbb\" stroke=\"#555\"/>\n";
    for (std::size_t i = 0; i < scenario.robots.size(); ++i) {
        const std::string color = kPalette[i % kPaletteSize];
        std::vector<Eigen::Vector2d> pts;
        pts.reserve(log.steps.size());
        for (const StepRecord& rec : log.steps) pts.push_back(rec.states[i].position);
        polyline(svg, f, pts, color, 1.2, 0.9);
        const Eigen::Vector2d s = scenario.robots[i].start.position;
        const Eigen::Vector2d g = scenario.robots[i].goal;
        svg << "<circle cx=\"" << fmt(f.x(s.x())) << "\" cy=\"" << fmt(f.y(s.y()))
            << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        svg << "<rect x=\"" << fmt(f.x(g.x()) - 3) << "\" y=\"" << fmt(f.y(g.y()) - 3)
            << "\" width=\"6\" height=\"6\" fill=\"none\" stroke=\"" << color << "\"/>\n";
    }
    save(svg, path);
}

void write_min_distance_svg(const MinDistanceSeries& series, double dt, const std::string& path) {
    std::vector<const std::vector<double>*> all;
    if (!series.robot_robot.empty()) all.push_back(&series.robot_robot);
    if (!series.robot_obstacle.empty()) all.push_back(&series.robot_obstacle);
    const std::size_t n =
        std::max(series.robot_robot.size(), series.robot_obstacle.size());
    const auto [lo, hi] = series_range(all);
    const Frame f = series_frame(static_cast<double>(n) * dt, lo, hi);
    std::ostringstream svg;
    open_svg(svg, kPlotHeight);
    series_axes(svg, f, "time [s]", "min distance - safety distance [m]");
    zero_line(svg, f);
    if (!series.robot_robot.empty()) {
        draw_series(svg, f, series.robot_robot, dt, kPalette[0]);
        svg << "<text x=\"" << kWidth - kMargin - 4 << "\" y=\"" << kMargin + 14
            << "\" font-size=\"12\" text-anchor=\"end\" fill=\"" << kPalette[0]
            << "\">robot-robot</text>\n";
    }
    if (!series.robot_obstacle.empty()) {
        draw_series(svg, f, series.robot_obstacle, dt, kPalette[1]);
        svg << "<text x=\"" << kWidth - kMargin - 4 << "\" y=\"" << kMargin + 30
            << "\" font-size=\"12\" text-anchor=\"end\" fill=\"" << kPalette[1]
            << "\">robot-obstacle</text>\n";
    }
    save(svg, path);
}

void write_series_overlay_svg(const std::vector<std::pair<std::string, std::vector<double>>>& series,
                              double dt, const std::string& path) {
    std::vector<const std::vector<double>*> all;
    std::size_t n = 0;
    for (const auto& [label, values] : series) {
        all.push_back(&values);
        n = std::max(n, values.size());
    }
    const auto [lo, hi] = series_range(all);
    const Frame f = series_frame(static_cast<double>(n) * dt, lo, hi);
    std::ostringstream svg;
    open_svg(svg, kPlotHeight);
    series_axes(svg, f, "time [s]", "min distance - safety distance [m]");
    zero_line(svg, f);
    for (std::size_t s = 0; s < series.size(); ++s) {
        const std::string color = kPalette[s % kPaletteSize];
        draw_series(svg, f, series[s].second, dt, color);
        svg << "<text x=\"" << kWidth - kMargin - 4 << "\" y=\"" << kMargin + 14 + 16 * s
            << "\" font-size=\"12\" text-anchor=\"end\" fill=\"" << color << "\">" << series[s].first
            << "</text>\n";
    }
    save(svg, path);
}

}  // namespace acpsbc
