#pragma once

// Shared test fixtures: synthetic rasters, analytic curves, scratch dirs, and
// a helper for shelling out to the built CLI.

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "oculolipid/csv.hpp"
#include "oculolipid/raster.hpp"
#include "oculolipid/skeleton.hpp"

namespace fixtures {

using oculolipid::morpho::BitRaster;
using oculolipid::morpho::CenterlineSegment;

inline void fill_rect(BitRaster& r, int x0, int y0, int w, int h) {
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) r.set(x, y, 1);
}

inline BitRaster bar(int canvas_w, int canvas_h, int x0, int y0, int w, int h) {
    BitRaster r(canvas_w, canvas_h);
    fill_rect(r, x0, y0, w, h);
    return r;
}

// Gap-free rasterized line (oversampled DDA).
inline void draw_line(BitRaster& r, double x0, double y0, double x1, double y1) {
    double dx = x1 - x0, dy = y1 - y0;
    int steps = int(std::ceil(std::max(std::abs(dx), std::abs(dy)))) * 2 + 1;
    for (int i = 0; i <= steps; ++i) {
        double t = double(i) / double(steps);
        int x = int(std::lround(x0 + t * dx));
        int y = int(std::lround(y0 + t * dy));
        if (r.in_bounds(x, y)) r.set(x, y, 1);
    }
}

inline void koch_segment(BitRaster& r, double x0, double y0, double x1, double y1, int depth) {
    if (depth == 0) {
        draw_line(r, x0, y0, x1, y1);
        return;
    }
    double dx = (x1 - x0) / 3.0, dy = (y1 - y0) / 3.0;
    double ax = x0 + dx, ay = y0 + dy;
    double bx = x0 + 2.0 * dx, by = y0 + 2.0 * dy;
    double px = ax + dx * 0.5 + dy * std::sqrt(3.0) / 2.0;
    double py = ay + dy * 0.5 - dx * std::sqrt(3.0) / 2.0;
    koch_segment(r, x0, y0, ax, ay, depth - 1);
    koch_segment(r, ax, ay, px, py, depth - 1);
    koch_segment(r, px, py, bx, by, depth - 1);
    koch_segment(r, bx, by, x1, y1, depth - 1);
}

// Depth-5 Koch curve on a canvas cropped to its bounding box. The tight crop
// matters: it caps the dyadic box ladder at sizes where the curve is still
// self-similar (features span 3..243 px here), instead of letting boxes grow
// into the from-afar regime where any curve reads as one-dimensional.
inline BitRaster koch_raster() {
    BitRaster r(760, 224);
    koch_segment(r, 15.0, 216.0, 744.0, 216.0, 5);
    return r;
}

inline CenterlineSegment straight_segment(double length, int n_points) {
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < n_points; ++i)
        pts.emplace_back(length * double(i) / double(n_points - 1), 3.0);
    return oculolipid::morpho::make_segment(std::move(pts));
}

inline CenterlineSegment arc_segment(double radius, double theta0, double theta1,
                                     double step_px = 0.5) {
    int n = std::max(3, int(std::ceil(radius * (theta1 - theta0) / step_px)) + 1);
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < n; ++i) {
        double t = theta0 + (theta1 - theta0) * double(i) / double(n - 1);
        pts.emplace_back(radius * std::cos(t), radius * std::sin(t));
    }
    return oculolipid::morpho::make_segment(std::move(pts));
}

inline CenterlineSegment sine_segment(double amplitude, double wavelength, double x_max,
                                      double dx = 0.25) {
    std::vector<std::pair<double, double>> pts;
    for (double x = 0.0; x <= x_max + dx / 2.0; x += dx)
        pts.emplace_back(x, amplitude * std::sin(2.0 * M_PI * x / wavelength));
    return oculolipid::morpho::make_segment(std::move(pts));
}

inline std::string fresh_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    namespace fs = std::filesystem;
    fs::path p = fs::temp_directory_path() /
                 ("oculo_" + tag + "_" + std::to_string(counter.fetch_add(1)));
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

inline size_t count_substr(const std::string& haystack, const std::string& needle) {
    size_t count = 0, pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

#ifdef OCULOLIPID_CLI_PATH
struct CliResult {
    int exit_code = -1;
    std::string output; // stdout + stderr
};

inline CliResult run_cli(const std::string& args, const std::string& env = "") {
    static std::atomic<int> counter{0};
    namespace fs = std::filesystem;
    fs::path log = fs::temp_directory_path() /
                   ("oculo_cli_out_" + std::to_string(counter.fetch_add(1)) + ".txt");
    std::string cmd = (env.empty() ? "" : env + " ") + std::string(OCULOLIPID_CLI_PATH) + " " +
                      args + " >" + log.string() + " 2>&1";
    int rc = std::system(cmd.c_str());
    CliResult result;
    result.exit_code = (rc >= 0 && WIFEXITED(rc)) ? WEXITSTATUS(rc) : -1;
    try {
        result.output = oculolipid::read_text_file(log.string());
    } catch (...) {
    }
    std::error_code ignore;
    fs::remove(log, ignore);
    return result;
}
#endif

} // namespace fixtures
