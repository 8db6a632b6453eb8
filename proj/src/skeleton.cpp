#include "oculolipid/skeleton.hpp"

#include <algorithm>
#include <cmath>

namespace oculolipid::morpho {

namespace {

// Neighbor order: E, SE, S, SW, W, NW, N, NE. Opposite of k is (k+4)%8.
constexpr int DX[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int DY[8] = {0, 1, 1, 1, 0, -1, -1, -1};
const double STEP_W[8] = {1.0, std::sqrt(2.0), 1.0, std::sqrt(2.0),
                          1.0, std::sqrt(2.0), 1.0, std::sqrt(2.0)};

bool reduced_adjacent(const BitRaster& r, int x, int y, int dir) {
    int nx = x + DX[dir], ny = y + DY[dir];
    if (!r.at_safe(nx, ny)) return false;
    if (DX[dir] != 0 && DY[dir] != 0 &&
        (r.at_safe(nx, y) || r.at_safe(x, ny)))
        return false;
    return true;
}

} // namespace

BitRaster skeletonize(const BitRaster& raster) {
    BitRaster img = raster;
    const int w = img.width(), h = img.height();
    std::vector<std::pair<int, int>> to_clear;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int sub = 0; sub < 2; ++sub) {
            to_clear.clear();
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    if (!img.at(x, y)) continue;
                    int n = img.at_safe(x, y - 1), ne = img.at_safe(x + 1, y - 1);
                    int e = img.at_safe(x + 1, y), se = img.at_safe(x + 1, y + 1);
                    int s = img.at_safe(x, y + 1), sw = img.at_safe(x - 1, y + 1);
                    int wv = img.at_safe(x - 1, y), nw = img.at_safe(x - 1, y - 1);
                    // C counts foreground arcs around p; deleting is safe only
                    // when there is exactly one.
                    int c = ((!n) & (ne | e)) + ((!e) & (se | s)) +
                            ((!s) & (sw | wv)) + ((!wv) & (nw | n));
                    int n1 = (nw | n) + (ne | e) + (se | s) + (sw | wv);
                    int n2 = (n | ne) + (e | se) + (s | sw) + (wv | nw);
                    int nm = std::min(n1, n2);
                    int m = sub == 0 ? ((s | sw | (!nw)) & wv) : ((n | ne | (!se)) & e);
                    if (c == 1 && nm >= 2 && nm <= 3 && m == 0) to_clear.push_back({x, y});
                }
            }
            for (auto [cx, cy] : to_clear) img.set(cx, cy, 0);
            if (!to_clear.empty()) changed = true;
        }
    }
    return img;
}

int reduced_degree(const BitRaster& skeleton, int x, int y) {
    int deg = 0;
    for (int d = 0; d < 8; ++d)
        if (reduced_adjacent(skeleton, x, y, d)) ++deg;
    return deg;
}

std::vector<std::pair<int, int>> branch_points(const BitRaster& skeleton) {
    std::vector<std::pair<int, int>> out;
    for (int y = 0; y < skeleton.height(); ++y)
        for (int x = 0; x < skeleton.width(); ++x)
            if (skeleton.at(x, y) && reduced_degree(skeleton, x, y) >= 3) out.push_back({x, y});
    return out;
}

double total_skeleton_length(const BitRaster& skeleton) {
    double total = 0.0;
    // Forward half of the neighborhood only, so each edge is counted once.
    for (int y = 0; y < skeleton.height(); ++y)
        for (int x = 0; x < skeleton.width(); ++x) {
            if (!skeleton.at(x, y)) continue;
            for (int d = 0; d < 4; ++d)
                if (reduced_adjacent(skeleton, x, y, d)) total += STEP_W[d];
        }
    return total;
}

namespace {

// Walks from (sx,sy) along dir0, through degree-2 pixels, until it reaches a
// non-path pixel or returns to the start. Marks traversed edges in `used`
// (bit k of used[pixel] = direction k consumed).
CenterlineSegment trace(const BitRaster& skel, const std::vector<int>& degree,
                        std::vector<uint8_t>& used, int sx, int sy, int dir0) {
    const int w = skel.width();
    auto idx = [w](int x, int y) { return static_cast<size_t>(y) * w + x; };

    CenterlineSegment seg;
    seg.points.push_back({double(sx), double(sy)});
    int x = sx, y = sy, dir = dir0;
    while (true) {
        used[idx(x, y)] |= static_cast<uint8_t>(1u << dir);
        seg.arc_length += STEP_W[dir];
        x += DX[dir];
        y += DY[dir];
        used[idx(x, y)] |= static_cast<uint8_t>(1u << ((dir + 4) % 8));
        seg.points.push_back({double(x), double(y)});
        if (degree[idx(x, y)] != 2) break;
        if (x == sx && y == sy) break; // pure cycle closed
        int next = -1;
        for (int d = 0; d < 8; ++d) {
            if (!reduced_adjacent(skel, x, y, d)) continue;
            if (used[idx(x, y)] & (1u << d)) continue;
            next = d;
            break;
        }
        if (next < 0) break; // both edges of this path pixel consumed
        dir = next;
    }
    auto [fx, fy] = seg.points.front();
    auto [lx, ly] = seg.points.back();
    seg.chord_length = std::hypot(lx - fx, ly - fy);
    seg.closed = (fx == lx && fy == ly);
    return seg;
}

} // namespace

CenterlineSegment make_segment(std::vector<std::pair<double, double>> pts) {
    CenterlineSegment seg;
    seg.points = std::move(pts);
    for (size_t i = 1; i < seg.points.size(); ++i)
        seg.arc_length += std::hypot(seg.points[i].first - seg.points[i - 1].first,
                                     seg.points[i].second - seg.points[i - 1].second);
    if (!seg.points.empty()) {
        auto [fx, fy] = seg.points.front();
        auto [lx, ly] = seg.points.back();
        seg.chord_length = std::hypot(lx - fx, ly - fy);
        seg.closed = seg.points.size() > 1 && fx == lx && fy == ly;
    }
    return seg;
}

std::vector<CenterlineSegment> decompose_segments(const BitRaster& skeleton, double min_length) {
    const int w = skeleton.width(), h = skeleton.height();
    std::vector<int> degree(static_cast<size_t>(w) * h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (skeleton.at(x, y)) degree[static_cast<size_t>(y) * w + x] = reduced_degree(skeleton, x, y);

    std::vector<uint8_t> used(static_cast<size_t>(w) * h, 0);
    std::vector<CenterlineSegment> segments;
    auto keep = [&](CenterlineSegment&& seg) {
        if (seg.arc_length >= min_length) segments.push_back(std::move(seg));
    };

    // Paths: start at every endpoint/junction pixel, follow each unused edge.
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            size_t i = static_cast<size_t>(y) * w + x;
            if (!skeleton.at(x, y) || degree[i] == 2 || degree[i] == 0) continue;
            for (int d = 0; d < 8; ++d) {
                if (!reduced_adjacent(skeleton, x, y, d)) continue;
                if (used[i] & (1u << d)) continue;
                keep(trace(skeleton, degree, used, x, y, d));
            }
        }

    // Leftover degree-2 pixels with unused edges lie on junction-free loops.
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            size_t i = static_cast<size_t>(y) * w + x;
            if (!skeleton.at(x, y) || degree[i] != 2) continue;
            for (int d = 0; d < 8; ++d) {
                if (!reduced_adjacent(skeleton, x, y, d)) continue;
                if (used[i] & (1u << d)) continue;
                keep(trace(skeleton, degree, used, x, y, d));
            }
        }

    return segments;
}

} // namespace oculolipid::morpho
