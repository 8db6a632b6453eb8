#include "oculolipid/curvature.hpp"

#include <algorithm>
#include <cmath>

#include "oculolipid/errors.hpp"

namespace oculolipid::morpho {

namespace {

// Signed-curvature magnitudes below this are treated as straight when looking
// for inflections, so float noise on straight runs cannot split a segment.
constexpr double kSignDeadband = 1e-12;

// Samples the value of series v (indices 0..n-1) at a possibly out-of-range
// index using point reflection about the nearest end; linear in i, so a
// straight polyline extends to a straight line.
double reflect_at(const std::vector<double>& v, long i) {
    long n = static_cast<long>(v.size());
    if (i < 0) return 2.0 * v[0] - v[-i];
    if (i >= n) return 2.0 * v[n - 1] - v[2 * (n - 1) - i];
    return v[i];
}

std::vector<double> gaussian_smooth(const std::vector<double>& v, double sigma) {
    if (sigma <= 0.0) return v;
    long radius = static_cast<long>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
    double norm = 0.0;
    for (long j = -radius; j <= radius; ++j) {
        double wgt = std::exp(-0.5 * double(j) * double(j) / (sigma * sigma));
        kernel[static_cast<size_t>(j + radius)] = wgt;
        norm += wgt;
    }
    for (double& k : kernel) k /= norm;

    std::vector<double> out(v.size());
    for (long i = 0; i < static_cast<long>(v.size()); ++i) {
        double acc = 0.0;
        for (long j = -radius; j <= radius; ++j)
            acc += kernel[static_cast<size_t>(j + radius)] * reflect_at(v, i + j);
        out[static_cast<size_t>(i)] = acc;
    }
    return out;
}

double polyline_arc(const std::vector<double>& x, const std::vector<double>& y, size_t a, size_t b) {
    double s = 0.0;
    for (size_t i = a + 1; i <= b; ++i) s += std::hypot(x[i] - x[i - 1], y[i] - y[i - 1]);
    return s;
}

} // namespace

ResampledPath resample_and_smooth(const CenterlineSegment& seg, double sigma_samples) {
    const auto& pts = seg.points;
    if (pts.size() < 2) throw TooShortForCurvature("segment has fewer than 2 points");

    std::vector<double> cum(pts.size(), 0.0);
    for (size_t i = 1; i < pts.size(); ++i)
        cum[i] = cum[i - 1] + std::hypot(pts[i].first - pts[i - 1].first,
                                         pts[i].second - pts[i - 1].second);
    double total = cum.back();
    if (!(total > 0.0)) throw TooShortForCurvature("segment has zero length");

    long n = std::max<long>(2, std::lround(total) + 1);
    long radius = sigma_samples > 0.0 ? static_cast<long>(std::ceil(3.0 * sigma_samples)) : 0;
    if (n < std::max<long>(7, radius + 1))
        throw TooShortForCurvature("fewer than required samples after resampling");

    ResampledPath path;
    path.spacing = total / double(n - 1);
    path.x.resize(static_cast<size_t>(n));
    path.y.resize(static_cast<size_t>(n));
    size_t seg_i = 0;
    for (long k = 0; k < n; ++k) {
        double target = path.spacing * double(k);
        while (seg_i + 2 < cum.size() && cum[seg_i + 1] < target) ++seg_i;
        double span = cum[seg_i + 1] - cum[seg_i];
        double t = span > 0.0 ? (target - cum[seg_i]) / span : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        path.x[static_cast<size_t>(k)] =
            pts[seg_i].first + t * (pts[seg_i + 1].first - pts[seg_i].first);
        path.y[static_cast<size_t>(k)] =
            pts[seg_i].second + t * (pts[seg_i + 1].second - pts[seg_i].second);
    }

    path.x = gaussian_smooth(path.x, sigma_samples);
    path.y = gaussian_smooth(path.y, sigma_samples);

    // Central differences with the same point-reflection ghosting; endpoint
    // second derivatives vanish under it, which is the safe choice there.
    path.kappa.resize(static_cast<size_t>(n));
    double d = path.spacing;
    for (long i = 0; i < n; ++i) {
        double xm = reflect_at(path.x, i - 1), xp = reflect_at(path.x, i + 1);
        double ym = reflect_at(path.y, i - 1), yp = reflect_at(path.y, i + 1);
        double xc = path.x[static_cast<size_t>(i)], yc = path.y[static_cast<size_t>(i)];
        double x1 = (xp - xm) / (2.0 * d), y1 = (yp - ym) / (2.0 * d);
        double x2 = (xp - 2.0 * xc + xm) / (d * d), y2 = (yp - 2.0 * yc + ym) / (d * d);
        double speed_sq = x1 * x1 + y1 * y1;
        path.kappa[static_cast<size_t>(i)] =
            speed_sq > 0.0 ? (x1 * y2 - y1 * x2) / std::pow(speed_sq, 1.5) : 0.0;
    }
    return path;
}

double distance_tortuosity(const CenterlineSegment& seg) {
    if (seg.closed || !(seg.chord_length > 0.0))
        throw ZeroChord("segment endpoints coincide");
    return seg.arc_length / seg.chord_length;
}

double squared_curvature_tortuosity(const CenterlineSegment& seg, double sigma_samples,
                                    bool normalize) {
    ResampledPath path = resample_and_smooth(seg, sigma_samples);
    double integral = 0.0;
    for (size_t i = 1; i < path.kappa.size(); ++i) {
        double a = path.kappa[i - 1], b = path.kappa[i];
        integral += 0.5 * (a * a + b * b) * path.spacing;
    }
    return normalize ? integral / seg.arc_length : integral;
}

double tortuosity_density(const CenterlineSegment& seg, double sigma_samples,
                          GrisanVariant variant) {
    ResampledPath path = resample_and_smooth(seg, sigma_samples);
    const size_t n = path.kappa.size();

    // Run boundaries where the (deadbanded) curvature sign flips. Zeros extend
    // the current run, so straight stretches never split a piece.
    std::vector<size_t> breaks;
    int current = 0;
    for (size_t i = 0; i < n; ++i) {
        double k = path.kappa[i];
        int sign = (k > kSignDeadband) - (k < -kSignDeadband);
        if (sign == 0) continue;
        if (current != 0 && sign != current) breaks.push_back(i);
        current = sign;
    }

    size_t pieces = breaks.size() + 1;
    if (pieces == 1) return 0.0;

    double total_arc = polyline_arc(path.x, path.y, 0, n - 1);
    if (!(total_arc > 0.0)) return 0.0;

    double excess = 0.0;
    size_t start = 0;
    auto add_piece = [&](size_t a, size_t b) {
        double chord = std::hypot(path.x[b] - path.x[a], path.y[b] - path.y[a]);
        if (chord > 0.0) excess += polyline_arc(path.x, path.y, a, b) / chord - 1.0;
    };
    for (size_t b : breaks) {
        add_piece(start, b);
        start = b;
    }
    add_piece(start, n - 1);

    double np = double(pieces);
    double coeff = variant == GrisanVariant::NRatio ? (np - 1.0) / np / total_arc
                                                    : (np - 1.0) / total_arc;
    return coeff * excess;
}

} // namespace oculolipid::morpho
