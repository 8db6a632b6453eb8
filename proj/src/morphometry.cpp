#include "oculolipid/morphometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oculolipid/errors.hpp"
#include "oculolipid/skeleton.hpp"

namespace oculolipid::morpho {

namespace {

const std::vector<std::string> kMetricNames = {
    "average_width",       "vessel_density",
    "fractal_dimension",   "distance_tortuosity",
    "squared_curvature_tortuosity", "tortuosity_density",
};
const std::vector<std::string> kClassPrefixes = {"artery_", "vein_", ""};
const VesselClass kClasses[3] = {VesselClass::Artery, VesselClass::Vein, VesselClass::Combined};

std::vector<std::string> build_feature_names() {
    std::vector<std::string> names;
    for (const auto& prefix : kClassPrefixes)
        for (const auto& metric : kMetricNames) names.push_back(prefix + metric);
    return names;
}

} // namespace

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = build_feature_names();
    return names;
}

int feature_index(const std::string& name) {
    const auto& names = feature_names();
    auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

double vessel_density(const SegmentationMask& mask, VesselClass cls) {
    BitRaster raster = mask.class_raster(cls);
    double total = double(raster.width()) * double(raster.height());
    return total > 0.0 ? double(raster.count()) / total : 0.0;
}

double average_width(const SegmentationMask& mask, VesselClass cls, double scale) {
    BitRaster raster = mask.class_raster(cls);
    size_t area = raster.count();
    if (area == 0) throw EmptyVesselClass(std::string(vessel_class_name(cls)) + " raster is empty");
    double centerline = total_skeleton_length(skeletonize(raster));
    if (!(centerline > 0.0))
        throw EmptyVesselClass(std::string(vessel_class_name(cls)) + " skeleton has zero length");
    return double(area) / centerline * scale;
}

namespace {

double box_counting_dimension(const BitRaster& raster, int ladder_max_divisor) {
    if (raster.count() == 0) throw EmptyVesselClass("raster is empty");
    int max_eps = std::min(raster.width(), raster.height()) / std::max(1, ladder_max_divisor);

    std::vector<double> log_inv_eps, log_n;
    for (int eps = 2; eps <= max_eps; eps *= 2) {
        int gw = (raster.width() + eps - 1) / eps;
        int gh = (raster.height() + eps - 1) / eps;
        std::vector<uint8_t> occupied(static_cast<size_t>(gw) * gh, 0);
        for (int y = 0; y < raster.height(); ++y)
            for (int x = 0; x < raster.width(); ++x)
                if (raster.at(x, y)) occupied[static_cast<size_t>(y / eps) * gw + x / eps] = 1;
        size_t n = 0;
        for (uint8_t o : occupied) n += o;
        log_inv_eps.push_back(-std::log(double(eps)));
        log_n.push_back(std::log(double(n)));
    }
    if (log_n.size() < 3)
        throw DegenerateLadder("fewer than 3 box sizes fit the raster");

    double mu = 0.0, mv = 0.0;
    size_t m = log_n.size();
    for (size_t i = 0; i < m; ++i) {
        mu += log_inv_eps[i];
        mv += log_n[i];
    }
    mu /= double(m);
    mv /= double(m);
    double sxy = 0.0, sxx = 0.0;
    for (size_t i = 0; i < m; ++i) {
        sxy += (log_inv_eps[i] - mu) * (log_n[i] - mv);
        sxx += (log_inv_eps[i] - mu) * (log_inv_eps[i] - mu);
    }
    return sxy / sxx;
}

} // namespace

double fractal_dimension(const SegmentationMask& mask, VesselClass cls, int ladder_max_divisor) {
    return box_counting_dimension(mask.class_raster(cls), ladder_max_divisor);
}

MorphometricFeatureSet extract_features(const SegmentationMask& mask,
                                        const MorphometryConfig& cfg) {
    if (!mask.valid_dims()) throw Error(ErrorKind::Data, "mask rasters disagree on dimensions");

    MorphometricFeatureSet out;
    out.participant_id = mask.participant_id;
    out.eye = eye_name(mask.eye);
    out.values.fill(std::numeric_limits<double>::quiet_NaN());
    out.valid.fill(false);

    for (int ci = 0; ci < 3; ++ci) {
        VesselClass cls = kClasses[ci];
        const std::string cls_name = vessel_class_name(cls);
        const size_t base = static_cast<size_t>(ci) * 6;
        auto put = [&](size_t metric, double v) {
            out.values[base + metric] = v;
            out.valid[base + metric] = true;
        };

        BitRaster raster = mask.class_raster(cls);
        if (raster.count() == 0) {
            out.notes.push_back(cls_name + ": empty raster, class skipped");
            continue;
        }

        try {
            put(1, vessel_density(mask, cls));
            put(0, average_width(mask, cls, cfg.width_scale_factor));
            put(2, box_counting_dimension(raster, cfg.box_ladder_max_divisor));
        } catch (const Error& e) {
            // Whole-class geometry failure: none of the six is trustworthy.
            for (size_t m = 0; m < 6; ++m) out.valid[base + m] = false;
            out.notes.push_back(cls_name + ": " + e.what());
            continue;
        }

        BitRaster skeleton = skeletonize(raster);
        auto segments = decompose_segments(skeleton, cfg.min_segment_length_px);

        double dist_num = 0.0, dist_den = 0.0;
        double hart_num = 0.0, hart_den = 0.0;
        double grisan_num = 0.0, grisan_den = 0.0;
        size_t closed_skipped = 0, short_skipped = 0;
        for (const auto& seg : segments) {
            double w = seg.arc_length;
            try {
                dist_num += w * distance_tortuosity(seg);
                dist_den += w;
            } catch (const ZeroChord&) {
                ++closed_skipped;
            }
            try {
                hart_num += w * squared_curvature_tortuosity(seg, cfg.gaussian_sigma_samples,
                                                             !cfg.hart_raw_integral);
                hart_den += w;
                grisan_num +=
                    w * tortuosity_density(seg, cfg.gaussian_sigma_samples, cfg.grisan_variant);
                grisan_den += w;
            } catch (const TooShortForCurvature&) {
                ++short_skipped;
            }
        }
        if (dist_den > 0.0) put(3, dist_num / dist_den);
        if (hart_den > 0.0) {
            put(4, hart_num / hart_den);
            put(5, grisan_num / grisan_den);
        }
        if (dist_den == 0.0 || hart_den == 0.0)
            out.notes.push_back(cls_name + ": no usable segments for tortuosity");
        if (closed_skipped)
            out.notes.push_back(cls_name + ": " + std::to_string(closed_skipped) +
                                " closed-loop segment(s) excluded from distance tortuosity");
        if (short_skipped)
            out.notes.push_back(cls_name + ": " + std::to_string(short_skipped) +
                                " segment(s) too short for curvature metrics");
    }
    return out;
}

MorphometricFeatureSet average_bilateral(const MorphometricFeatureSet* left,
                                         const MorphometricFeatureSet* right) {
    if (!left && !right) throw NoEyesAvailable("no eye feature sets supplied");
    if (left && right && left->participant_id != right->participant_id)
        throw Error(ErrorKind::Data, "bilateral average across different participants: " +
                                         left->participant_id + " vs " + right->participant_id);

    const MorphometricFeatureSet* any = left ? left : right;
    MorphometricFeatureSet out;
    out.participant_id = any->participant_id;
    out.eye = "bilateral-averaged";
    out.values.fill(std::numeric_limits<double>::quiet_NaN());
    out.valid.fill(false);

    for (size_t i = 0; i < kFeatureCount; ++i) {
        double sum = 0.0;
        int n = 0;
        for (const auto* eye : {left, right}) {
            if (eye && eye->valid[i]) {
                sum += eye->values[i];
                ++n;
            }
        }
        if (n > 0) {
            out.values[i] = sum / double(n);
            out.valid[i] = true;
        }
    }
    for (const auto* eye : {left, right})
        if (eye)
            for (const auto& note : eye->notes) out.notes.push_back(eye->eye + ": " + note);
    return out;
}

} // namespace oculolipid::morpho
