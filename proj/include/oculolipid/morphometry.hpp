#pragma once

#include <array>
#include <string>
#include <vector>

#include "oculolipid/curvature.hpp"
#include "oculolipid/raster.hpp"

namespace oculolipid::morpho {

struct MorphometryConfig {
    double min_segment_length_px = 10.0; // segments shorter than this are noise
    double gaussian_sigma_samples = 2.0; // curvature pre-smoothing
    int box_ladder_max_divisor = 4;      // largest box = min(W,H)/divisor
    double width_scale_factor = 1.0;     // multiplier on area/centerline-length
    GrisanVariant grisan_variant = GrisanVariant::NRatio;
    bool hart_raw_integral = false;      // skip the /L normalization if set
};

// Canonical per-participant feature vector: three class blocks (artery_,
// vein_, unprefixed = combined), six metrics each, fixed order.
inline constexpr size_t kFeatureCount = 18;
const std::vector<std::string>& feature_names();
int feature_index(const std::string& name); // -1 when unknown

struct MorphometricFeatureSet {
    std::string participant_id;
    std::string eye; // "L", "R", or "bilateral-averaged"
    std::array<double, kFeatureCount> values{};
    std::array<bool, kFeatureCount> valid{};
    std::vector<std::string> notes; // class failures, skipped-segment tallies
};

// Foreground fraction of the class raster; 0 for an empty raster.
double vessel_density(const SegmentationMask& mask, VesselClass cls);

// Foreground pixel count over total centerline arc length, times scale.
double average_width(const SegmentationMask& mask, VesselClass cls, double scale = 1.0);

// Minkowski-Bouligand box counting: OLS slope of log N(eps) on log(1/eps)
// over the dyadic ladder eps = 2,4,... up to min(W,H)/ladder_max_divisor.
double fractal_dimension(const SegmentationMask& mask, VesselClass cls,
                         int ladder_max_divisor = 4);

// All 18 metrics for one eye. A failing vessel class invalidates only its own
// six features; tortuosity metrics aggregate per-segment values by an
// arc-length-weighted mean, with degenerate segments tallied in notes.
MorphometricFeatureSet extract_features(const SegmentationMask& mask,
                                        const MorphometryConfig& cfg);

// Fieldwise mean over the available eyes (a field counts as available when
// that eye computed it); pass nullptr for a missing eye.
MorphometricFeatureSet average_bilateral(const MorphometricFeatureSet* left,
                                         const MorphometricFeatureSet* right);

} // namespace oculolipid::morpho
