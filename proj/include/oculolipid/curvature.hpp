#pragma once

#include <vector>

#include "oculolipid/skeleton.hpp"

namespace oculolipid::morpho {

enum class GrisanVariant {
    NRatio,    // ((N-1)/N) * (1/L_c) * sum(L_ci/L_xi - 1)
    NMinusOne, // ((N-1)/L_c) * sum(L_ci/L_xi - 1)
};

// Segment resampled to ~unit arc-length spacing, Gaussian-smoothed, with
// signed curvature per sample. Shared scaffolding for the curvature metrics.
struct ResampledPath {
    std::vector<double> x, y;  // smoothed coordinates
    std::vector<double> kappa; // signed curvature, cross/speed^3
    double spacing = 1.0;      // actual sample spacing along the raw polyline
};

// Linear-interpolation resampling to n = round(arc_length)+1 uniform samples,
// Gaussian smoothing (sigma in samples, truncated at 3*sigma, antisymmetric
// point-reflection at the ends so straight runs stay exactly straight), then
// central-difference derivatives. Throws TooShortForCurvature when fewer than
// max(7, kernel radius + 1) samples result.
ResampledPath resample_and_smooth(const CenterlineSegment& seg, double sigma_samples);

// arc/chord. Throws ZeroChord for closed or degenerate-chord segments.
double distance_tortuosity(const CenterlineSegment& seg);

// Integral of squared curvature along the segment; divided by arc length
// unless normalize is false.
double squared_curvature_tortuosity(const CenterlineSegment& seg, double sigma_samples,
                                    bool normalize = true);

// Splits the segment at curvature sign changes into N constant-sign pieces and
// scores the summed excess arc/chord ratio; N = 1 gives 0.
double tortuosity_density(const CenterlineSegment& seg, double sigma_samples,
                          GrisanVariant variant = GrisanVariant::NRatio);

} // namespace oculolipid::morpho
