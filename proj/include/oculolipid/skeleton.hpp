#pragma once

#include <utility>
#include <vector>

#include "oculolipid/raster.hpp"

namespace oculolipid::morpho {

// Two-subiteration morphological thinning (Guo-Hall). Produces an 8-connected
// unit-width skeleton that is a subset of the input foreground and preserves
// the connected-component count.
BitRaster skeletonize(const BitRaster& raster);

struct CenterlineSegment {
    // Skeleton tracing yields integer pixel centers (consecutive entries
    // 8-adjacent); synthetic polylines may carry fractional coordinates.
    std::vector<std::pair<double, double>> points;
    double arc_length = 0.0;   // axial step 1, diagonal sqrt(2) on skeletons
    double chord_length = 0.0; // endpoint-to-endpoint Euclidean
    bool closed = false;       // loop: first point == last point
};

// Builds a segment from an explicit polyline: arc length by summed Euclidean
// steps, chord from the endpoints.
CenterlineSegment make_segment(std::vector<std::pair<double, double>> pts);

// Adjacency on the skeleton with redundant diagonals removed: a diagonal link
// is dropped whenever one of the two 4-neighbors shared by its endpoints is
// itself foreground (the path through that pixel already exists). Degrees on
// this reduced graph classify pixels: endpoint (1), path (2), junction (>=3).
int reduced_degree(const BitRaster& skeleton, int x, int y);
std::vector<std::pair<int, int>> branch_points(const BitRaster& skeleton);

// Maximal skeleton paths between endpoint/junction pixels. Loops that touch no
// junction come back as closed segments. Segments with arc_length < min_length
// are dropped; isolated single pixels produce no segment.
std::vector<CenterlineSegment> decompose_segments(const BitRaster& skeleton, double min_length);

// Sum of reduced-graph edge weights. Equals the arc-length total of a
// min_length = 0 decomposition; used as the centerline length for width.
double total_skeleton_length(const BitRaster& skeleton);

} // namespace oculolipid::morpho
