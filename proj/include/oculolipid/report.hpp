#pragma once

#include <string>
#include <vector>

#include "oculolipid/cohort.hpp"
#include "oculolipid/pipeline.hpp"
#include "oculolipid/stats.hpp"

namespace oculolipid::report {

// One figure: SVG markup plus a JSON sidecar carrying exactly the numbers the
// drawing used. Both are deterministic byte streams for fixed inputs.
struct Figure {
    std::string name; // file stem, e.g. "bubble"
    std::string svg;
    std::string data_json;
};

// Dot grid (rows = lipids, columns = fundus features): radius is a linear map
// of |r| between the configured bounds, asterisks mark FDR-significant cells,
// fill encodes the sign (negative red, positive blue). Absent pairs stay
// blank and are listed under "missing" in the sidecar.
Figure render_bubble(const stats::AdjustedResultSet& results,
                     const std::vector<std::string>& fundus_list,
                     const std::vector<std::string>& lipid_list, double min_radius = 1.5,
                     double max_radius = 9.0);

// One row per ranked association: point at r, whisker across the CI, zero
// reference line; rows sorted by |r| descending.
Figure render_forest(std::vector<pipeline::RankedAssociation> top);

// Two-column bipartite layout, fundus left / lipids right, node order as in
// the network (degree desc, then name); edge color encodes sign, lipid fill
// encodes subclass. An empty network renders an annotated placeholder.
Figure render_network(const pipeline::AssociationNetwork& net);

// Bar per fundus feature counting its significant lipid partners, descending.
Figure render_count_bars(const stats::AdjustedResultSet& results);

// Per-feature age-trend percentile band (10/50/90th in 5-year bins, bins
// under 20 rows merged rightward) and sex-split boxes (quartiles, 1.5 IQR
// whiskers), annotated with the age-association r/CI/adjusted p.
Figure render_demographic_panels(const pipeline::DemographicProfile& profile,
                                 const cohort::MergedCohort& cohort, bool with_kde = false);

// Linear-interpolation quantile between order statistics (h = (n-1)p).
double quantile_linear(std::vector<double> values, double p);

// Gaussian KDE with Silverman's rule-of-thumb bandwidth evaluated on grid.
std::vector<double> gaussian_kde(const std::vector<double>& sample,
                                 const std::vector<double>& grid);

// Cohort-characteristics table (age + fundus features), mean/SD/n stratified
// by sex and overall.
std::string summary_table_csv(const cohort::MergedCohort& cohort);

} // namespace oculolipid::report
