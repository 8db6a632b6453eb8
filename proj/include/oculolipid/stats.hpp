#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace oculolipid::stats {

struct CorrelationResult {
    std::string x_name = "x";
    std::string y_name = "y";
    std::vector<std::string> covariate_names;
    double r = 0.0;
    double p = 1.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    size_t n_used = 0;
    long df = 0; // n_used - 2 - |covariates|
};

// Product-moment correlation with a two-sided t test (df = n-2) and Fisher-z
// CI. Pairs with a missing member are dropped first. p never underflows to 0:
// the floor is the smallest positive normal double.
CorrelationResult pearson(const std::vector<double>& x, const std::vector<double>& y,
                          const std::string& x_name = "x", const std::string& y_name = "y",
                          double ci_level = 0.95);

// Least-squares residuals of y on [intercept | covariate columns]; residuals
// are orthogonal to every design column. Throws RankDeficient when the design
// loses rank on the retained rows.
std::vector<double> ols_residuals(const std::vector<double>& y,
                                  const std::vector<std::vector<double>>& covariate_cols);

// Correlation of the two residual vectors after adjusting both x and y for
// the covariates; inference uses df = n - 2 - k and a Fisher CI with the same
// k. Rows missing x, y, or any covariate are dropped for this test only.
CorrelationResult partial_correlation(const std::vector<double>& x, const std::vector<double>& y,
                                      const std::vector<std::vector<double>>& covariate_cols,
                                      const std::string& x_name = "x",
                                      const std::string& y_name = "y",
                                      const std::vector<std::string>& covariate_names = {},
                                      double ci_level = 0.95);

// z = atanh(r) +/- z_{(1+level)/2} / sqrt(n - 3 - k), mapped back with tanh.
std::pair<double, double> fisher_ci(double r, size_t n, size_t k, double level = 0.95);

// Inference for residual vectors that were already adjusted for k covariates
// elsewhere (complete-data sweep fast path); identical arithmetic to
// partial_correlation when no rows were dropped.
CorrelationResult correlation_from_residuals(const std::vector<double>& ex,
                                             const std::vector<double>& ey, size_t k,
                                             const std::string& x_name, const std::string& y_name,
                                             const std::vector<std::string>& covariate_names,
                                             double ci_level = 0.95);

struct FdrAdjustment {
    std::vector<double> adjusted;
    std::vector<bool> significant; // adjusted[i] < q
    double q = 0.05;
};

// Benjamini-Hochberg step-up: sort ascending (stable on ties by input index),
// adjusted_(i) = min over j >= i of m * p_(j) / j, clipped at 1.
FdrAdjustment bh_fdr(const std::vector<double>& p_values, double q = 0.05);

struct AdjustedResultSet {
    std::vector<CorrelationResult> results;
    std::vector<double> p_adjusted;    // aligned with results
    std::vector<bool> significant;     // p_adjusted < q
    double q = 0.05;
    std::string fdr_scope = "global";  // or "per_feature"
    std::vector<std::string> skipped;  // degenerate pairs with reasons
};

// Names passing |r| >= r_min AND adjusted p < q, in input order. The feature
// name is taken from y_name when every x_name is the same probe (e.g. age),
// from x_name otherwise.
std::vector<std::string> screen_features(const std::vector<CorrelationResult>& results,
                                         const std::vector<double>& p_adjusted,
                                         double r_min = 0.1, double q = 0.05);

struct ClusterMerge {
    int left = 0;       // cluster ids: 0..n-1 are leaves, n+step are merges
    int right = 0;
    double height = 0.0; // 1 - |r| average-linkage distance
    int size = 0;
};

struct FeatureClusterTree {
    std::vector<std::string> names;
    std::vector<ClusterMerge> merges;           // heights nondecreasing
    std::vector<std::vector<int>> clusters;     // leaf indices at the cut
    std::vector<std::string> representatives;   // one per cluster
    double cut_height = 0.5;
};

// Agglomerative average-linkage clustering on distance 1 - |r|. Clusters are
// the groups connected by merges with height <= cut_height; each cluster's
// representative is the member with the highest mean |r| to the rest of it.
FeatureClusterTree cluster_features(const std::vector<std::string>& names,
                                    const std::vector<std::vector<double>>& corr,
                                    double cut_height = 0.5);

// CSV export (fundus_feature, lipid_feature, r, CI_lower, CI_upper, P-value,
// P-adjusted, n), one row per result in set order.
std::string associations_csv(const AdjustedResultSet& set);

} // namespace oculolipid::stats
