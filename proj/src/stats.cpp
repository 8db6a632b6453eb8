#include "oculolipid/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "oculolipid/csv.hpp"
#include "oculolipid/errors.hpp"

namespace oculolipid::stats {

namespace {

constexpr double kSmallestP = std::numeric_limits<double>::min();

bool finite(double v) { return std::isfinite(v); }

bool constant_column(const std::vector<double>& v) {
    for (double w : v)
        if (w != v.front()) return false;
    return !v.empty();
}

// Correlation of two mean-centered (or raw) vectors of equal length.
double raw_pearson(const std::vector<double>& x, const std::vector<double>& y,
                   const std::string& x_name, const std::string& y_name) {
    size_t n = x.size();
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / double(n);
    double my = std::accumulate(y.begin(), y.end(), 0.0) / double(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0) throw ConstantInput(x_name);
    if (syy <= 0.0) throw ConstantInput(y_name);
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Two-sided p and CI for an r computed on n rows with k covariates removed.
void attach_inference(CorrelationResult& res, double ci_level) {
    size_t k = res.covariate_names.size();
    res.df = static_cast<long>(res.n_used) - 2 - static_cast<long>(k);
    if (std::abs(res.r) >= 1.0) {
        res.p = kSmallestP;
        res.ci_lower = res.ci_upper = res.r;
        return;
    }
    double t = res.r * std::sqrt(double(res.df) / (1.0 - res.r * res.r));
    boost::math::students_t_distribution<double> dist(double(res.df));
    double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    res.p = std::clamp(p, kSmallestP, 1.0);
    auto [lo, hi] = fisher_ci(res.r, res.n_used, k, ci_level);
    res.ci_lower = lo;
    res.ci_upper = hi;
}

} // namespace

CorrelationResult pearson(const std::vector<double>& x, const std::vector<double>& y,
                          const std::string& x_name, const std::string& y_name,
                          double ci_level) {
    if (x.size() != y.size())
        throw Error(ErrorKind::Internal, "pearson: length mismatch");
    std::vector<double> xs, ys;
    xs.reserve(x.size());
    ys.reserve(y.size());
    for (size_t i = 0; i < x.size(); ++i)
        if (finite(x[i]) && finite(y[i])) {
            xs.push_back(x[i]);
            ys.push_back(y[i]);
        }
    if (xs.size() < 4)
        throw InsufficientSamples(x_name + " vs " + y_name + ": n=" +
                                  std::to_string(xs.size()) + ", required 4");

    CorrelationResult res;
    res.x_name = x_name;
    res.y_name = y_name;
    res.n_used = xs.size();
    res.r = raw_pearson(xs, ys, x_name, y_name);
    attach_inference(res, ci_level);
    return res;
}

std::vector<double> ols_residuals(const std::vector<double>& y,
                                  const std::vector<std::vector<double>>& covariate_cols) {
    const size_t n = y.size();
    const size_t k = covariate_cols.size();
    for (const auto& col : covariate_cols)
        if (col.size() != n) throw Error(ErrorKind::Internal, "ols_residuals: ragged covariates");

    Eigen::MatrixXd design(n, k + 1);
    Eigen::VectorXd yv(n);
    for (size_t i = 0; i < n; ++i) {
        design(i, 0) = 1.0;
        for (size_t j = 0; j < k; ++j) design(i, j + 1) = covariate_cols[j][i];
        yv(i) = y[i];
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < static_cast<Eigen::Index>(k + 1))
        throw RankDeficient("design matrix rank " + std::to_string(qr.rank()) + " < " +
                            std::to_string(k + 1));
    Eigen::VectorXd beta = qr.solve(yv);
    Eigen::VectorXd resid = yv - design * beta;
    return std::vector<double>(resid.data(), resid.data() + n);
}

CorrelationResult partial_correlation(const std::vector<double>& x, const std::vector<double>& y,
                                      const std::vector<std::vector<double>>& covariate_cols,
                                      const std::string& x_name, const std::string& y_name,
                                      const std::vector<std::string>& covariate_names,
                                      double ci_level) {
    const size_t k = covariate_cols.size();
    if (x.size() != y.size())
        throw Error(ErrorKind::Internal, "partial_correlation: length mismatch");

    std::vector<size_t> rows;
    for (size_t i = 0; i < x.size(); ++i) {
        if (!finite(x[i]) || !finite(y[i])) continue;
        bool ok = true;
        for (const auto& col : covariate_cols)
            if (!finite(col[i])) {
                ok = false;
                break;
            }
        if (ok) rows.push_back(i);
    }
    if (rows.size() < k + 4)
        throw InsufficientSamples(x_name + " vs " + y_name + ": n=" +
                                  std::to_string(rows.size()) + ", required " +
                                  std::to_string(k + 4));

    std::vector<double> xs(rows.size()), ys(rows.size());
    std::vector<std::vector<double>> zs(k, std::vector<double>(rows.size()));
    for (size_t i = 0; i < rows.size(); ++i) {
        xs[i] = x[rows[i]];
        ys[i] = y[rows[i]];
        for (size_t j = 0; j < k; ++j) zs[j][i] = covariate_cols[j][rows[i]];
    }
    // catch degenerate inputs on the raw values: a constant column's residuals
    // are rounding noise, which would slip past the variance check below
    if (constant_column(xs)) throw ConstantInput(x_name);
    if (constant_column(ys)) throw ConstantInput(y_name);

    std::vector<double> ex = ols_residuals(xs, zs);
    std::vector<double> ey = ols_residuals(ys, zs);

    CorrelationResult res;
    res.x_name = x_name;
    res.y_name = y_name;
    res.covariate_names = covariate_names.empty()
                              ? std::vector<std::string>(k, "covariate")
                              : covariate_names;
    res.covariate_names.resize(k, "covariate");
    res.n_used = rows.size();
    res.r = raw_pearson(ex, ey, x_name + " (residual)", y_name + " (residual)");
    attach_inference(res, ci_level);
    return res;
}

CorrelationResult correlation_from_residuals(const std::vector<double>& ex,
                                             const std::vector<double>& ey, size_t k,
                                             const std::string& x_name, const std::string& y_name,
                                             const std::vector<std::string>& covariate_names,
                                             double ci_level) {
    if (ex.size() != ey.size())
        throw Error(ErrorKind::Internal, "correlation_from_residuals: length mismatch");
    if (ex.size() < k + 4)
        throw InsufficientSamples(x_name + " vs " + y_name + ": n=" + std::to_string(ex.size()) +
                                  ", required " + std::to_string(k + 4));
    CorrelationResult res;
    res.x_name = x_name;
    res.y_name = y_name;
    res.covariate_names = covariate_names;
    res.covariate_names.resize(k, "covariate");
    res.n_used = ex.size();
    res.r = raw_pearson(ex, ey, x_name + " (residual)", y_name + " (residual)");
    attach_inference(res, ci_level);
    return res;
}

std::pair<double, double> fisher_ci(double r, size_t n, size_t k, double level) {
    if (!(std::abs(r) < 1.0))
        throw Error(ErrorKind::Internal, "fisher_ci requires |r| < 1");
    if (n < k + 4)
        throw InsufficientSamples("fisher_ci: n=" + std::to_string(n) + ", required " +
                                  std::to_string(k + 4));
    double z = std::atanh(r);
    double se = 1.0 / std::sqrt(double(n - 3 - k));
    boost::math::normal_distribution<double> normal;
    double zq = boost::math::quantile(normal, (1.0 + level) / 2.0);
    return {std::tanh(z - zq * se), std::tanh(z + zq * se)};
}

FdrAdjustment bh_fdr(const std::vector<double>& p_values, double q) {
    const size_t m = p_values.size();
    for (size_t i = 0; i < m; ++i)
        if (!(p_values[i] >= 0.0 && p_values[i] <= 1.0))
            throw InvalidP("index " + std::to_string(i));

    std::vector<size_t> order(m);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (p_values[a] != p_values[b]) return p_values[a] < p_values[b];
        return a < b;
    });

    FdrAdjustment out;
    out.q = q;
    out.adjusted.assign(m, 0.0);
    out.significant.assign(m, false);
    double running = 1.0;
    for (size_t i = m; i-- > 0;) {
        double scaled = double(m) * p_values[order[i]] / double(i + 1);
        running = std::min(running, scaled);
        out.adjusted[order[i]] = std::min(running, 1.0);
    }
    for (size_t i = 0; i < m; ++i) out.significant[i] = out.adjusted[i] < q;
    return out;
}

std::vector<std::string> screen_features(const std::vector<CorrelationResult>& results,
                                         const std::vector<double>& p_adjusted, double r_min,
                                         double q) {
    bool common_x = !results.empty();
    for (const auto& res : results)
        if (res.x_name != results.front().x_name) {
            common_x = false;
            break;
        }
    std::vector<std::string> retained;
    for (size_t i = 0; i < results.size(); ++i)
        if (std::abs(results[i].r) >= r_min && p_adjusted[i] < q)
            retained.push_back(common_x ? results[i].y_name : results[i].x_name);
    return retained;
}

FeatureClusterTree cluster_features(const std::vector<std::string>& names,
                                    const std::vector<std::vector<double>>& corr,
                                    double cut_height) {
    const size_t n = names.size();
    if (corr.size() != n)
        throw Error(ErrorKind::Data, "correlation matrix does not match feature count");
    for (size_t i = 0; i < n; ++i) {
        if (corr[i].size() != n) throw Error(ErrorKind::Data, "correlation matrix not square");
        if (std::abs(corr[i][i] - 1.0) > 1e-9)
            throw Error(ErrorKind::Data, "correlation matrix diagonal must be 1");
        for (size_t j = 0; j < i; ++j)
            if (std::abs(corr[i][j] - corr[j][i]) > 1e-9)
                throw Error(ErrorKind::Data, "correlation matrix must be symmetric");
    }

    FeatureClusterTree tree;
    tree.names = names;
    tree.cut_height = cut_height;
    if (n == 0) return tree;

    struct Active {
        int id;
        std::vector<int> leaves;
    };
    std::vector<Active> act;
    act.reserve(n);
    for (size_t i = 0; i < n; ++i) act.push_back({int(i), {int(i)}});

    // Distances between active clusters, kept aligned with `act`.
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j)
            if (i != j) dist[i][j] = 1.0 - std::abs(corr[i][j]);

    int next_id = static_cast<int>(n);
    while (act.size() > 1) {
        size_t bi = 0, bj = 1;
        double best = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < act.size(); ++i)
            for (size_t j = i + 1; j < act.size(); ++j)
                if (dist[i][j] < best) { // strict <: first (i,j) wins ties
                    best = dist[i][j];
                    bi = i;
                    bj = j;
                }

        ClusterMerge merge;
        merge.left = act[bi].id;
        merge.right = act[bj].id;
        merge.height = best;
        merge.size = static_cast<int>(act[bi].leaves.size() + act[bj].leaves.size());
        tree.merges.push_back(merge);

        double si = double(act[bi].leaves.size()), sj = double(act[bj].leaves.size());
        for (size_t kdx = 0; kdx < act.size(); ++kdx) {
            if (kdx == bi || kdx == bj) continue;
            double d = (si * dist[bi][kdx] + sj * dist[bj][kdx]) / (si + sj);
            dist[bi][kdx] = dist[kdx][bi] = d;
        }
        act[bi].id = next_id++;
        act[bi].leaves.insert(act[bi].leaves.end(), act[bj].leaves.begin(), act[bj].leaves.end());
        std::sort(act[bi].leaves.begin(), act[bi].leaves.end());
        act.erase(act.begin() + static_cast<long>(bj));
        for (auto& row : dist) row.erase(row.begin() + static_cast<long>(bj));
        dist.erase(dist.begin() + static_cast<long>(bj));
    }

    // Cut: leaves connected by merges at height <= cut form one cluster.
    std::vector<int> group(n);
    std::iota(group.begin(), group.end(), 0);
    std::function<int(int)> find = [&](int a) {
        while (group[a] != a) a = group[a] = group[group[a]];
        return a;
    };
    std::vector<std::vector<int>> members(n + tree.merges.size());
    for (size_t i = 0; i < n; ++i) members[i] = {int(i)};
    for (size_t s = 0; s < tree.merges.size(); ++s) {
        const auto& mg = tree.merges[s];
        auto& combined = members[n + s];
        combined = members[size_t(mg.left)];
        combined.insert(combined.end(), members[size_t(mg.right)].begin(),
                        members[size_t(mg.right)].end());
        if (mg.height <= cut_height)
            for (int leaf : combined) group[find(leaf)] = find(combined.front());
    }

    std::vector<std::vector<int>> clusters;
    std::vector<int> roots;
    for (size_t i = 0; i < n; ++i) {
        int root = find(int(i));
        auto it = std::find(roots.begin(), roots.end(), root);
        size_t ci;
        if (it == roots.end()) {
            roots.push_back(root);
            clusters.emplace_back();
            ci = clusters.size() - 1;
        } else {
            ci = size_t(it - roots.begin());
        }
        clusters[ci].push_back(int(i));
    }
    tree.clusters = clusters;

    for (const auto& cluster : clusters) {
        size_t best_idx = 0;
        double best_mean = -1.0;
        for (size_t a = 0; a < cluster.size(); ++a) {
            double mean = 0.0;
            if (cluster.size() > 1) {
                for (size_t b = 0; b < cluster.size(); ++b)
                    if (a != b) mean += std::abs(corr[size_t(cluster[a])][size_t(cluster[b])]);
                mean /= double(cluster.size() - 1);
            }
            if (mean > best_mean) {
                best_mean = mean;
                best_idx = a;
            }
        }
        tree.representatives.push_back(names[size_t(cluster[best_idx])]);
    }
    return tree;
}

std::string associations_csv(const AdjustedResultSet& set) {
    CsvTable table;
    table.header = {"fundus_feature", "lipid_feature", "r",         "CI_lower",
                    "CI_upper",       "P-value",       "P-adjusted", "n"};
    for (size_t i = 0; i < set.results.size(); ++i) {
        const auto& res = set.results[i];
        table.rows.push_back({res.x_name, res.y_name, format_double(res.r),
                              format_double(res.ci_lower), format_double(res.ci_upper),
                              format_double(res.p), format_double(set.p_adjusted[i]),
                              std::to_string(res.n_used)});
    }
    return emit_csv(table);
}

} // namespace oculolipid::stats
