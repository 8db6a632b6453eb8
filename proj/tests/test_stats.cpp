#include <doctest.h>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "oculolipid/errors.hpp"
#include "oculolipid/stats.hpp"

using namespace oculolipid;
using namespace oculolipid::stats;

namespace {

// Test-side Pearson r, written independently of the library.
double plain_r(const std::vector<double>& x, const std::vector<double>& y) {
    size_t n = x.size();
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / double(n);
    double my = std::accumulate(y.begin(), y.end(), 0.0) / double(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

// Normal-equations residuals for two covariates, solved by hand-rolled
// Gaussian elimination on the 3x3 system (independent of the library's QR).
std::vector<double> residuals_normal_eq(const std::vector<double>& y,
                                        const std::vector<double>& z1,
                                        const std::vector<double>& z2) {
    size_t n = y.size();
    double a[3][4] = {};
    auto col = [&](int j, size_t i) { return j == 0 ? 1.0 : (j == 1 ? z1[i] : z2[i]); };
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c)
            for (size_t i = 0; i < n; ++i) a[r][c] += col(r, i) * col(c, i);
        for (size_t i = 0; i < n; ++i) a[r][3] += col(r, i) * y[i];
    }
    for (int p = 0; p < 3; ++p) {
        int pivot = p;
        for (int r = p + 1; r < 3; ++r)
            if (std::abs(a[r][p]) > std::abs(a[pivot][p])) pivot = r;
        std::swap(a[p], a[pivot]);
        for (int r = 0; r < 3; ++r) {
            if (r == p) continue;
            double f = a[r][p] / a[p][p];
            for (int c = p; c < 4; ++c) a[r][c] -= f * a[p][c];
        }
    }
    double beta[3] = {a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]};
    std::vector<double> res(n);
    for (size_t i = 0; i < n; ++i)
        res[i] = y[i] - (beta[0] + beta[1] * z1[i] + beta[2] * z2[i]);
    return res;
}

// Naive O(m^2) step-up: explicit min scan over all later ranks.
std::vector<double> naive_bh(const std::vector<double>& p) {
    size_t m = p.size();
    std::vector<size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return p[a] < p[b]; });
    std::vector<double> adjusted(m, 0.0);
    for (size_t k = 0; k < m; ++k) {
        double best = 1.0;
        for (size_t j = k; j < m; ++j)
            best = std::min(best, double(m) * p[order[j]] / double(j + 1));
        adjusted[order[k]] = best;
    }
    return adjusted;
}

std::vector<double> normals(std::mt19937_64& gen, size_t n) {
    std::normal_distribution<double> dist;
    std::vector<double> v(n);
    for (auto& x : v) x = dist(gen);
    return v;
}

} // namespace

TEST_CASE("pearson recovers hand-computed correlations") {
    std::vector<double> x = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    std::vector<double> y = {2.0, 1.0, 4.0, 3.0, 6.0, 5.0};
    CorrelationResult res = pearson(x, y);
    CHECK(res.r == doctest::Approx(plain_r(x, y)).epsilon(1e-14));
    CHECK(res.n_used == 6);
    CHECK(res.df == 4);
    CHECK(res.p > 0.0);
    CHECK(res.p <= 1.0);
    CHECK(res.ci_lower < res.r);
    CHECK(res.ci_upper > res.r);
}

TEST_CASE("pearson drops incomplete pairs and enforces the sample floor") {
    std::vector<double> x = {1.0, 2.0, std::nan(""), 4.0, 5.0, 7.0};
    std::vector<double> y = {2.0, 4.0, 6.0, std::nan(""), 10.0, 13.0};
    CorrelationResult res = pearson(x, y);
    CHECK(res.n_used == 4); // rows 0, 1, 4, 5 survive

    CHECK_THROWS_AS((void)pearson({1.0, 2.0, 3.0}, {1.0, 2.0, 4.0}), InsufficientSamples);
    CHECK_THROWS_AS((void)pearson({1.0, 1.0, 1.0, 1.0}, {1.0, 2.0, 3.0, 4.0}), ConstantInput);
}

TEST_CASE("perfect correlation pins p to the smallest positive double") {
    std::vector<double> x = {1.0, 2.0, 3.0, 4.0, 5.0};
    std::vector<double> y = {2.0, 4.0, 6.0, 8.0, 10.0};
    CorrelationResult res = pearson(x, y);
    CHECK(res.r == doctest::Approx(1.0));
    CHECK(res.p == DBL_MIN);
    CHECK(res.ci_lower == res.r);
    CHECK(res.ci_upper == res.r);
}

TEST_CASE("fisher CI reproduces frozen reference values") {
    // reference bounds computed with 50-digit arithmetic, frozen here
    auto [lo0, hi0] = fisher_ci(0.0, 103, 0);
    CHECK(lo0 == doctest::Approx(-0.19352466479167993).epsilon(1e-12));
    CHECK(hi0 == doctest::Approx(0.19352466479167993).epsilon(1e-12));

    struct Case {
        double r, lo, hi;
    };
    const Case cases[] = {
        {-0.22, -0.24207376871729974, -0.19769861328451788},
        {-0.24, -0.2618502241522658, -0.21790386472275633},
        {-0.18, -0.20246575742770068, -0.15734488003127345},
        {0.11, 0.08690742923745955, 0.13297442270499454},
        {0.10, 0.0768637490638771, 0.12302861541592608},
    };
    for (const auto& c : cases) {
        auto [lo, hi] = fisher_ci(c.r, 7068, 1);
        CHECK(lo == doctest::Approx(c.lo).epsilon(1e-12));
        CHECK(hi == doctest::Approx(c.hi).epsilon(1e-12));
    }

    CHECK_THROWS_AS((void)fisher_ci(0.5, 5, 2), InsufficientSamples);
}

TEST_CASE("partial correlation equals the recursive formula with one covariate") {
    std::mt19937_64 gen(42);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        size_t n = 50;
        std::vector<double> z = normals(gen, n), x(n), y(n);
        std::vector<double> ex = normals(gen, n), ey = normals(gen, n);
        for (size_t i = 0; i < n; ++i) {
            x[i] = 0.6 * z[i] + ex[i];
            y[i] = -0.4 * z[i] + 0.3 * x[i] + ey[i];
        }
        double r_xy = plain_r(x, y), r_xz = plain_r(x, z), r_yz = plain_r(y, z);
        double oracle =
            (r_xy - r_xz * r_yz) / std::sqrt((1.0 - r_xz * r_xz) * (1.0 - r_yz * r_yz));
        CorrelationResult res = partial_correlation(x, y, {z});
        worst = std::max(worst, std::abs(res.r - oracle));
        CHECK(res.df == long(n) - 3);
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("partial correlation matches an independent normal-equations oracle (k=2)") {
    std::mt19937_64 gen(7);
    double worst = 0.0;
    for (int trial = 0; trial < 60; ++trial) {
        size_t n = 80;
        std::vector<double> z1 = normals(gen, n), z2 = normals(gen, n);
        std::vector<double> x(n), y(n);
        std::vector<double> ex = normals(gen, n), ey = normals(gen, n);
        for (size_t i = 0; i < n; ++i) {
            x[i] = 0.5 * z1[i] - 0.2 * z2[i] + ex[i];
            y[i] = 0.3 * z1[i] + 0.4 * z2[i] + 0.25 * ex[i] + ey[i];
        }
        double oracle = plain_r(residuals_normal_eq(x, z1, z2), residuals_normal_eq(y, z1, z2));
        CorrelationResult res = partial_correlation(x, y, {z1, z2});
        worst = std::max(worst, std::abs(res.r - oracle));
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("OLS residuals are orthogonal to the design") {
    std::mt19937_64 gen(3);
    size_t n = 120;
    std::vector<double> z1 = normals(gen, n), z2 = normals(gen, n), y(n);
    for (size_t i = 0; i < n; ++i) y[i] = 2.0 + 0.7 * z1[i] - 1.2 * z2[i] + 0.1 * double(i % 5);
    std::vector<double> res = ols_residuals(y, {z1, z2});
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (size_t i = 0; i < n; ++i) {
        s0 += res[i];
        s1 += res[i] * z1[i];
        s2 += res[i] * z2[i];
    }
    CHECK(std::abs(s0) < 1e-9);
    CHECK(std::abs(s1) < 1e-9);
    CHECK(std::abs(s2) < 1e-9);

    CHECK_THROWS_AS((void)ols_residuals(y, {z1, z1}), RankDeficient);
}

TEST_CASE("covariate recoding does not move the partial correlation") {
    std::mt19937_64 gen(11);
    size_t n = 150;
    std::vector<double> x = normals(gen, n), y = normals(gen, n), sex01(n), sex12(n), sexpm(n);
    std::bernoulli_distribution coin(0.5);
    for (size_t i = 0; i < n; ++i) {
        double s = coin(gen) ? 1.0 : 0.0;
        x[i] += 0.5 * s;
        y[i] -= 0.3 * s;
        sex01[i] = s;
        sex12[i] = s + 1.0;
        sexpm[i] = 2.0 * s - 1.0;
    }
    double r01 = partial_correlation(x, y, {sex01}).r;
    double r12 = partial_correlation(x, y, {sex12}).r;
    double rpm = partial_correlation(x, y, {sexpm}).r;
    CHECK(std::abs(r01 - r12) <= 1e-12);
    CHECK(std::abs(r01 - rpm) <= 1e-12);
}

TEST_CASE("partial correlation needs n >= k + 4 complete rows") {
    std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
    std::vector<double> y = {2.0, 1.0, 4.0, 3.0};
    std::vector<double> z = {0.1, 0.3, 0.2, 0.4};
    CHECK_THROWS_AS((void)partial_correlation(x, y, {z}), InsufficientSamples);
}

TEST_CASE("BH adjustment matches the hand-worked examples") {
    FdrAdjustment a = bh_fdr({0.01, 0.02, 0.03, 0.04});
    for (double v : a.adjusted) CHECK(v == doctest::Approx(0.04).epsilon(1e-12));

    FdrAdjustment b = bh_fdr({0.005, 0.1, 0.8});
    CHECK(b.adjusted[0] == doctest::Approx(0.015).epsilon(1e-12));
    CHECK(b.adjusted[1] == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(b.adjusted[2] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(b.significant[0]);
    CHECK_FALSE(b.significant[1]);

    CHECK_THROWS_AS((void)bh_fdr({0.5, 1.5}), InvalidP);
    CHECK_THROWS_AS((void)bh_fdr({-0.1}), InvalidP);
}

TEST_CASE("BH equals the quadratic min-scan oracle on random vectors") {
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<int> size_dist(1, 300);
    for (int trial = 0; trial < 120; ++trial) {
        std::vector<double> p(size_t(size_dist(gen)));
        for (auto& v : p) v = unif(gen);
        if (trial % 4 == 0 && p.size() > 3) p[1] = p[3]; // exercise ties
        FdrAdjustment got = bh_fdr(p);
        std::vector<double> want = naive_bh(p);
        REQUIRE(got.adjusted.size() == want.size());
        for (size_t i = 0; i < p.size(); ++i) CHECK(got.adjusted[i] == want[i]);
    }
}

TEST_CASE("BH preserves the p-value ordering") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> p(200);
    for (auto& v : p) v = unif(gen);
    FdrAdjustment adj = bh_fdr(p);
    for (size_t i = 0; i < p.size(); ++i) {
        for (size_t j = 0; j < p.size(); ++j)
            if (p[i] <= p[j]) CHECK(adj.adjusted[i] <= adj.adjusted[j] + 1e-15);
        CHECK(adj.adjusted[i] >= p[i] - 1e-15);
        CHECK(adj.adjusted[i] <= 1.0);
    }
}

TEST_CASE("screening keeps features passing both the r and q thresholds") {
    auto make = [](const std::string& x, const std::string& y, double r) {
        CorrelationResult res;
        res.x_name = x;
        res.y_name = y;
        res.r = r;
        return res;
    };
    std::vector<CorrelationResult> results = {
        make("age", "fa", 0.25), make("age", "fb", 0.05), make("age", "fc", -0.2),
        make("age", "fd", 0.3)};
    std::vector<double> p_adj = {0.01, 0.001, 0.02, 0.2};
    auto kept = screen_features(results, p_adj, 0.1, 0.05);
    // fb fails |r|, fd fails q; common probe name means y_name identifies the feature
    CHECK(kept == std::vector<std::string>{"fa", "fc"});

    std::vector<CorrelationResult> mixed = {make("fa", "age", 0.25), make("fb", "sex", 0.22)};
    auto kept2 = screen_features(mixed, {0.01, 0.01}, 0.1, 0.05);
    CHECK(kept2 == std::vector<std::string>{"fa", "fb"});
}

TEST_CASE("average-linkage clustering groups tight pairs below the cut") {
    std::vector<std::string> names = {"a", "b", "c", "d"};
    std::vector<std::vector<double>> corr = {
        {1.0, 0.9, 0.05, 0.05},
        {0.9, 1.0, 0.05, 0.05},
        {0.05, 0.05, 1.0, -0.85},
        {0.05, 0.05, -0.85, 1.0},
    };
    FeatureClusterTree tree = cluster_features(names, corr, 0.5);
    REQUIRE(tree.clusters.size() == 2);
    CHECK(tree.representatives.size() == 2);
    for (size_t i = 1; i < tree.merges.size(); ++i)
        CHECK(tree.merges[i].height >= tree.merges[i - 1].height - 1e-12);

    // everything weakly related: cut keeps singletons
    std::vector<std::vector<double>> weak = {
        {1.0, 0.01, 0.02}, {0.01, 1.0, 0.03}, {0.02, 0.03, 1.0}};
    FeatureClusterTree singles = cluster_features({"x", "y", "z"}, weak, 0.5);
    CHECK(singles.clusters.size() == 3);

    std::vector<std::vector<double>> asym = {{1.0, 0.5}, {0.4, 1.0}};
    CHECK_THROWS_AS((void)cluster_features({"x", "y"}, asym, 0.5), Error);
}

TEST_CASE("Fisher intervals cover the null at their nominal rate") {
    std::mt19937_64 gen(2024);
    const int sims = 2000;
    const size_t n = 200;
    int covered = 0;
    for (int s = 0; s < sims; ++s) {
        CorrelationResult res = pearson(normals(gen, n), normals(gen, n));
        if (res.ci_lower <= 0.0 && 0.0 <= res.ci_upper) ++covered;
    }
    double coverage = double(covered) / sims;
    CHECK(coverage >= 0.935);
    CHECK(coverage <= 0.965);
}

TEST_CASE("a planted negative slope always estimates negative") {
    std::mt19937_64 gen(4242);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> x = normals(gen, 500), y(500);
        for (size_t i = 0; i < y.size(); ++i) y[i] = -0.3 * x[i] + noise(gen);
        CHECK(pearson(x, y).r < 0.0);
    }
}

TEST_CASE("associations CSV uses the pinned header and one row per result") {
    AdjustedResultSet set;
    CorrelationResult res;
    res.x_name = "artery_average_width";
    res.y_name = "tag_50:1";
    res.r = -0.25;
    res.p = 0.001;
    res.ci_lower = -0.30;
    res.ci_upper = -0.20;
    res.n_used = 100;
    set.results.push_back(res);
    set.p_adjusted.push_back(0.01);
    set.significant.push_back(true);
    std::string csv = associations_csv(set);
    CHECK(csv.rfind("fundus_feature,lipid_feature,r,CI_lower,CI_upper,P-value,P-adjusted,n\n",
                    0) == 0);
    CHECK(csv.find("artery_average_width,tag_50:1,-0.25,-0.3,-0.2,0.001,0.01,100") !=
          std::string::npos);
}
