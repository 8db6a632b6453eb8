#include "oculolipid/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "oculolipid/csv.hpp"
#include "oculolipid/digest.hpp"
#include "oculolipid/errors.hpp"
#include "oculolipid/log.hpp"
#include "oculolipid/morphometry.hpp"
#include "oculolipid/parallel.hpp"

namespace oculolipid::pipeline {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Covariate encoding used throughout the statistics: Male=0, Female=1.
double sex_covariate(cohort::Sex s) { return s == cohort::Sex::Female ? 1.0 : 0.0; }

std::vector<double> age_column(const cohort::MergedCohort& c) {
    std::vector<double> v;
    v.reserve(c.participants.size());
    for (const auto& p : c.participants) v.push_back(p.age);
    return v;
}

std::vector<double> sex_column(const cohort::MergedCohort& c) {
    std::vector<double> v;
    v.reserve(c.participants.size());
    for (const auto& p : c.participants) v.push_back(sex_covariate(p.sex));
    return v;
}

std::vector<double> matrix_column(const std::vector<std::vector<double>>& rows, size_t col) {
    std::vector<double> v;
    v.reserve(rows.size());
    for (const auto& row : rows) v.push_back(col < row.size() ? row[col] : kNaN);
    return v;
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

bool constant_column(const std::vector<double>& v) {
    for (double x : v)
        if (x != v.front()) return false;
    return !v.empty();
}

} // namespace

std::string lipid_subclass(const std::string& name) {
    std::string low = lower(name);
    if (low == "coenzyme_q10") return "coenzyme_q10";
    if (low == "22:6_cholesteryl_ester") return "cholesteryl_ester";
    for (const auto& prefix : cohort::lipid_prefixes())
        if (low.rfind(prefix, 0) == 0) return prefix.substr(0, prefix.size() - 1);
    return "other";
}

DemographicProfile profile_demographics(const cohort::MergedCohort& cohort, double q,
                                        double r_min, double ci_level) {
    DemographicProfile profile;
    profile.q = q;
    profile.r_min = r_min;

    std::vector<double> age = age_column(cohort);
    std::vector<double> sex = sex_column(cohort);
    auto summaries = cohort::summarize(cohort.fundus_names, cohort.fundus,
                                       [&] {
                                           std::vector<cohort::Sex> s;
                                           for (const auto& p : cohort.participants)
                                               s.push_back(p.sex);
                                           return s;
                                       }());

    std::vector<double> family_p;
    for (size_t fi = 0; fi < cohort.fundus_names.size(); ++fi) {
        DemographicEntry entry;
        entry.feature = cohort.fundus_names[fi];
        entry.summary = summaries[fi];
        std::vector<double> feature = matrix_column(cohort.fundus, fi);
        entry.age = stats::partial_correlation(feature, age, {sex}, entry.feature, "age",
                                               {"sex"}, ci_level);
        entry.age_ok = true;
        entry.sex = stats::partial_correlation(feature, sex, {age}, entry.feature, "sex",
                                               {"age"}, ci_level);
        entry.sex_ok = true;
        family_p.push_back(entry.age.p);
        family_p.push_back(entry.sex.p);
        profile.entries.push_back(std::move(entry));
    }

    stats::FdrAdjustment fdr = stats::bh_fdr(family_p, q);
    for (size_t i = 0; i < profile.entries.size(); ++i) {
        auto& entry = profile.entries[i];
        entry.age_p_adjusted = fdr.adjusted[2 * i];
        entry.sex_p_adjusted = fdr.adjusted[2 * i + 1];
        bool by_age = std::abs(entry.age.r) >= r_min && entry.age_p_adjusted < q;
        bool by_sex = std::abs(entry.sex.r) >= r_min && entry.sex_p_adjusted < q;
        entry.retained = by_age || by_sex;
        if (entry.retained) profile.retained.push_back(entry.feature);
    }
    log::info("demographic screening retained ", profile.retained.size(), " of ",
              profile.entries.size(), " features");
    return profile;
}

stats::AdjustedResultSet lipid_retina_sweep(const cohort::MergedCohort& cohort, double q,
                                            const std::string& fdr_scope, int jobs,
                                            const std::vector<std::string>* feature_filter,
                                            double ci_level) {
    if (fdr_scope != "global" && fdr_scope != "per_feature")
        throw Error(ErrorKind::Usage, "fdr_scope must be 'global' or 'per_feature', got '" +
                                          fdr_scope + "'");

    std::vector<size_t> fsel;
    if (feature_filter) {
        std::unordered_set<std::string> wanted(feature_filter->begin(), feature_filter->end());
        for (size_t i = 0; i < cohort.fundus_names.size(); ++i)
            if (wanted.count(cohort.fundus_names[i])) fsel.push_back(i);
    } else {
        fsel.resize(cohort.fundus_names.size());
        std::iota(fsel.begin(), fsel.end(), size_t{0});
    }
    const size_t nf = fsel.size();
    const size_t nl = cohort.lipid_names.size();

    std::vector<double> age = age_column(cohort);
    std::vector<double> sex = sex_column(cohort);
    const std::vector<std::vector<double>> covs = {age, sex};
    const std::vector<std::string> cov_names = {"age", "sex"};

    // Complete columns share one residualization against {1, age, sex}; that
    // is arithmetically the per-pair computation whenever no row is dropped.
    std::vector<std::vector<double>> fundus_cols(nf), lipid_cols(nl);
    std::vector<std::vector<double>> fundus_res(nf), lipid_res(nl);
    // constant columns skip the shared residualization so that the per-pair
    // fallback can reject them with the column's own name
    for (size_t i = 0; i < nf; ++i) {
        fundus_cols[i] = matrix_column(cohort.fundus, fsel[i]);
        if (all_finite(fundus_cols[i]) && !constant_column(fundus_cols[i]))
            fundus_res[i] = stats::ols_residuals(fundus_cols[i], covs);
    }
    for (size_t i = 0; i < nl; ++i) {
        lipid_cols[i] = matrix_column(cohort.lipids, i);
        if (all_finite(lipid_cols[i]) && !constant_column(lipid_cols[i]))
            lipid_res[i] = stats::ols_residuals(lipid_cols[i], covs);
    }

    const size_t tasks = nf * nl;
    std::vector<stats::CorrelationResult> slot(tasks);
    std::vector<uint8_t> ok(tasks, 0);
    std::vector<std::string> skip(tasks);

    parallel_for(tasks, jobs, [&](size_t t) {
        size_t fi = t / nl, li = t % nl;
        const std::string& fname = cohort.fundus_names[fsel[fi]];
        const std::string& lname = cohort.lipid_names[li];
        try {
            if (!fundus_res[fi].empty() && !lipid_res[li].empty()) {
                slot[t] = stats::correlation_from_residuals(fundus_res[fi], lipid_res[li], 2,
                                                            fname, lname, cov_names, ci_level);
            } else {
                slot[t] = stats::partial_correlation(fundus_cols[fi], lipid_cols[li], covs,
                                                     fname, lname, cov_names, ci_level);
            }
            ok[t] = 1;
        } catch (const Error& e) {
            skip[t] = fname + " x " + lname + ": " + e.what();
        }
    });

    std::vector<size_t> order(tasks);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        const auto& fa = cohort.fundus_names[fsel[a / nl]];
        const auto& fb = cohort.fundus_names[fsel[b / nl]];
        if (fa != fb) return fa < fb;
        return cohort.lipid_names[a % nl] < cohort.lipid_names[b % nl];
    });

    stats::AdjustedResultSet set;
    set.q = q;
    set.fdr_scope = fdr_scope;
    for (size_t t : order) {
        if (ok[t])
            set.results.push_back(std::move(slot[t]));
        else
            set.skipped.push_back(std::move(skip[t]));
    }

    if (fdr_scope == "global") {
        std::vector<double> p;
        p.reserve(set.results.size());
        for (const auto& res : set.results) p.push_back(res.p);
        stats::FdrAdjustment fdr = stats::bh_fdr(p, q);
        set.p_adjusted = std::move(fdr.adjusted);
        set.significant = std::move(fdr.significant);
    } else {
        set.p_adjusted.assign(set.results.size(), 1.0);
        set.significant.assign(set.results.size(), false);
        size_t start = 0;
        while (start < set.results.size()) {
            size_t end = start;
            while (end < set.results.size() &&
                   set.results[end].x_name == set.results[start].x_name)
                ++end;
            std::vector<double> p;
            for (size_t i = start; i < end; ++i) p.push_back(set.results[i].p);
            stats::FdrAdjustment fdr = stats::bh_fdr(p, q);
            for (size_t i = start; i < end; ++i) {
                set.p_adjusted[i] = fdr.adjusted[i - start];
                set.significant[i] = fdr.significant[i - start];
            }
            start = end;
        }
    }
    size_t n_sig = 0;
    for (bool s : set.significant) n_sig += s;
    log::info("sweep: ", set.results.size(), " tests, ", set.skipped.size(), " skipped, ",
              n_sig, " significant at q=", q, " (", fdr_scope, ")");
    return set;
}

AssociationNetwork build_network(const stats::AdjustedResultSet& results, int min_degree) {
    AssociationNetwork net;
    net.q = results.q;
    net.min_degree = min_degree;

    std::map<std::string, std::vector<size_t>> by_feature;
    for (size_t i = 0; i < results.results.size(); ++i)
        if (results.significant[i]) by_feature[results.results[i].x_name].push_back(i);

    std::map<std::string, int> lipid_degree;
    for (const auto& [feature, idxs] : by_feature) {
        if (static_cast<int>(idxs.size()) <= min_degree) continue; // strict n > min_degree
        net.fundus_nodes.push_back({feature, "fundus", "", static_cast<int>(idxs.size())});
        for (size_t i : idxs) {
            const auto& res = results.results[i];
            NetworkEdge edge;
            edge.source = res.x_name;
            edge.target = res.y_name;
            edge.r = res.r;
            edge.p_adjusted = results.p_adjusted[i];
            edge.sign = (res.r > 0.0) - (res.r < 0.0);
            net.edges.push_back(edge);
            ++lipid_degree[res.y_name];
        }
    }
    for (const auto& [name, degree] : lipid_degree)
        net.lipid_nodes.push_back({name, "lipid", lipid_subclass(name), degree});

    auto by_degree_then_name = [](const NetworkNode& a, const NetworkNode& b) {
        if (a.degree != b.degree) return a.degree > b.degree;
        return a.id < b.id;
    };
    std::sort(net.fundus_nodes.begin(), net.fundus_nodes.end(), by_degree_then_name);
    std::sort(net.lipid_nodes.begin(), net.lipid_nodes.end(), by_degree_then_name);
    std::sort(net.edges.begin(), net.edges.end(), [](const NetworkEdge& a, const NetworkEdge& b) {
        if (a.source != b.source) return a.source < b.source;
        return a.target < b.target;
    });
    return net;
}

std::string network_json(const AssociationNetwork& net) {
    nlohmann::ordered_json j;
    j["q"] = net.q;
    j["min_degree"] = net.min_degree;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const auto& nodes : {net.fundus_nodes, net.lipid_nodes})
        for (const auto& node : nodes) {
            nlohmann::ordered_json n;
            n["id"] = node.id;
            n["side"] = node.side;
            n["subclass"] = node.subclass;
            n["degree"] = node.degree;
            j["nodes"].push_back(n);
        }
    j["edges"] = nlohmann::ordered_json::array();
    for (const auto& edge : net.edges) {
        nlohmann::ordered_json e;
        e["source"] = edge.source;
        e["target"] = edge.target;
        e["r"] = edge.r;
        e["p_adjusted"] = edge.p_adjusted;
        e["sign"] = edge.sign;
        j["edges"].push_back(e);
    }
    return j.dump(2) + "\n";
}

std::vector<RankedAssociation> top_associations(const stats::AdjustedResultSet& results,
                                                size_t k) {
    std::vector<RankedAssociation> ranked;
    for (size_t i = 0; i < results.results.size(); ++i)
        if (results.significant[i])
            ranked.push_back({results.results[i], results.p_adjusted[i]});
    std::sort(ranked.begin(), ranked.end(), [](const RankedAssociation& a,
                                               const RankedAssociation& b) {
        double ra = std::abs(a.result.r), rb = std::abs(b.result.r);
        if (ra != rb) return ra > rb;
        if (a.result.p != b.result.p) return a.result.p < b.result.p;
        std::string pa = a.result.x_name + "|" + a.result.y_name;
        std::string pb = b.result.x_name + "|" + b.result.y_name;
        return pa < pb;
    });
    if (ranked.size() > k) ranked.resize(k);
    return ranked;
}

// ----- synthetic cohort -----

namespace {

// Box-Muller over mt19937_64: the standard library's normal_distribution is
// implementation-defined, this stream is pinned by our own arithmetic.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    double uniform() { return double(gen_() >> 11) * 0x1.0p-53; } // [0, 1)

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double mag = std::sqrt(-2.0 * std::log(u1));
        double ang = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = mag * std::sin(ang);
        have_spare_ = true;
        return mag * std::cos(ang);
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

struct Scale {
    double mean, sd;
};

// Plausible per-feature output scales; width/density/tortuosity-density pairs
// follow the cohort-style magnitudes, the rest are filled with credible values.
const std::unordered_map<std::string, Scale>& fundus_scales() {
    static const std::unordered_map<std::string, Scale> scales = {
        {"artery_average_width", {18305.1864, 1287.0806}},
        {"artery_vessel_density", {0.0391, 0.0045}},
        {"artery_fractal_dimension", {1.25, 0.04}},
        {"artery_distance_tortuosity", {1.08, 0.02}},
        {"artery_squared_curvature_tortuosity", {5.0e-4, 1.0e-4}},
        {"artery_tortuosity_density", {0.6971, 0.0334}},
        {"vein_average_width", {19413.9884, 1259.6486}},
        {"vein_vessel_density", {0.0499, 0.0043}},
        {"vein_fractal_dimension", {1.28, 0.04}},
        {"vein_distance_tortuosity", {1.09, 0.02}},
        {"vein_squared_curvature_tortuosity", {6.0e-4, 1.2e-4}},
        {"vein_tortuosity_density", {0.7060, 0.0249}},
        {"average_width", {18860.0, 1100.0}},
        {"vessel_density", {0.089, 0.007}},
        {"fractal_dimension", {1.45, 0.03}},
        {"distance_tortuosity", {1.085, 0.018}},
        {"squared_curvature_tortuosity", {5.5e-4, 1.0e-4}},
        {"tortuosity_density", {0.70, 0.028}},
    };
    return scales;
}

Scale lipid_scale(size_t index) {
    return {0.25 + 0.045 * double(index % 17), 0.08 + 0.012 * double(index % 11)};
}

std::string participant_id(const char* prefix, size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%06zu", prefix, i);
    return buf;
}

void validate_spec(const SimulationSpec& spec, const std::vector<std::string>& lipid_names) {
    if (spec.n == 0) throw InvalidSpec("n must be positive");
    if (spec.n_lipids == 0) throw InvalidSpec("n_lipids must be positive");
    if (!(spec.overlap > 0.0 && spec.overlap <= 1.0))
        throw InvalidSpec("overlap must be in (0, 1]");
    if (!(spec.missing_rate >= 0.0 && spec.missing_rate < 1.0))
        throw InvalidSpec("missing_rate must be in [0, 1)");
    if (!(spec.female_fraction >= 0.0 && spec.female_fraction <= 1.0))
        throw InvalidSpec("female_fraction must be in [0, 1]");
    if (!(spec.age_sd > 0.0)) throw InvalidSpec("age_sd must be positive");

    std::unordered_set<std::string> lipid_set(lipid_names.begin(), lipid_names.end());
    std::unordered_set<std::string> planted_lipids;
    for (const auto& effect : spec.planted) {
        if (morpho::feature_index(effect.fundus) < 0)
            throw InvalidSpec("unknown fundus feature '" + effect.fundus + "'");
        if (!lipid_set.count(effect.lipid))
            throw InvalidSpec("planted lipid '" + effect.lipid + "' not among the " +
                              std::to_string(lipid_names.size()) + " generated columns");
        if (!planted_lipids.insert(effect.lipid).second)
            throw InvalidSpec("lipid '" + effect.lipid + "' planted more than once");
        if (!(std::abs(effect.r) < 1.0)) throw InvalidSpec("planted r must satisfy |r| < 1");
    }

    auto check_betas = [](double ba, double bs, const std::string& what) {
        if (ba * ba + bs * bs >= 1.0)
            throw InvalidSpec(what + " age/sex loadings too large (sum of squares must be < 1)");
    };
    check_betas(spec.default_beta_age, spec.default_beta_sex, "default fundus");
    for (const auto& [name, betas] : spec.fundus_betas) {
        if (morpho::feature_index(name) < 0)
            throw InvalidSpec("age-effect entry for unknown feature '" + name + "'");
        check_betas(betas.first, betas.second, name);
    }
    check_betas(spec.lipid_beta_age, spec.lipid_beta_sex, "lipid");
}

} // namespace

std::vector<std::string> default_lipid_names(size_t k) {
    const auto& prefixes = cohort::lipid_prefixes();
    std::vector<std::string> names;
    names.reserve(k);
    for (size_t i = 0; i < k; ++i) {
        size_t p = i % prefixes.size();
        size_t j = i / prefixes.size();
        names.push_back(prefixes[p] + std::to_string(32 + 2 * j) + ":" +
                        std::to_string(j % 7));
    }
    return names;
}

SimulatedCohort simulate_cohort(const SimulationSpec& spec) {
    std::vector<std::string> lipid_names = default_lipid_names(spec.n_lipids);
    validate_spec(spec, lipid_names);

    const auto& fnames = morpho::feature_names();
    std::unordered_map<std::string, size_t> lipid_idx;
    for (size_t i = 0; i < lipid_names.size(); ++i) lipid_idx.emplace(lipid_names[i], i);

    // planted lookup: lipid index -> (fundus index, r)
    std::vector<std::pair<int, double>> planted(spec.n_lipids, {-1, 0.0});
    for (const auto& effect : spec.planted)
        planted[lipid_idx.at(effect.lipid)] = {morpho::feature_index(effect.fundus), effect.r};

    std::vector<std::pair<double, double>> betas(fnames.size(),
                                                 {spec.default_beta_age, spec.default_beta_sex});
    for (const auto& [name, b] : spec.fundus_betas)
        betas[size_t(morpho::feature_index(name))] = b;

    double lam_a = spec.lipid_beta_age, lam_s = spec.lipid_beta_sex;
    double lam_rest = std::sqrt(1.0 - lam_a * lam_a - lam_s * lam_s);

    SimulatedCohort out;
    out.spec = spec;
    out.fundus.feature_names = fnames;
    out.lipids.feature_names = lipid_names;

    Rng rng(spec.seed);
    // llround, not truncation: (1 - 0.8) * 1000 is 199.99... in binary
    size_t dropped = size_t(std::llround((1.0 - spec.overlap) * double(spec.n)));

    for (size_t i = 0; i < spec.n; ++i) {
        double z = rng.normal();
        double age = std::clamp(spec.age_mean + spec.age_sd * z, 1.0, 119.0);
        double z_used = (age - spec.age_mean) / spec.age_sd;
        bool female = rng.uniform() < spec.female_fraction;
        double x_sex = female ? 1.0 : -1.0;

        std::vector<double> u(fnames.size());
        for (double& v : u) v = rng.normal();

        cohort::Participant person{participant_id("P", i), age,
                                   female ? cohort::Sex::Female : cohort::Sex::Male};

        std::vector<double> frow(fnames.size());
        for (size_t f = 0; f < fnames.size(); ++f) {
            auto [ba, bs] = betas[f];
            double gamma = std::sqrt(1.0 - ba * ba - bs * bs);
            double std_value = ba * z_used + bs * x_sex + gamma * u[f];
            Scale sc = fundus_scales().at(fnames[f]);
            frow[f] = sc.mean + sc.sd * std_value;
        }
        out.fundus.participants.push_back(person);
        out.fundus.values.push_back(std::move(frow));

        std::vector<double> lrow(spec.n_lipids);
        for (size_t l = 0; l < spec.n_lipids; ++l) {
            double e = rng.normal();
            auto [fidx, r] = planted[l];
            double core = fidx >= 0 ? r * u[size_t(fidx)] + std::sqrt(1.0 - r * r) * e : e;
            double std_value = lam_a * z_used + lam_s * x_sex + lam_rest * core;
            Scale sc = lipid_scale(l);
            lrow[l] = sc.mean + sc.sd * std_value;
        }
        if (i >= dropped) {
            out.lipids.participants.push_back(person);
            out.lipids.values.push_back(std::move(lrow));
        }
    }

    // Fresh lipid-only participants keep the provenance counts nontrivial when
    // overlap < 1; they never join, so planted latents are irrelevant here.
    for (size_t i = 0; i < dropped; ++i) {
        double z = rng.normal();
        double age = std::clamp(spec.age_mean + spec.age_sd * z, 1.0, 119.0);
        double z_used = (age - spec.age_mean) / spec.age_sd;
        bool female = rng.uniform() < spec.female_fraction;
        double x_sex = female ? 1.0 : -1.0;
        std::vector<double> lrow(spec.n_lipids);
        for (size_t l = 0; l < spec.n_lipids; ++l) {
            double std_value = lam_a * z_used + lam_s * x_sex + lam_rest * rng.normal();
            Scale sc = lipid_scale(l);
            lrow[l] = sc.mean + sc.sd * std_value;
        }
        out.lipids.participants.push_back(
            {participant_id("X", i), age, female ? cohort::Sex::Female : cohort::Sex::Male});
        out.lipids.values.push_back(std::move(lrow));
    }

    if (spec.missing_rate > 0.0)
        for (auto& row : out.lipids.values)
            for (double& v : row)
                if (rng.uniform() < spec.missing_rate) v = kNaN;

    return out;
}

SimulationSpec spec_from_config(const Config& config) {
    SimulationSpec spec;
    spec.n = size_t(config.get_int("sim_n", int(spec.n)));
    spec.n_lipids = size_t(config.get_int("sim_lipids", int(spec.n_lipids)));
    spec.seed = uint64_t(config.get_int("seed", int(spec.seed)));
    spec.default_beta_age = config.get_double("sim_default_beta_age", spec.default_beta_age);
    spec.default_beta_sex = config.get_double("sim_default_beta_sex", spec.default_beta_sex);
    spec.lipid_beta_age = config.get_double("sim_lipid_beta_age", spec.lipid_beta_age);
    spec.lipid_beta_sex = config.get_double("sim_lipid_beta_sex", spec.lipid_beta_sex);
    spec.overlap = config.get_double("sim_overlap", spec.overlap);
    spec.missing_rate = config.get_double("sim_missing_rate", spec.missing_rate);
    spec.age_mean = config.get_double("sim_age_mean", spec.age_mean);
    spec.age_sd = config.get_double("sim_age_sd", spec.age_sd);
    spec.female_fraction = config.get_double("sim_female_fraction", spec.female_fraction);

    // sim_planted = "fundus|lipid|r;fundus|lipid|r;..."
    if (auto text = config.get_optional("sim_planted")) {
        for (const auto& item : split(*text, ';')) {
            std::string entry = trim(item);
            if (entry.empty()) continue;
            auto parts = split(entry, '|');
            if (parts.size() != 3)
                throw InvalidSpec("sim_planted entry '" + entry + "' is not fundus|lipid|r");
            CellValue r = parse_cell(trim(parts[2]));
            if (r.kind != CellKind::Number)
                throw InvalidSpec("sim_planted entry '" + entry + "' has a non-numeric r");
            spec.planted.push_back({trim(parts[0]), trim(parts[1]), r.value});
        }
    }
    // sim_age_effects = "feature|beta_age|beta_sex;..."
    if (auto text = config.get_optional("sim_age_effects")) {
        for (const auto& item : split(*text, ';')) {
            std::string entry = trim(item);
            if (entry.empty()) continue;
            auto parts = split(entry, '|');
            if (parts.size() != 3)
                throw InvalidSpec("sim_age_effects entry '" + entry +
                                  "' is not feature|beta_age|beta_sex");
            CellValue ba = parse_cell(trim(parts[1])), bs = parse_cell(trim(parts[2]));
            if (ba.kind != CellKind::Number || bs.kind != CellKind::Number)
                throw InvalidSpec("sim_age_effects entry '" + entry + "' has non-numeric betas");
            spec.fundus_betas[trim(parts[0])] = {ba.value, bs.value};
        }
    }
    validate_spec(spec, default_lipid_names(spec.n_lipids));
    return spec;
}

std::string ground_truth_json(const SimulationSpec& spec) {
    nlohmann::ordered_json j;
    j["n"] = spec.n;
    j["n_lipids"] = spec.n_lipids;
    j["seed"] = spec.seed;
    j["age_mean"] = spec.age_mean;
    j["age_sd"] = spec.age_sd;
    j["female_fraction"] = spec.female_fraction;
    j["overlap"] = spec.overlap;
    j["missing_rate"] = spec.missing_rate;
    j["default_beta_age"] = spec.default_beta_age;
    j["default_beta_sex"] = spec.default_beta_sex;
    j["lipid_beta_age"] = spec.lipid_beta_age;
    j["lipid_beta_sex"] = spec.lipid_beta_sex;
    j["planted"] = nlohmann::ordered_json::array();
    for (const auto& effect : spec.planted) {
        nlohmann::ordered_json e;
        e["fundus"] = effect.fundus;
        e["lipid"] = effect.lipid;
        e["r"] = effect.r;
        j["planted"].push_back(e);
    }
    j["fundus_betas"] = nlohmann::ordered_json::object();
    for (const auto& [name, b] : spec.fundus_betas)
        j["fundus_betas"][name] = {b.first, b.second};
    return j.dump(2) + "\n";
}

std::string manifest_json(const std::vector<std::string>& input_paths, const Config& config,
                          const ManifestCounts& counts, const std::string& fdr_scope) {
    nlohmann::ordered_json j;
    j["inputs"] = nlohmann::ordered_json::object();
    for (const auto& path : input_paths) j["inputs"][path] = sha256_file_hex(path);
    j["config"] = nlohmann::ordered_json::object();
    for (const auto& [key, value] : config.entries()) j["config"][key] = value;
    j["counts"]["n_participants"] = counts.n_participants;
    j["counts"]["n_tests"] = counts.n_tests;
    j["counts"]["n_skipped"] = counts.n_skipped;
    j["counts"]["n_significant"] = counts.n_significant;
    j["fdr_scope"] = fdr_scope;
    j["sex_covariate_encoding"] = "Male=0, Female=1";
    if (auto ts = config.get_optional("run_timestamp")) j["timestamp"] = *ts;
    return j.dump(2) + "\n";
}

} // namespace oculolipid::pipeline
