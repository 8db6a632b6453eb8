#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oculolipid/cohort.hpp"
#include "oculolipid/config.hpp"
#include "oculolipid/stats.hpp"

namespace oculolipid::pipeline {

// Subclass tag from a lipid column name ("tag_50:1" -> "tag"); names outside
// the known grammar map to "other".
std::string lipid_subclass(const std::string& name);

struct DemographicEntry {
    std::string feature;
    bool age_ok = false, sex_ok = false; // test ran (not skipped)
    stats::CorrelationResult age;        // feature vs age, controlling sex
    stats::CorrelationResult sex;        // feature vs sex, controlling age
    double age_p_adjusted = 1.0;
    double sex_p_adjusted = 1.0;
    bool retained = false;
    cohort::ColumnSummary summary;       // sex-stratified mean/SD/n
};

struct DemographicProfile {
    std::vector<DemographicEntry> entries; // one per fundus feature, in order
    std::vector<std::string> retained;     // screening survivors
    double q = 0.05;
    double r_min = 0.1;
};

// Age/sex association of every fundus feature (each adjusted for the other
// covariate), BH-FDR across the whole 2x18 family, then screening at
// |r| >= r_min and adjusted p < q against either probe.
DemographicProfile profile_demographics(const cohort::MergedCohort& cohort, double q = 0.05,
                                        double r_min = 0.1, double ci_level = 0.95);

// All (fundus, lipid) partial correlations with covariates {age, sex}.
// Degenerate pairs are recorded in `skipped`, never fatal. fdr_scope is
// "global" (one family) or "per_feature" (one family per fundus feature).
// Results are ordered by (fundus name, lipid name).
stats::AdjustedResultSet lipid_retina_sweep(const cohort::MergedCohort& cohort, double q = 0.05,
                                            const std::string& fdr_scope = "global", int jobs = 0,
                                            const std::vector<std::string>* feature_filter = nullptr,
                                            double ci_level = 0.95);

struct NetworkNode {
    std::string id;
    std::string side;     // "fundus" | "lipid"
    std::string subclass; // lipid subclass tag; empty for fundus nodes
    int degree = 0;
};

struct NetworkEdge {
    std::string source; // fundus feature
    std::string target; // lipid feature
    double r = 0.0;
    double p_adjusted = 1.0;
    int sign = 0;
};

struct AssociationNetwork {
    std::vector<NetworkNode> fundus_nodes; // degree desc, then name
    std::vector<NetworkNode> lipid_nodes;  // degree desc, then name
    std::vector<NetworkEdge> edges;        // (source, target) order
    double q = 0.05;
    int min_degree = 5;
};

// Significant edges grouped per fundus feature; a fundus node enters the
// network only with strictly more than min_degree significant partners.
AssociationNetwork build_network(const stats::AdjustedResultSet& results, int min_degree = 5);

std::string network_json(const AssociationNetwork& net);

struct RankedAssociation {
    stats::CorrelationResult result;
    double p_adjusted = 1.0;
};

/// Significant results by |r| descending (ties: p, then pair name), top k.
std::vector<RankedAssociation> top_associations(const stats::AdjustedResultSet& results,
                                                size_t k = 20);

// ----- synthetic cohort -----

struct PlantedEffect {
    std::string fundus;
    std::string lipid;
    double r = 0.0; // partial correlation given {age, sex}
};

struct SimulationSpec {
    size_t n = 2000;
    size_t n_lipids = 187;
    uint64_t seed = 1;
    std::vector<PlantedEffect> planted;
    // Fundus feature loadings on standardized age / sex (+1 F, -1 M); features
    // not listed use the defaults.
    std::map<std::string, std::pair<double, double>> fundus_betas;
    double default_beta_age = -0.2;
    double default_beta_sex = 0.1;
    double lipid_beta_age = 0.15;
    double lipid_beta_sex = 0.1;
    double overlap = 1.0;      // fraction of fundus participants in the lipid table
    double missing_rate = 0.0; // per lipid cell
    double age_mean = 52.64;   // cohort-style demographics
    double age_sd = 7.87;
    double female_fraction = 0.513;
};

struct SimulatedCohort {
    cohort::FeatureTable fundus;
    cohort::FeatureTable lipids;
    SimulationSpec spec;
};

// Deterministic names for generated lipid columns (prefix grammar compliant).
std::vector<std::string> default_lipid_names(size_t k);

// Reproducible synthetic cohort: fundus features carry age/sex structure plus
// a per-feature latent; planted lipids share that latent so the partial
// correlation given {age, sex} equals the requested r in population.
SimulatedCohort simulate_cohort(const SimulationSpec& spec);

// Reads sim_* keys (sim_n, sim_lipids, sim_planted, sim_age_effects,
// sim_overlap, sim_missing_rate, ...) and `seed`.
SimulationSpec spec_from_config(const Config& config);

std::string ground_truth_json(const SimulationSpec& spec);

// ----- run manifest -----

struct ManifestCounts {
    size_t n_participants = 0;
    size_t n_tests = 0;
    size_t n_skipped = 0;
    size_t n_significant = 0;
};

// Input digests + config snapshot + counts. A timestamp appears only when the
// config carries run_timestamp, so identical inputs give identical bytes.
std::string manifest_json(const std::vector<std::string>& input_paths, const Config& config,
                          const ManifestCounts& counts, const std::string& fdr_scope);

} // namespace oculolipid::pipeline
