#pragma once

#include <string>
#include <vector>

namespace oculolipid::cohort {

enum class Sex { Male, Female };

const char* sex_label(Sex s); // "M" / "F"

struct Participant {
    std::string id;
    double age = 0.0;
    Sex sex = Sex::Male;
};

/// One parsed table: participants row-aligned with a dense value matrix
// (NaN marks a missing cell). Rejected input rows are kept as diagnostics.
struct FeatureTable {
    std::vector<Participant> participants;
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> values; // rows x features
    std::vector<std::string> rejected;       // "row 12: ..." diagnostics
    int unknown_prefix_warnings = 0;         // lipid-name grammar misses
};

// Requires participant_id/age/sex plus all 18 canonical fundus columns
// (case-insensitive). Rows with unparsable feature cells or out-of-range
// demographics are rejected with a reason; NA cells stay missing.
FeatureTable parse_fundus_csv(const std::string& path);

// Every non-demographic column is a lipid feature; names are checked against
// the subclass-prefix grammar and unknown prefixes only bump the warning
// tally. Values arrive log10-transformed; set apply_log10 for raw intensities.
FeatureTable parse_lipid_csv(const std::string& path, bool apply_log10 = false);

// Subclass-prefix grammar for lipid column names.
const std::vector<std::string>& lipid_prefixes();    // "tag_", "dag_", ...
const std::vector<std::string>& lipid_exact_names(); // standalone species
bool lipid_name_recognized(const std::string& name);

struct MergedCohort {
    std::vector<Participant> participants; // sorted by id
    std::vector<std::string> fundus_names;
    std::vector<std::string> lipid_names;
    std::vector<std::vector<double>> fundus; // rows x |fundus_names|
    std::vector<std::vector<double>> lipids; // rows x |lipid_names|
    size_t n_fundus_only = 0;
    size_t n_lipid_only = 0;
    size_t n_joined = 0;
    std::vector<std::string> rejected_reasons; // consistency failures
    int lipid_name_warnings = 0;
};

// Inner join on participant_id with age agreement within 1 year and exact sex
// agreement; inconsistent rows are dropped with a recorded reason. The fundus
// table's age is kept for joined rows. Throws EmptyJoin when nothing survives.
MergedCohort merge_cohort(const FeatureTable& fundus, const FeatureTable& lipids);

struct StratumStat {
    double mean = 0.0;
    double sd = 0.0;
    bool sd_defined = false; // false when n < 2
    size_t n = 0;
};

struct ColumnSummary {
    std::string column;
    StratumStat male, female, all;
};

// Per-column mean / sample SD / n for strata {Male, Female, All}; missing
// cells are excluded per column.
std::vector<ColumnSummary> summarize(const std::vector<std::string>& names,
                                     const std::vector<std::vector<double>>& rows,
                                     const std::vector<Sex>& sex);
std::vector<ColumnSummary> summarize(const FeatureTable& table);

// Round-trippable cohort CSV (participant_id, age, sex, fundus..., lipids...)
// plus a JSON sidecar with provenance counts and rejection reasons.
void write_cohort_csv(const std::string& path, const MergedCohort& cohort);
void write_cohort_sidecar(const std::string& path, const MergedCohort& cohort);

} // namespace oculolipid::cohort
