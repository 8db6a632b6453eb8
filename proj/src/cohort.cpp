#include "oculolipid/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "oculolipid/config.hpp"
#include "oculolipid/csv.hpp"
#include "oculolipid/errors.hpp"
#include "oculolipid/log.hpp"
#include "oculolipid/morphometry.hpp"

namespace oculolipid::cohort {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::optional<Sex> parse_sex(const std::string& cell) {
    std::string low = lower(trim(cell));
    if (low == "m" || low == "male" || low == "0") return Sex::Male;
    if (low == "f" || low == "female" || low == "1") return Sex::Female;
    return std::nullopt;
}

struct DemographicColumns {
    int id, age, sex;
};

DemographicColumns require_demographics(const CsvTable& table, const std::string& path) {
    DemographicColumns cols{table.column("participant_id"), table.column("age"),
                            table.column("sex")};
    for (const auto& [idx, name] : {std::pair<int, const char*>{cols.id, "participant_id"},
                                    std::pair<int, const char*>{cols.age, "age"},
                                    std::pair<int, const char*>{cols.sex, "sex"}})
        if (idx < 0) throw MissingColumn(std::string(name) + " in " + path);
    return cols;
}

// Pulls participant + selected feature columns out of a raw CSV. Feature cell
// policy differs per caller: fundus rows die on garbage, lipid cells degrade
// to missing.
FeatureTable extract_rows(const CsvTable& raw, const DemographicColumns& demo,
                          const std::vector<int>& feature_cols,
                          const std::vector<std::string>& feature_names, bool reject_bad_cells) {
    FeatureTable out;
    out.feature_names = feature_names;
    std::unordered_set<std::string> seen_ids;

    for (size_t ri = 0; ri < raw.rows.size(); ++ri) {
        const auto& row = raw.rows[ri];
        auto cell = [&](int c) -> std::string {
            return c >= 0 && c < static_cast<int>(row.size()) ? row[static_cast<size_t>(c)] : "";
        };
        std::string line = "row " + std::to_string(ri + 2); // 1-based, after header

        std::string id = trim(cell(demo.id));
        if (id.empty()) {
            out.rejected.push_back(line + ": empty participant_id");
            continue;
        }
        if (!seen_ids.insert(id).second) throw DuplicateParticipant(id);

        CellValue age = parse_cell(cell(demo.age));
        if (age.kind != CellKind::Number || !(age.value > 0.0) || !(age.value < 120.0)) {
            out.rejected.push_back(line + " (" + id + "): missing or out-of-range age");
            continue;
        }
        std::optional<Sex> sex = parse_sex(cell(demo.sex));
        if (!sex) {
            out.rejected.push_back(line + " (" + id + "): unrecognized sex value");
            continue;
        }

        std::vector<double> vals(feature_cols.size(), kNaN);
        bool bad = false;
        for (size_t fi = 0; fi < feature_cols.size(); ++fi) {
            CellValue v = parse_cell(cell(feature_cols[fi]));
            if (v.kind == CellKind::Number) {
                vals[fi] = v.value;
            } else if (v.kind == CellKind::Invalid) {
                if (reject_bad_cells) {
                    out.rejected.push_back(line + " (" + id + "): non-numeric value in " +
                                           feature_names[fi]);
                    bad = true;
                    break;
                }
                log::warn("treating non-numeric cell as missing: ", id, " ", feature_names[fi]);
            }
        }
        if (bad) continue;

        out.participants.push_back({id, age.value, *sex});
        out.values.push_back(std::move(vals));
    }
    return out;
}

} // namespace

const char* sex_label(Sex s) { return s == Sex::Male ? "M" : "F"; }

const std::vector<std::string>& lipid_prefixes() {
    static const std::vector<std::string> prefixes = {
        "tag_", "dag_", "cer_", "pc_", "pe_", "ps_", "pg_", "pi_", "sm_",
        "lysopc_", "lysope_", "glccer_", "laccer_", "fa_", "acca_", "gsl_"};
    return prefixes;
}

const std::vector<std::string>& lipid_exact_names() {
    static const std::vector<std::string> names = {"coenzyme_q10", "22:6_cholesteryl_ester"};
    return names;
}

bool lipid_name_recognized(const std::string& name) {
    std::string low = lower(name);
    for (const auto& exact : lipid_exact_names())
        if (low == exact) return true;
    for (const auto& prefix : lipid_prefixes())
        if (low.rfind(prefix, 0) == 0) return true;
    return false;
}

FeatureTable parse_fundus_csv(const std::string& path) {
    CsvTable raw = read_csv(path);
    DemographicColumns demo = require_demographics(raw, path);

    std::vector<int> cols;
    for (const auto& name : morpho::feature_names()) {
        int c = raw.column(name);
        if (c < 0) throw MissingColumn(name + " in " + path);
        cols.push_back(c);
    }
    FeatureTable table = extract_rows(raw, demo, cols, morpho::feature_names(), true);
    for (const auto& reason : table.rejected) log::warn("fundus table: rejected ", reason);
    return table;
}

FeatureTable parse_lipid_csv(const std::string& path, bool apply_log10) {
    CsvTable raw = read_csv(path);
    DemographicColumns demo = require_demographics(raw, path);

    std::vector<int> cols;
    std::vector<std::string> names;
    int warnings = 0;
    for (size_t c = 0; c < raw.header.size(); ++c) {
        int ci = static_cast<int>(c);
        if (ci == demo.id || ci == demo.age || ci == demo.sex) continue;
        const std::string& name = raw.header[c];
        if (trim(name).empty()) continue;
        if (!lipid_name_recognized(name)) {
            ++warnings;
            log::warn("lipid column with unrecognized subclass prefix: ", name);
        }
        cols.push_back(ci);
        names.push_back(name);
    }
    if (cols.empty()) throw NoLipidColumns(path);

    FeatureTable table = extract_rows(raw, demo, cols, names, false);
    table.unknown_prefix_warnings = warnings;
    if (apply_log10)
        for (auto& row : table.values)
            for (double& v : row) v = v > 0.0 ? std::log10(v) : kNaN;
    for (const auto& reason : table.rejected) log::warn("lipid table: rejected ", reason);
    return table;
}

MergedCohort merge_cohort(const FeatureTable& fundus, const FeatureTable& lipids) {
    MergedCohort out;
    out.fundus_names = fundus.feature_names;
    out.lipid_names = lipids.feature_names;
    out.lipid_name_warnings = lipids.unknown_prefix_warnings;

    std::unordered_map<std::string, size_t> lipid_index;
    for (size_t i = 0; i < lipids.participants.size(); ++i)
        lipid_index.emplace(lipids.participants[i].id, i);

    std::vector<size_t> order(fundus.participants.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return fundus.participants[a].id < fundus.participants[b].id;
    });

    std::unordered_set<std::string> joined_ids;
    for (size_t fi : order) {
        const Participant& fp = fundus.participants[fi];
        auto it = lipid_index.find(fp.id);
        if (it == lipid_index.end()) {
            ++out.n_fundus_only;
            continue;
        }
        const Participant& lp = lipids.participants[it->second];
        if (std::abs(fp.age - lp.age) > 1.0) {
            out.rejected_reasons.push_back(fp.id + ": age mismatch (" +
                                           format_double(fp.age) + " vs " +
                                           format_double(lp.age) + ")");
            continue;
        }
        if (fp.sex != lp.sex) {
            out.rejected_reasons.push_back(fp.id + ": sex mismatch");
            continue;
        }
        joined_ids.insert(fp.id);
        out.participants.push_back(fp); // fundus-table age wins for joined rows
        out.fundus.push_back(fundus.values[fi]);
        out.lipids.push_back(lipids.values[it->second]);
    }
    out.n_joined = out.participants.size();
    for (const auto& lp : lipids.participants)
        if (!joined_ids.count(lp.id)) ++out.n_lipid_only;

    if (out.n_joined == 0) throw EmptyJoin("no participant_id present in both tables survived");
    log::info("merged cohort: ", out.n_joined, " joined, ", out.n_fundus_only,
              " fundus-only, ", out.n_lipid_only, " lipid-only, ",
              out.rejected_reasons.size(), " rejected");
    return out;
}

std::vector<ColumnSummary> summarize(const std::vector<std::string>& names,
                                     const std::vector<std::vector<double>>& rows,
                                     const std::vector<Sex>& sex) {
    std::vector<ColumnSummary> out;
    out.reserve(names.size());
    for (size_t c = 0; c < names.size(); ++c) {
        ColumnSummary summary;
        summary.column = names[c];
        auto fill = [&](StratumStat& st, auto include) {
            double sum = 0.0;
            size_t n = 0;
            for (size_t r = 0; r < rows.size(); ++r) {
                double v = c < rows[r].size() ? rows[r][c] : kNaN;
                if (std::isnan(v) || !include(r)) continue;
                sum += v;
                ++n;
            }
            st.n = n;
            if (n == 0) return;
            st.mean = sum / double(n);
            if (n >= 2) {
                double ss = 0.0;
                for (size_t r = 0; r < rows.size(); ++r) {
                    double v = c < rows[r].size() ? rows[r][c] : kNaN;
                    if (std::isnan(v) || !include(r)) continue;
                    ss += (v - st.mean) * (v - st.mean);
                }
                st.sd = std::sqrt(ss / double(n - 1));
                st.sd_defined = true;
            }
        };
        fill(summary.male, [&](size_t r) { return sex[r] == Sex::Male; });
        fill(summary.female, [&](size_t r) { return sex[r] == Sex::Female; });
        fill(summary.all, [&](size_t) { return true; });
        out.push_back(std::move(summary));
    }
    return out;
}

std::vector<ColumnSummary> summarize(const FeatureTable& table) {
    std::vector<Sex> sex;
    sex.reserve(table.participants.size());
    for (const auto& p : table.participants) sex.push_back(p.sex);
    return summarize(table.feature_names, table.values, sex);
}

void write_cohort_csv(const std::string& path, const MergedCohort& cohort) {
    CsvTable table;
    table.header = {"participant_id", "age", "sex"};
    for (const auto& n : cohort.fundus_names) table.header.push_back(n);
    for (const auto& n : cohort.lipid_names) table.header.push_back(n);
    for (size_t r = 0; r < cohort.participants.size(); ++r) {
        std::vector<std::string> row;
        row.reserve(table.header.size());
        row.push_back(cohort.participants[r].id);
        row.push_back(format_double(cohort.participants[r].age));
        row.push_back(sex_label(cohort.participants[r].sex));
        for (double v : cohort.fundus[r]) row.push_back(format_double(v));
        for (double v : cohort.lipids[r]) row.push_back(format_double(v));
        table.rows.push_back(std::move(row));
    }
    write_csv(path, table);
}

void write_cohort_sidecar(const std::string& path, const MergedCohort& cohort) {
    nlohmann::ordered_json j;
    j["n_joined"] = cohort.n_joined;
    j["n_fundus_only"] = cohort.n_fundus_only;
    j["n_lipid_only"] = cohort.n_lipid_only;
    j["n_fundus_features"] = cohort.fundus_names.size();
    j["n_lipid_features"] = cohort.lipid_names.size();
    j["lipid_name_warnings"] = cohort.lipid_name_warnings;
    j["rejected"] = cohort.rejected_reasons;
    write_text_file(path, j.dump(2) + "\n");
}

} // namespace oculolipid::cohort
