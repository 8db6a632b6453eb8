// Command-line driver: extract -> analyze -> report, plus a synthetic-cohort
// generator. Exit codes: 0 success, 1 usage, 2 data, 3 internal.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oculolipid/cohort.hpp"
#include "oculolipid/config.hpp"
#include "oculolipid/csv.hpp"
#include "oculolipid/errors.hpp"
#include "oculolipid/log.hpp"
#include "oculolipid/morphometry.hpp"
#include "oculolipid/parallel.hpp"
#include "oculolipid/pipeline.hpp"
#include "oculolipid/raster.hpp"
#include "oculolipid/report.hpp"
#include "oculolipid/stats.hpp"

namespace fs = std::filesystem;
using namespace oculolipid;

namespace {

std::string out_dir(const Config& cfg) { return cfg.get("out_dir", "out"); }

int jobs_of(const Config& cfg) { return cfg.get_int("jobs", 0); }

morpho::MorphometryConfig morph_config(const Config& cfg) {
    morpho::MorphometryConfig m;
    m.min_segment_length_px = cfg.get_double("min_segment_length_px", m.min_segment_length_px);
    m.gaussian_sigma_samples = cfg.get_double("gaussian_sigma_samples", m.gaussian_sigma_samples);
    m.box_ladder_max_divisor = cfg.get_int("box_ladder_max_divisor", m.box_ladder_max_divisor);
    m.width_scale_factor = cfg.get_double("width_scale_factor", m.width_scale_factor);
    std::string variant = lower(cfg.get("grisan_variant", "n_ratio"));
    if (variant == "n_ratio") {
        m.grisan_variant = morpho::GrisanVariant::NRatio;
    } else if (variant == "n_minus_one") {
        m.grisan_variant = morpho::GrisanVariant::NMinusOne;
    } else {
        throw Error(ErrorKind::Usage, "grisan_variant must be n_ratio or n_minus_one, got '" +
                                          variant + "'");
    }
    m.hart_raw_integral = cfg.get_bool("hart_raw_integral", false);
    return m;
}

void validate_common(const Config& cfg) {
    double q = cfg.get_double("q", 0.05);
    if (!(q > 0.0 && q < 1.0))
        throw Error(ErrorKind::Usage, "q must lie in (0,1), got " + format_double(q));
    double ci = cfg.get_double("ci_level", 0.95);
    if (!(ci > 0.0 && ci < 1.0))
        throw Error(ErrorKind::Usage, "ci_level must lie in (0,1), got " + format_double(ci));
    std::string scope = cfg.get("fdr_scope", "global");
    if (scope != "global" && scope != "per_feature")
        throw Error(ErrorKind::Usage, "fdr_scope must be global or per_feature, got '" + scope +
                                          "'");
}

void write_feature_table_csv(const std::string& path, const cohort::FeatureTable& table) {
    CsvTable csv;
    csv.header = {"participant_id", "age", "sex"};
    for (const auto& name : table.feature_names) csv.header.push_back(name);
    for (size_t r = 0; r < table.participants.size(); ++r) {
        std::vector<std::string> row = {table.participants[r].id,
                                        format_double(table.participants[r].age),
                                        cohort::sex_label(table.participants[r].sex)};
        for (double v : table.values[r]) row.push_back(format_double(v));
        csv.rows.push_back(std::move(row));
    }
    write_csv(path, csv);
}

// ----- extract -----

struct MaskPaths {
    std::string artery;
    std::string vein;
};

struct Demographics {
    std::string age = "NA";
    std::string sex = "NA";
};

std::map<std::string, Demographics> load_demographics(const Config& cfg) {
    std::map<std::string, Demographics> demo;
    auto path = cfg.get_optional("demographics_csv");
    if (!path) return demo;
    CsvTable table = read_csv(*path);
    int id_col = table.column("participant_id");
    int age_col = table.column("age");
    int sex_col = table.column("sex");
    if (id_col < 0 || age_col < 0 || sex_col < 0)
        throw MissingColumn("demographics_csv needs participant_id, age, sex");
    for (const auto& row : table.rows) {
        std::string id = trim(row[size_t(id_col)]);
        if (id.empty()) continue;
        Demographics d;
        d.age = trim(row[size_t(age_col)]);
        d.sex = trim(row[size_t(sex_col)]);
        if (d.age.empty()) d.age = "NA";
        if (d.sex.empty()) d.sex = "NA";
        demo[id] = d;
    }
    return demo;
}

int cmd_extract(const Config& cfg) {
    std::string masks_dir = cfg.get("masks_dir", "");
    if (masks_dir.empty())
        throw Error(ErrorKind::Usage, "extract requires masks_dir=<directory> in the config");
    if (!fs::is_directory(masks_dir))
        throw Error(ErrorKind::Data, "masks_dir is not a directory: " + masks_dir);

    // <participant_id>_<L|R>_<artery|vein>.png; ids may contain underscores,
    // so the class and eye tokens are read from the right.
    std::map<std::pair<std::string, std::string>, MaskPaths> groups;
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(masks_dir))
        if (entry.is_regular_file()) names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());

    for (const auto& name : names) {
        if (name.size() < 4 || name.substr(name.size() - 4) != ".png") {
            log::debug("extract: ignoring non-PNG file ", name);
            continue;
        }
        std::vector<std::string> tokens = split(name.substr(0, name.size() - 4), '_');
        if (tokens.size() < 3) {
            log::warn("extract: unrecognized mask name ", name);
            continue;
        }
        std::string cls = tokens.back();
        std::string eye = tokens[tokens.size() - 2];
        if ((eye != "L" && eye != "R") || (cls != "artery" && cls != "vein")) {
            log::warn("extract: unrecognized mask name ", name);
            continue;
        }
        std::string id = tokens[0];
        for (size_t t = 1; t + 2 < tokens.size(); ++t) id += "_" + tokens[t];
        auto& paths = groups[{id, eye}];
        (cls == "artery" ? paths.artery : paths.vein) = (fs::path(masks_dir) / name).string();
    }
    if (groups.empty())
        throw Error(ErrorKind::Data, "no mask files matched <id>_<L|R>_<artery|vein>.png in " +
                                         masks_dir);

    morpho::MorphometryConfig mcfg = morph_config(cfg);
    std::vector<std::pair<std::string, std::string>> keys;
    std::vector<MaskPaths> paths;
    for (const auto& [key, value] : groups) {
        keys.push_back(key);
        paths.push_back(value);
    }

    std::vector<std::optional<morpho::MorphometricFeatureSet>> per_eye(keys.size());
    std::vector<std::string> failures(keys.size());
    parallel_for(keys.size(), jobs_of(cfg), [&](size_t i) {
        try {
            morpho::SegmentationMask mask;
            mask.participant_id = keys[i].first;
            mask.eye = keys[i].second == "L" ? morpho::Eye::Left : morpho::Eye::Right;
            if (!paths[i].artery.empty()) mask.artery = morpho::read_mask_png(paths[i].artery);
            if (!paths[i].vein.empty()) mask.vein = morpho::read_mask_png(paths[i].vein);
            // a missing class file counts as an empty mask of the same size
            if (mask.artery.empty_dims() && !mask.vein.empty_dims())
                mask.artery = morpho::BitRaster(mask.vein.width(), mask.vein.height());
            if (mask.vein.empty_dims() && !mask.artery.empty_dims())
                mask.vein = morpho::BitRaster(mask.artery.width(), mask.artery.height());
            if (!mask.valid_dims())
                throw Error(ErrorKind::Data, "artery/vein rasters disagree on dimensions");
            per_eye[i] = morpho::extract_features(mask, mcfg);
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    });

    std::map<std::string, std::pair<std::optional<morpho::MorphometricFeatureSet>,
                                    std::optional<morpho::MorphometricFeatureSet>>>
        by_participant;
    size_t n_eyes_ok = 0;
    for (size_t i = 0; i < keys.size(); ++i) {
        if (!failures[i].empty()) {
            log::error("extract: skipping ", keys[i].first, " eye ", keys[i].second, ": ",
                       failures[i]);
            continue;
        }
        ++n_eyes_ok;
        auto& slot = by_participant[keys[i].first];
        (keys[i].second == "L" ? slot.first : slot.second) = std::move(per_eye[i]);
        for (const auto& note : (keys[i].second == "L" ? slot.first : slot.second)->notes)
            log::info("extract: ", keys[i].first, " ", keys[i].second, ": ", note);
    }
    if (by_participant.empty())
        throw Error(ErrorKind::Data, "extract produced no usable participants");

    auto demo = load_demographics(cfg);
    CsvTable csv;
    csv.header = {"participant_id", "age", "sex"};
    for (const auto& name : morpho::feature_names()) csv.header.push_back(name);
    for (const auto& [id, eyes] : by_participant) {
        morpho::MorphometricFeatureSet merged = morpho::average_bilateral(
            eyes.first ? &*eyes.first : nullptr, eyes.second ? &*eyes.second : nullptr);
        Demographics d;
        auto it = demo.find(id);
        if (it != demo.end()) d = it->second;
        std::vector<std::string> row = {id, d.age, d.sex};
        for (size_t f = 0; f < morpho::kFeatureCount; ++f)
            row.push_back(merged.valid[f] ? format_double(merged.values[f]) : "NA");
        csv.rows.push_back(std::move(row));
    }

    fs::create_directories(out_dir(cfg));
    std::string out_path = cfg.get("extract_out", out_dir(cfg) + "/fundus_features.csv");
    write_csv(out_path, csv);
    log::info("extract: wrote ", csv.rows.size(), " participants (", n_eyes_ok, " eyes) to ",
              out_path);
    return 0;
}

// ----- analyze -----

struct LoadedCohort {
    cohort::MergedCohort merged;
    std::string fundus_csv;
    std::string lipid_csv;
};

LoadedCohort load_cohort(const Config& cfg) {
    std::string fundus_csv = cfg.get("fundus_csv", "");
    std::string lipid_csv = cfg.get("lipid_csv", "");
    if (fundus_csv.empty() || lipid_csv.empty())
        throw Error(ErrorKind::Usage,
                    "analysis requires fundus_csv=<path> and lipid_csv=<path> in the config");
    cohort::FeatureTable fundus = cohort::parse_fundus_csv(fundus_csv);
    cohort::FeatureTable lipids =
        cohort::parse_lipid_csv(lipid_csv, cfg.get_bool("lipid_log10", false));
    for (const auto& reason : fundus.rejected) log::warn("fundus row rejected: ", reason);
    for (const auto& reason : lipids.rejected) log::warn("lipid row rejected: ", reason);
    LoadedCohort loaded{cohort::merge_cohort(fundus, lipids), fundus_csv, lipid_csv};
    for (const auto& reason : loaded.merged.rejected_reasons)
        log::warn("join rejected: ", reason);
    return loaded;
}

int cmd_analyze(const Config& cfg) {
    LoadedCohort in = load_cohort(cfg);
    double q = cfg.get_double("q", 0.05);
    double r_min = cfg.get_double("r_min", 0.1);
    double ci_level = cfg.get_double("ci_level", 0.95);
    std::string scope = cfg.get("fdr_scope", "global");
    int min_degree = cfg.get_int("min_degree", 5);

    pipeline::DemographicProfile profile =
        pipeline::profile_demographics(in.merged, q, r_min, ci_level);
    stats::AdjustedResultSet sweep =
        pipeline::lipid_retina_sweep(in.merged, q, scope, jobs_of(cfg), nullptr, ci_level);
    for (const auto& skip : sweep.skipped) log::warn("pair skipped: ", skip);

    size_t n_significant = 0;
    for (bool s : sweep.significant) n_significant += s ? 1 : 0;

    std::string out = out_dir(cfg);
    fs::create_directories(out);
    write_text_file(out + "/associations.csv", stats::associations_csv(sweep));
    write_text_file(out + "/network.json",
                    pipeline::network_json(pipeline::build_network(sweep, min_degree)));
    cohort::write_cohort_csv(out + "/cohort.csv", in.merged);
    cohort::write_cohort_sidecar(out + "/cohort.json", in.merged);

    pipeline::ManifestCounts counts;
    counts.n_participants = in.merged.participants.size();
    counts.n_tests = sweep.results.size();
    counts.n_skipped = sweep.skipped.size();
    counts.n_significant = n_significant;
    write_text_file(out + "/run_manifest.json",
                    pipeline::manifest_json({in.fundus_csv, in.lipid_csv}, cfg, counts, scope));

    log::info("analyze: n=", counts.n_participants, ", tests=", counts.n_tests,
              ", significant=", counts.n_significant, " at q=", format_double(q), " (",
              scope, " FDR), retained demographic features=", profile.retained.size());
    return 0; // zero significant results is a valid outcome
}

// ----- report -----

double require_number(const CsvTable& table, size_t row, int col, const std::string& what) {
    CellValue cell = parse_cell(table.rows[row][size_t(col)]);
    if (cell.kind != CellKind::Number)
        throw Error(ErrorKind::Data, "associations.csv row " + std::to_string(row + 2) +
                                         ": non-numeric " + what);
    return cell.value;
}

stats::AdjustedResultSet load_associations(const std::string& path, double q,
                                           const std::string& scope) {
    CsvTable table = read_csv(path);
    const char* needed[] = {"fundus_feature", "lipid_feature", "r",         "CI_lower",
                            "CI_upper",       "P-value",       "P-adjusted", "n"};
    std::map<std::string, int> col;
    for (const char* name : needed) {
        int c = table.column(name);
        if (c < 0) throw MissingColumn(std::string(name) + " in " + path);
        col[name] = c;
    }
    stats::AdjustedResultSet set;
    set.q = q;
    set.fdr_scope = scope;
    for (size_t r = 0; r < table.rows.size(); ++r) {
        stats::CorrelationResult res;
        res.x_name = table.rows[r][size_t(col["fundus_feature"])];
        res.y_name = table.rows[r][size_t(col["lipid_feature"])];
        res.covariate_names = {"age", "sex"};
        res.r = require_number(table, r, col["r"], "r");
        res.ci_lower = require_number(table, r, col["CI_lower"], "CI_lower");
        res.ci_upper = require_number(table, r, col["CI_upper"], "CI_upper");
        res.p = require_number(table, r, col["P-value"], "P-value");
        res.n_used = size_t(require_number(table, r, col["n"], "n"));
        res.df = long(res.n_used) - 4;
        double adj = require_number(table, r, col["P-adjusted"], "P-adjusted");
        set.results.push_back(std::move(res));
        set.p_adjusted.push_back(adj);
        set.significant.push_back(adj < q);
    }
    return set;
}

std::vector<std::string> bubble_fundus_list(const Config& cfg,
                                            const stats::AdjustedResultSet& set) {
    auto override_list = cfg.get_optional("report_bubble_features");
    if (override_list) {
        std::vector<std::string> names;
        for (auto& name : split(*override_list, ';'))
            if (!trim(name).empty()) names.push_back(trim(name));
        return names;
    }
    std::vector<std::string> names;
    for (const auto& res : set.results)
        if (names.empty() || names.back() != res.x_name) names.push_back(res.x_name);
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    return names;
}

std::vector<std::string> bubble_lipid_list(const Config& cfg,
                                           const stats::AdjustedResultSet& set) {
    auto override_list = cfg.get_optional("report_bubble_lipids");
    if (override_list) {
        std::vector<std::string> names;
        for (auto& name : split(*override_list, ';'))
            if (!trim(name).empty()) names.push_back(trim(name));
        return names;
    }
    // strongest lipids first: any significant hit beats none, then max |r|
    std::map<std::string, std::pair<int, double>> rank;
    for (size_t i = 0; i < set.results.size(); ++i) {
        auto& entry = rank[set.results[i].y_name];
        entry.first = std::max(entry.first, set.significant[i] ? 1 : 0);
        entry.second = std::max(entry.second, std::abs(set.results[i].r));
    }
    std::vector<std::pair<std::string, std::pair<int, double>>> order(rank.begin(), rank.end());
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second.first != b.second.first) return a.second.first > b.second.first;
        if (a.second.second != b.second.second) return a.second.second > b.second.second;
        return a.first < b.first;
    });
    size_t cap = size_t(cfg.get_int("report_bubble_max_lipids", 30));
    std::vector<std::string> names;
    for (size_t i = 0; i < order.size() && i < cap; ++i) names.push_back(order[i].first);
    std::sort(names.begin(), names.end());
    return names;
}

int cmd_report(const Config& cfg) {
    std::string out = out_dir(cfg);
    std::string assoc_path = out + "/associations.csv";
    if (!fs::exists(assoc_path))
        throw Error(ErrorKind::Data,
                    "analysis outputs missing: " + assoc_path + " (run analyze first)");

    double q = cfg.get_double("q", 0.05);
    double r_min = cfg.get_double("r_min", 0.1);
    double ci_level = cfg.get_double("ci_level", 0.95);
    std::string scope = cfg.get("fdr_scope", "global");
    stats::AdjustedResultSet set = load_associations(assoc_path, q, scope);

    LoadedCohort in = load_cohort(cfg);
    pipeline::DemographicProfile profile =
        pipeline::profile_demographics(in.merged, q, r_min, ci_level);

    fs::create_directories(out + "/figures");
    fs::create_directories(out + "/tables");

    std::vector<report::Figure> figures;
    figures.push_back(
        report::render_bubble(set, bubble_fundus_list(cfg, set), bubble_lipid_list(cfg, set)));
    figures.push_back(report::render_forest(
        pipeline::top_associations(set, size_t(cfg.get_int("top_k", 20)))));
    figures.push_back(
        report::render_network(pipeline::build_network(set, cfg.get_int("min_degree", 5))));
    figures.push_back(report::render_count_bars(set));
    figures.push_back(report::render_demographic_panels(profile, in.merged,
                                                        cfg.get_bool("report_kde", false)));
    for (const auto& fig : figures) {
        write_text_file(out + "/figures/" + fig.name + ".svg", fig.svg);
        write_text_file(out + "/figures/" + fig.name + ".json", fig.data_json);
    }
    write_text_file(out + "/tables/associations.csv", stats::associations_csv(set));
    write_text_file(out + "/tables/summary_table1.csv", report::summary_table_csv(in.merged));
    log::info("report: wrote ", figures.size(), " figures and 2 tables under ", out);
    return 0;
}

// ----- simulate -----

int cmd_simulate(const Config& cfg) {
    pipeline::SimulationSpec spec = pipeline::spec_from_config(cfg);
    pipeline::SimulatedCohort sim = pipeline::simulate_cohort(spec);
    std::string out = out_dir(cfg);
    fs::create_directories(out);
    write_feature_table_csv(out + "/sim_fundus.csv", sim.fundus);
    write_feature_table_csv(out + "/sim_lipids.csv", sim.lipids);
    write_text_file(out + "/sim_truth.json", pipeline::ground_truth_json(spec));
    log::info("simulate: wrote ", sim.fundus.participants.size(), " fundus rows and ",
              sim.lipids.participants.size(), " lipid rows (seed ", spec.seed, ") under ", out);
    return 0;
}

int cmd_all(Config cfg) {
    if (cfg.get_bool("simulate", false)) {
        cmd_simulate(cfg);
        cfg.set("fundus_csv", out_dir(cfg) + "/sim_fundus.csv");
        cfg.set("lipid_csv", out_dir(cfg) + "/sim_lipids.csv");
    } else if (cfg.has("masks_dir")) {
        cmd_extract(cfg);
        cfg.set("fundus_csv", cfg.get("extract_out", out_dir(cfg) + "/fundus_features.csv"));
    }
    cmd_analyze(cfg);
    cmd_report(cfg);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"retinal microvascular morphometry and serum lipidomic association pipeline"};
    app.require_subcommand(1);

    std::string config_path, fdr_scope, out_path;
    int jobs = 0;
    long long seed = 1;
    double q = 0.05;
    CLI::Option* opt_config =
        app.add_option("--config", config_path, "flat key=value configuration file");
    CLI::Option* opt_jobs =
        app.add_option("--jobs", jobs, "worker threads (0 = all available cores)");
    CLI::Option* opt_seed = app.add_option("--seed", seed, "simulation seed");
    CLI::Option* opt_q = app.add_option("--q", q, "FDR significance level");
    CLI::Option* opt_scope = app.add_option("--fdr-scope", fdr_scope, "global | per_feature");
    CLI::Option* opt_out = app.add_option("--out", out_path, "output directory");

    CLI::App* sub_extract =
        app.add_subcommand("extract", "morphometry over a directory of segmentation masks");
    CLI::App* sub_analyze =
        app.add_subcommand("analyze", "merge cohort tables and run the association sweep");
    CLI::App* sub_report = app.add_subcommand("report", "render figures and tables");
    CLI::App* sub_simulate = app.add_subcommand("simulate", "write a synthetic cohort");
    CLI::App* sub_all = app.add_subcommand("all", "simulate/extract, analyze, then report");
    for (CLI::App* sub : {sub_extract, sub_analyze, sub_report, sub_simulate, sub_all})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        Config cfg;
        if (opt_config->count()) cfg = Config::from_file(config_path);
        // flags win over config-file values
        if (opt_jobs->count()) cfg.set("jobs", std::to_string(jobs));
        if (opt_seed->count()) cfg.set("seed", std::to_string(seed));
        if (opt_q->count()) cfg.set("q", format_double(q));
        if (opt_scope->count()) cfg.set("fdr_scope", fdr_scope);
        if (opt_out->count()) cfg.set("out_dir", out_path);
        validate_common(cfg);

        if (app.got_subcommand(sub_extract)) return cmd_extract(cfg);
        if (app.got_subcommand(sub_analyze)) return cmd_analyze(cfg);
        if (app.got_subcommand(sub_report)) return cmd_report(cfg);
        if (app.got_subcommand(sub_simulate)) return cmd_simulate(cfg);
        return cmd_all(cfg);
    } catch (const Error& e) {
        log::error(e.what());
        switch (e.kind()) {
            case ErrorKind::Usage: return 1;
            case ErrorKind::Data: return 2;
            case ErrorKind::Internal: return 3;
        }
        return 3;
    } catch (const std::exception& e) {
        log::error("internal error: ", e.what());
        return 3;
    }
}
