#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "oculolipid/csv.hpp"
#include "oculolipid/digest.hpp"
#include "oculolipid/raster.hpp"

namespace fs = std::filesystem;
using namespace oculolipid;
using fixtures::fresh_dir;
using fixtures::run_cli;

namespace {

std::string write_config(const std::string& dir, const std::string& body) {
    std::string path = dir + "/run.cfg";
    write_text_file(path, body);
    return path;
}

// relative paths of every regular file under root, sorted
std::vector<std::string> tree_of(const std::string& root) {
    std::vector<std::string> rel;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file())
            rel.push_back(fs::relative(entry.path(), root).string());
    std::sort(rel.begin(), rel.end());
    return rel;
}

} // namespace

TEST_CASE("usage errors exit 1 and help exits 0") {
    CHECK(run_cli("").exit_code == 1); // a subcommand is required
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli("bogus-subcommand").exit_code == 1);

    fixtures::CliResult bad_q = run_cli("--q 1.5 simulate");
    CHECK(bad_q.exit_code == 1);
    CHECK(bad_q.output.find("q must lie in (0,1)") != std::string::npos);

    fixtures::CliResult bad_scope = run_cli("--fdr-scope sideways simulate");
    CHECK(bad_scope.exit_code == 1);
    CHECK(bad_scope.output.find("fdr_scope") != std::string::npos);
}

TEST_CASE("simulate writes a reproducible synthetic cohort") {
    std::string dir = fresh_dir("cli_sim");
    std::string cfg = write_config(dir, "sim_n=60\nsim_lipids=8\n");

    fixtures::CliResult run = run_cli("simulate --config " + cfg + " --seed 7 --out " + dir +
                                      "/a");
    REQUIRE(run.exit_code == 0);
    CHECK(fs::exists(dir + "/a/sim_fundus.csv"));
    CHECK(fs::exists(dir + "/a/sim_lipids.csv"));
    CHECK(fs::exists(dir + "/a/sim_truth.json"));
    CHECK(read_csv(dir + "/a/sim_fundus.csv").rows.size() == 60);
    auto truth = nlohmann::json::parse(read_text_file(dir + "/a/sim_truth.json"));
    CHECK(truth["seed"] == 7);
    CHECK(truth["n"] == 60);

    REQUIRE(run_cli("simulate --config " + cfg + " --seed 7 --out " + dir + "/b").exit_code ==
            0);
    for (const char* name : {"sim_fundus.csv", "sim_lipids.csv", "sim_truth.json"})
        CHECK(sha256_file_hex(dir + "/a/" + name) == sha256_file_hex(dir + "/b/" + name));

    // a different seed must actually change the data
    REQUIRE(run_cli("simulate --config " + cfg + " --seed 8 --out " + dir + "/c").exit_code ==
            0);
    CHECK(sha256_file_hex(dir + "/a/sim_fundus.csv") !=
          sha256_file_hex(dir + "/c/sim_fundus.csv"));
}

TEST_CASE("analyze then report produce the full artifact set") {
    std::string dir = fresh_dir("cli_pipeline");
    std::string cfg = write_config(dir, "sim_n=80\nsim_lipids=6\nseed=11\nout_dir=" + dir +
                                            "/out\n");
    REQUIRE(run_cli("simulate --config " + cfg).exit_code == 0);

    std::string full_cfg = write_config(
        dir + "/out", "seed=11\nout_dir=" + dir + "/out\nfundus_csv=" + dir +
                          "/out/sim_fundus.csv\nlipid_csv=" + dir + "/out/sim_lipids.csv\n");
    fixtures::CliResult analyze = run_cli("analyze --config " + full_cfg);
    REQUIRE(analyze.exit_code == 0); // exit 0 even with nothing significant

    CsvTable assoc = read_csv(dir + "/out/associations.csv");
    CHECK(assoc.rows.size() == 18 * 6);
    CHECK(fs::exists(dir + "/out/network.json"));
    CHECK(fs::exists(dir + "/out/cohort.csv"));
    CHECK(fs::exists(dir + "/out/cohort.json"));
    auto manifest = nlohmann::json::parse(read_text_file(dir + "/out/run_manifest.json"));
    CHECK(manifest["counts"]["n_tests"] == 18 * 6);
    CHECK(manifest["counts"]["n_participants"] == 80);

    fixtures::CliResult report = run_cli("report --config " + full_cfg);
    REQUIRE(report.exit_code == 0);
    for (const char* fig : {"bubble", "forest", "network", "count_bars", "demographics"}) {
        CHECK(fs::exists(dir + "/out/figures/" + std::string(fig) + ".svg"));
        CHECK(fs::exists(dir + "/out/figures/" + std::string(fig) + ".json"));
    }
    CHECK(fs::exists(dir + "/out/tables/summary_table1.csv"));
    // the re-emitted table is byte-identical to the analyze output
    CHECK(sha256_file_hex(dir + "/out/tables/associations.csv") ==
          sha256_file_hex(dir + "/out/associations.csv"));
}

TEST_CASE("report refuses to run before analyze") {
    std::string dir = fresh_dir("cli_order");
    std::string cfg = write_config(dir, "out_dir=" + dir + "/out\n");
    fixtures::CliResult run = run_cli("report --config " + cfg);
    CHECK(run.exit_code == 2);
    CHECK(run.output.find("run analyze first") != std::string::npos);
}

TEST_CASE("schema violations exit 2 and name the offending column") {
    std::string dir = fresh_dir("cli_schema");
    // fundus table missing its age column
    write_text_file(dir + "/fundus.csv",
                    "participant_id,sex,artery_average_width\nP1,M,5.0\nP2,F,6.0\n");
    write_text_file(dir + "/lipids.csv",
                    "participant_id,age,sex,tag_50:1\nP1,50,M,1.2\nP2,60,F,1.4\n");
    std::string cfg = write_config(dir, "fundus_csv=" + dir + "/fundus.csv\nlipid_csv=" + dir +
                                            "/lipids.csv\nout_dir=" + dir + "/out\n");
    fixtures::CliResult run = run_cli("analyze --config " + cfg);
    CHECK(run.exit_code == 2);
    CHECK(run.output.find("age") != std::string::npos);
}

TEST_CASE("the all subcommand is byte-deterministic end to end") {
    std::string base = fresh_dir("cli_all");
    std::string common =
        "simulate=true\nsim_n=150\nsim_lipids=10\nseed=3\n"
        "sim_planted=artery_average_width|tag_32:0|0.35;vein_vessel_density|pc_32:0|-0.3\n";
    std::string cfg_a = write_config(base, common + "out_dir=" + base + "/a\n");
    REQUIRE(run_cli("all --config " + cfg_a).exit_code == 0);

    std::vector<std::string> tree_a = tree_of(base + "/a");
    CHECK(tree_a.size() >= 18); // sim outputs + analyze outputs + figures + tables
    std::map<std::string, std::string> first_digests;
    for (const auto& rel : tree_a) first_digests[rel] = sha256_file_hex(base + "/a/" + rel);

    // rerun with the identical config: every artifact must come back byte-identical
    REQUIRE(run_cli("all --config " + cfg_a).exit_code == 0);
    std::vector<std::string> tree_a2 = tree_of(base + "/a");
    REQUIRE(tree_a2 == tree_a);
    for (const auto& rel : tree_a2)
        CHECK_MESSAGE(sha256_file_hex(base + "/a/" + rel) == first_digests[rel],
                      "file differs between reruns: ", rel);

    // a run into a different directory matches everywhere except the manifest,
    // whose input paths and echoed config legitimately name that directory
    std::string cfg_b = write_config(fresh_dir("cli_all_cfg"),
                                     common + "out_dir=" + base + "/b\n");
    REQUIRE(run_cli("all --config " + cfg_b).exit_code == 0);
    std::vector<std::string> tree_b = tree_of(base + "/b");
    REQUIRE(tree_b == tree_a);
    for (const auto& rel : tree_b)
        if (rel != "run_manifest.json")
            CHECK_MESSAGE(sha256_file_hex(base + "/b/" + rel) == first_digests[rel],
                          "file differs between directories: ", rel);
}

TEST_CASE("extract walks a mask directory and tolerates corrupt files") {
    std::string dir = fresh_dir("cli_extract");
    std::string masks = dir + "/masks";
    fs::create_directories(masks);

    // two participants, both eyes, simple bar vessels
    for (const char* id : {"P_01", "P_02"})
        for (const char* eye : {"L", "R"}) {
            morpho::BitRaster artery = fixtures::bar(120, 90, 10, 20, 90, 5);
            morpho::BitRaster vein = fixtures::bar(120, 90, 10, 50, 90, 7);
            std::string stem = masks + "/" + id + "_" + eye + "_";
            morpho::write_mask_png(stem + "artery.png", artery);
            morpho::write_mask_png(stem + "vein.png", vein);
        }
    // a corrupt PNG and an unrelated file must both be survivable
    write_text_file(masks + "/P_03_L_artery.png", "this is not a png");
    write_text_file(masks + "/notes.txt", "ignore me");
    write_text_file(dir + "/demo.csv", "participant_id,age,sex\nP_01,54,F\nP_02,61,M\n");

    std::string cfg = write_config(dir, "masks_dir=" + masks + "\ndemographics_csv=" + dir +
                                            "/demo.csv\nout_dir=" + dir + "/out\n");
    fixtures::CliResult run = run_cli("extract --config " + cfg);
    REQUIRE(run.exit_code == 0);
    CHECK(run.output.find("skipping P_03") != std::string::npos);

    CsvTable table = read_csv(dir + "/out/fundus_features.csv");
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0][0] == "P_01");
    CHECK(table.rows[0][1] == "54");
    CHECK(table.rows[0][2] == "F");
    CHECK(table.rows[1][2] == "M");
    int width_col = table.column("artery_average_width");
    REQUIRE(width_col >= 0);
    CellValue width = parse_cell(table.rows[0][size_t(width_col)]);
    REQUIRE(width.kind == CellKind::Number);
    CHECK(width.value == doctest::Approx(5.0).epsilon(0.1));

    // the same mask bytes extract to the same feature bytes
    fs::create_directories(dir + "/rerun");
    std::string cfg2 = write_config(dir + "/rerun",
                                    "masks_dir=" + masks + "\ndemographics_csv=" + dir +
                                        "/demo.csv\nout_dir=" + dir + "/out2\n");
    REQUIRE(run_cli("extract --config " + cfg2).exit_code == 0);
    CHECK(sha256_file_hex(dir + "/out/fundus_features.csv") ==
          sha256_file_hex(dir + "/out2/fundus_features.csv"));

    // an empty directory is a data error
    std::string empty = dir + "/empty";
    fs::create_directories(empty);
    std::string cfg_empty = write_config(dir + "/out", "masks_dir=" + empty + "\n");
    CHECK(run_cli("extract --config " + cfg_empty).exit_code == 2);
}

TEST_CASE("OCULOLIPID_LOG=off silences progress lines") {
    std::string dir = fresh_dir("cli_log");
    std::string cfg = write_config(dir, "sim_n=30\nsim_lipids=4\nout_dir=" + dir + "/out\n");
    fixtures::CliResult loud = run_cli("simulate --config " + cfg);
    REQUIRE(loud.exit_code == 0);
    CHECK(loud.output.find("simulate: wrote") != std::string::npos);

    fixtures::CliResult quiet = run_cli("simulate --config " + cfg, "OCULOLIPID_LOG=off");
    REQUIRE(quiet.exit_code == 0);
    CHECK(quiet.output.empty());
}
