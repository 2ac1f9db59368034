#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "segfair/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "segfair_cli_tests";

int run(const std::string& args) {
    const std::string cmd = std::string(SEGFAIR_CLI_PATH) + " " + args + " >/dev/null 2>" +
                            (kRoot / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return std::string((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>());
}

json slurp_json(const fs::path& p) { return json::parse(slurp(p)); }

void write_file(const fs::path& p, const std::string& content) {
    fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << content;
}

// one shared synthetic cohort with a known injected bias
const fs::path kCohort = kRoot / "cohort";

void ensure_cohort() {
    static bool done = false;
    if (done) return;
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
    const int rc = run(
        "synth --n-per-group 8 --grid 32,32,32 "
        "--young-radius-mean 6.0 --young-radius-std 0.4 "
        "--middle-radius-mean 5.5 --middle-radius-std 0.4 "
        "--older-radius-mean 5.0 --older-radius-std 0.4 "
        "--label-bias-young 2 --pred-bias-young -1 --pred-bias-middle -1 "
        "--pred-bias-older -1 --seed 11 --out " +
        kCohort.string());
    REQUIRE(rc == 0);
    done = true;
}

} // namespace

TEST_CASE("synth writes a loadable cohort with masks and metadata") {
    ensure_cohort();
    CHECK(fs::exists(kCohort / "metadata.csv"));
    CHECK(fs::exists(kCohort / "synth_summary.json"));
    CHECK(fs::exists(kCohort / "masks" / "Y0000_gold.sfm"));
    CHECK(fs::exists(kCohort / "masks" / "O0007_pred.sfm"));
    const json summary = slurp_json(kCohort / "synth_summary.json");
    CHECK(summary["schema_version"] == 1);
    CHECK(summary["injected_bias"]["Young"]["label_bias_layers"] == 2.0);
}

TEST_CASE("audit emits the bundle and the biased-ruler comparison") {
    ensure_cohort();
    const fs::path out = kRoot / "audit_a";
    const int rc = run("audit --metadata " + (kCohort / "metadata.csv").string() +
                       " --seed 3 --deterministic --out " + out.string());
    REQUIRE(rc == 0);
    CHECK(fs::exists(out / "cases.csv"));
    CHECK(fs::exists(out / "stats.json"));
    CHECK(fs::exists(out / "audit_pred_vs_gold.svg"));

    const json fairness = slurp_json(out / "fairness.json");
    CHECK(fairness["schema_version"] == 1);
    REQUIRE(fairness.contains("series"));
    REQUIRE(fairness["series"].contains("pred_vs_gold"));
    REQUIRE(fairness["series"].contains("pred_vs_silver"));
    REQUIRE(fairness["series"].contains("silver_vs_gold"));

    // Young silver labels are eroded while predictions are uniformly biased:
    // the observed gap must exceed the true gap in the same bundle
    const auto& cmp = fairness["bias_comparison"];
    REQUIRE_FALSE(cmp.is_null());
    const double gap_true = cmp["gap_true"];
    const double gap_observed = cmp["gap_observed"];
    CHECK(gap_observed > gap_true);
    CHECK(cmp["relative_change"].get<double>() > 0.0);

    // every reported number traces back to a per-case row
    const std::string cases_csv = slurp(out / "cases.csv");
    CHECK(cases_csv.find("Y0000") != std::string::npos);
    CHECK(cases_csv.find("dice_pred_silver") != std::string::npos);
}

TEST_CASE("re-running a command with the same seed is byte-identical") {
    ensure_cohort();
    const fs::path a = kRoot / "det_a", b = kRoot / "det_b";
    REQUIRE(run("audit --metadata " + (kCohort / "metadata.csv").string() +
                " --seed 5 --deterministic --out " + a.string()) == 0);
    REQUIRE(run("audit --metadata " + (kCohort / "metadata.csv").string() +
                " --seed 5 --deterministic --out " + b.string()) == 0);
    for (const char* name : {"cases.csv", "fairness.json", "stats.json",
                             "audit_pred_vs_gold.svg", "audit_pred_vs_silver.svg"})
        REQUIRE(slurp(a / name) == slurp(b / name));

    // without --deterministic the data files still match; SVGs may differ
    // only in the generation timestamp comment
    const fs::path c = kRoot / "det_c";
    REQUIRE(run("audit --metadata " + (kCohort / "metadata.csv").string() +
                " --seed 5 --out " + c.string()) == 0);
    REQUIRE(slurp(a / "cases.csv") == slurp(c / "cases.csv"));
    REQUIRE(slurp(a / "fairness.json") == slurp(c / "fairness.json"));
    const std::string svg = slurp(c / "audit_pred_vs_gold.svg");
    CHECK(svg.find("<!-- generated ") != std::string::npos);
    CHECK(slurp(a / "audit_pred_vs_gold.svg").find("<!-- generated ") ==
          std::string::npos);
}

TEST_CASE("split: baseline manifest validates and is deterministic") {
    ensure_cohort();
    const fs::path m1 = kRoot / "manifest_baseline.json";
    REQUIRE(run("split --metadata " + (kCohort / "metadata.csv").string() +
                " --design baseline --seed 9 --out " + m1.string()) == 0);
    const json manifest = slurp_json(m1);
    CHECK(manifest["design"] == "baseline");
    CHECK(manifest["k"] == 5);

    std::map<std::string, int> val_count;
    std::map<std::string, std::set<int>> folds;
    for (const auto& e : manifest["entries"]) {
        REQUIRE(e["label_source"] == "gold");
        folds[e["case_id"]].insert(e["fold"].get<int>());
        if (e["role"] == "val") ++val_count[e["case_id"]];
    }
    CHECK(folds.size() == 24);
    for (const auto& [id, count] : val_count) REQUIRE(count == 1);
    for (const auto& [id, f] : folds) REQUIRE(f.size() == 5);

    const fs::path m2 = kRoot / "manifest_baseline2.json";
    REQUIRE(run("split --metadata " + (kCohort / "metadata.csv").string() +
                " --design baseline --seed 9 --out " + m2.string()) == 0);
    CHECK(slurp(m1) == slurp(m2));
}

TEST_CASE("split: swap-older flips exactly the Older Tier-1 entries to silver") {
    ensure_cohort();
    const fs::path mb = kRoot / "manifest_b.json";
    const fs::path ms = kRoot / "manifest_s.json";
    REQUIRE(run("split --metadata " + (kCohort / "metadata.csv").string() +
                " --design baseline --seed 9 --out " + mb.string()) == 0);
    REQUIRE(run("split --metadata " + (kCohort / "metadata.csv").string() +
                " --design swap-older --seed 9 --out " + ms.string()) == 0);
    const json base = slurp_json(mb), swap = slurp_json(ms);
    REQUIRE(base["entries"].size() == swap["entries"].size());

    // in this cohort only Middle/Older have unperturbed silver == gold (T1);
    // Young silver labels are eroded so Young cases are not Tier 1
    std::set<std::string> silver_ids;
    for (std::size_t i = 0; i < swap["entries"].size(); ++i) {
        const auto& e = swap["entries"][i];
        const auto& eb = base["entries"][i];
        REQUIRE(e["case_id"] == eb["case_id"]);
        REQUIRE(e["fold"] == eb["fold"]);
        REQUIRE(e["role"] == eb["role"]);
        if (e["label_source"] == "silver")
            silver_ids.insert(e["case_id"].get<std::string>());
    }
    CHECK_FALSE(silver_ids.empty());
    for (const auto& id : silver_ids) REQUIRE(id[0] == 'O');
}

TEST_CASE("split: infeasible diff-bal design exits with code 3") {
    ensure_cohort();
    // the zero-bias Middle/Older cases are all Easy (T1): no Hard stratum
    const int rc = run("split --metadata " + (kCohort / "metadata.csv").string() +
                       " --design diff-bal --n-easy 4 --n-hard 4 --seed 9 --out " +
                       (kRoot / "manifest_diffbal.json").string());
    CHECK(rc == 3);
    const std::string err = slurp(kRoot / "stderr.txt");
    CHECK(err.find("stratum") != std::string::npos);
}

TEST_CASE("audit tolerates a few missing masks but not many") {
    ensure_cohort();
    const fs::path damaged = kRoot / "damaged";
    fs::remove_all(damaged);
    fs::copy(kCohort, damaged, fs::copy_options::recursive);

    SUBCASE("under 20 percent: flagged and excluded, run continues") {
        fs::remove(damaged / "masks" / "Y0001_gold.sfm");
        fs::remove(damaged / "masks" / "M0002_gold.sfm");
        const fs::path out = kRoot / "audit_damaged";
        REQUIRE(run("audit --metadata " + (damaged / "metadata.csv").string() +
                    " --seed 3 --deterministic --out " + out.string()) == 0);
        const std::string csv = slurp(out / "cases.csv");
        CHECK(csv.find("excluded:gold_unavailable") != std::string::npos);
    }
    SUBCASE("over 20 percent: hard input error") {
        for (const char* name : {"Y0001", "Y0002", "M0001", "M0002", "O0001", "O0002"})
            fs::remove(damaged / "masks" / (std::string(name) + "_gold.sfm"));
        const int rc = run("audit --metadata " + (damaged / "metadata.csv").string() +
                           " --seed 3 --out " + (kRoot / "audit_dead").string());
        CHECK(rc == 2);
    }
}

TEST_CASE("morph reports per-group morphometry and pairwise tests") {
    ensure_cohort();
    const fs::path out = kRoot / "morph";
    REQUIRE(run("morph --metadata " + (kCohort / "metadata.csv").string() +
                " --seed 3 --deterministic --out " + out.string()) == 0);
    const json j = slurp_json(out / "morph.json");
    REQUIRE(j["groups"].contains("Young"));
    CHECK(j["groups"]["Young"]["volume_mm3"]["n"] == 8);
    // Young tumors are generated larger than Older ones
    CHECK(j["groups"]["Young"]["volume_mm3"]["mean"].get<double>() >
          j["groups"]["Older"]["volume_mm3"]["mean"].get<double>());
    CHECK(j["welch_tests"].size() == 9); // 3 metrics x 3 pairs
    CHECK(fs::exists(out / "morph_volume_mm3.svg"));
    CHECK(fs::exists(out / "morph.csv"));
}

TEST_CASE("morph on a single-group cohort still works") {
    ensure_cohort();
    // build a Young-only metadata file referencing the same masks
    const std::string full = slurp(kCohort / "metadata.csv");
    std::string young = "case_id,age,expert1,expert2,gold_path,silver_path,pred_path\n";
    std::istringstream lines(full);
    std::string line;
    while (std::getline(lines, line))
        if (!line.empty() && line[0] == 'Y') young += line + "\n";
    write_file(kRoot / "young_only.csv", young);

    const fs::path out = kRoot / "morph_single";
    REQUIRE(run("morph --metadata " + (kRoot / "young_only.csv").string() +
                " --gold-dir " + kCohort.string() + " --seed 3 --deterministic --out " +
                out.string()) == 0);
    const json j = slurp_json(out / "morph.json");
    CHECK(j["welch_tests"].empty());
    const std::string err = slurp(kRoot / "stderr.txt");
    CHECK(err.find("single demographic group") != std::string::npos);
}

namespace {

// three blobs in feature space, optionally aligned with the age groups
void write_embed_fixture(const fs::path& features, const fs::path& metadata,
                         bool group_dependent, std::uint64_t seed) {
    segfair::Rng rng(seed);
    std::string meta = "case_id,age,expert1,expert2,gold_path,silver_path,pred_path\n";
    std::string feat = "case_id,f0,f1,f2,f3\n";
    const int ages[3] = {30, 47, 62};
    for (int g = 0; g < 3; ++g) {
        for (int i = 0; i < 20; ++i) {
            char id[16];
            std::snprintf(id, sizeof id, "e%d%02d", g, i);
            meta += std::string(id) + "," + std::to_string(ages[g]) + ",Good,Good,,,\n";
            feat += id;
            for (int c = 0; c < 4; ++c) {
                const double center = group_dependent && c == g ? 60.0 : 0.0;
                feat += "," + std::to_string(center + rng.normal());
            }
            feat += "\n";
        }
    }
    write_file(features, feat);
    write_file(metadata, meta);
}

} // namespace

TEST_CASE("embed separates group-dependent features") {
    ensure_cohort();
    write_embed_fixture(kRoot / "feat_sep.csv", kRoot / "meta_embed.csv", true, 21);
    const fs::path out = kRoot / "embed_sep";
    REQUIRE(run("embed --features " + (kRoot / "feat_sep.csv").string() +
                " --metadata " + (kRoot / "meta_embed.csv").string() +
                " --iters 600 --seed 2 --deterministic --out " + out.string()) == 0);
    const json j = slurp_json(out / "clustereval.json");
    CHECK(j["ari"].get<double>() > 0.9);
    CHECK(j["kl_final"].get<double>() < j["kl_initial"].get<double>());
    CHECK(fs::exists(out / "embedding.csv"));
    CHECK(fs::exists(out / "embed_scatter.svg"));
    CHECK(fs::exists(out / "embed_density.svg"));

    const std::string csv = slurp(out / "embedding.csv");
    CHECK(csv.find("case_id,t1,t2,age_group") != std::string::npos);
    CHECK(csv.find("Young") != std::string::npos);
}

TEST_CASE("embed on group-independent features shows no separation") {
    ensure_cohort();
    write_embed_fixture(kRoot / "feat_null.csv", kRoot / "meta_null.csv", false, 33);
    const fs::path out = kRoot / "embed_null";
    REQUIRE(run("embed --features " + (kRoot / "feat_null.csv").string() +
                " --metadata " + (kRoot / "meta_null.csv").string() +
                " --iters 600 --seed 2 --deterministic --out " + out.string()) == 0);
    const json j = slurp_json(out / "clustereval.json");
    CHECK(std::fabs(j["silhouette"].get<double>()) < 0.1);
    CHECK(j["ari"].get<double>() < 0.1);
}

TEST_CASE("embed parameter and join errors exit with code 2") {
    ensure_cohort();
    // n < 5
    write_file(kRoot / "feat_tiny.csv",
               "case_id,f0\nt1,0.1\nt2,0.3\nt3,0.5\nt4,0.2\n");
    write_file(kRoot / "meta_tiny.csv",
               "case_id,age,expert1,expert2,gold_path,silver_path,pred_path\n"
               "t1,30,Good,Good,,,\nt2,47,Good,Good,,,\nt3,62,Good,Good,,,\n"
               "t4,35,Good,Good,,,\n");
    CHECK(run("embed --features " + (kRoot / "feat_tiny.csv").string() +
              " --metadata " + (kRoot / "meta_tiny.csv").string() + " --out " +
              (kRoot / "embed_tiny").string()) == 2);

    // join failure lists the offending ids
    write_file(kRoot / "feat_orphan.csv",
               "case_id,f0\nt1,0.1\nt2,0.3\norphan,0.5\nt4,0.2\nt3,0.9\n");
    CHECK(run("embed --features " + (kRoot / "feat_orphan.csv").string() +
              " --metadata " + (kRoot / "meta_tiny.csv").string() + " --out " +
              (kRoot / "embed_orphan").string()) == 2);
    CHECK(slurp(kRoot / "stderr.txt").find("orphan") != std::string::npos);
}

TEST_CASE("bad invocations exit with code 2") {
    ensure_cohort();
    CHECK(run("audit") == 2);                   // missing required flag
    CHECK(run("audit --metadata /nonexistent.csv --out " +
              (kRoot / "nope").string()) == 2); // unreadable input
    CHECK(run("split --metadata " + (kCohort / "metadata.csv").string() +
              " --design bogus --out " + (kRoot / "m.json").string()) == 2);
    CHECK(run("audit --metadata " + (kCohort / "metadata.csv").string() +
              " --threshold 1.5 --out " + (kRoot / "nope2").string()) == 2);
}

TEST_CASE("config file provides defaults, flags override") {
    ensure_cohort();
    write_file(kRoot / "synth.cfg",
               "n-per-group=4\ngrid=24,24,24\nspacing=1,1,1\n"
               "young-radius-mean=5.0\nyoung-radius-std=0.3\n"
               "middle-radius-mean=5.0\nmiddle-radius-std=0.3\n"
               "older-radius-mean=5.0\nolder-radius-std=0.3\n"
               "seed=77\n");
    const fs::path out = kRoot / "cfg_cohort";
    REQUIRE(run("synth --config " + (kRoot / "synth.cfg").string() +
                " --n-per-group 3 --out " + out.string()) == 0);
    // flag wins: 3 per group -> 9 cases; config grid and seed apply
    int rows = 0;
    std::istringstream lines(slurp(out / "metadata.csv"));
    std::string line;
    while (std::getline(lines, line))
        if (!line.empty() && line[0] != '#') ++rows;
    CHECK(rows == 1 + 9);
    const json summary = slurp_json(out / "synth_summary.json");
    CHECK(summary["grid"][0] == 24);
    CHECK(summary["provenance"]["seed"] == 77);
}
