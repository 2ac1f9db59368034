#include "segfair/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "segfair/cohort.hpp"
#include "segfair/csv.hpp"
#include "segfair/edt.hpp"
#include "segfair/embedding.hpp"
#include "segfair/error.hpp"
#include "segfair/fairness.hpp"
#include "segfair/log.hpp"
#include "segfair/mask_io.hpp"
#include "segfair/parallel.hpp"
#include "segfair/rng.hpp"
#include "segfair/seg_metrics.hpp"
#include "segfair/stats.hpp"
#include "segfair/svg.hpp"
#include "segfair/synth.hpp"

namespace segfair {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr const char* kToolVersion = "0.1.0";
constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// shared plumbing
// ---------------------------------------------------------------------------

std::string config_hash(const std::map<std::string, std::string>& kv) {
    std::string canonical;
    for (const auto& [k, v] : kv) {
        canonical += k;
        canonical += '=';
        canonical += v;
        canonical += '\n';
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical)));
    return buf;
}

json provenance(std::uint64_t seed, const std::string& hash) {
    json p;
    p["tool"] = "segfair";
    p["version"] = kToolVersion;
    p["seed"] = seed;
    p["config_hash"] = hash;
    return p;
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f << j.dump(2) << '\n';
    if (!f) throw IoError("write failure: " + path.string());
}

class CsvWriter {
public:
    explicit CsvWriter(const fs::path& path) : path_(path.string()) {
        out_.open(path, std::ios::binary | std::ios::trunc);
        if (!out_) throw IoError("cannot open for writing: " + path_);
        out_ << "# schema_version=" << kSchemaVersion << "\n";
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i)
            out_ << (i ? "," : "") << csv_escape(fields[i]);
        out_ << "\n";
    }

    void close() {
        out_.close();
        if (!out_) throw IoError("write failure: " + path_);
    }

private:
    std::string path_;
    std::ofstream out_;
};

std::string opt_field(const std::optional<double>& v) {
    return v ? fmt_double(*v) : std::string{};
}

std::optional<std::array<double, 3>> parse_resample(const std::string& s) {
    if (s == "none") return std::nullopt;
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size() || !(v > 0.0)) throw std::invalid_argument("");
        return std::array<double, 3>{v, v, v};
    } catch (const std::exception&) {
        throw ArgError("--resample expects a positive spacing in mm or 'none', got '" +
                       s + "'");
    }
}

std::pair<std::string, std::string> parse_pair(const std::string& s) {
    const auto comma = s.find(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 == s.size())
        throw ArgError("--pair expects 'GroupA,GroupB', got '" + s + "'");
    return {s.substr(0, comma), s.substr(comma + 1)};
}

// Flat key=value config file: '#' comments and blank lines allowed, keys are
// long option names without the leading dashes. Keys already given on the
// command line keep the command-line value.
std::map<std::string, std::string> parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos || eq == 0)
            throw FormatError(path + ":" + std::to_string(lineno) +
                              ": expected key=value");
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return kv;
}

// CLI11 2.4's subcommand set_config does not inject values, so the config
// layer is applied by rewriting argv: each config pair whose flag is absent
// from the command line is appended as --key=value.
std::vector<std::string> expand_config_args(int argc, const char* const* argv) {
    std::vector<std::string> args;
    args.reserve(static_cast<std::size_t>(argc));
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);

    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;

    for (const auto& [key, value] : parse_kv_file(config_path)) {
        const std::string flag = "--" + key;
        bool present = false;
        for (const auto& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) {
                present = true;
                break;
            }
        if (!present) args.push_back(flag + "=" + value);
    }
    return args;
}

// ---------------------------------------------------------------------------
// cohort ingestion (shared by audit / morph / split)
// ---------------------------------------------------------------------------

struct LoadedCase {
    CaseRecord record;
    std::optional<VoxelMask> gold;
    std::optional<VoxelMask> silver;
    std::optional<VoxelMask> pred;
    bool has_silver_metrics = false;
    std::string status = "ok"; // "excluded:<reason>" or warning flags
    bool excluded = false;
};

struct IngestConfig {
    std::string metadata;
    std::string gold_dir;
    std::string silver_dir;
    std::string pred_dir;
    std::optional<std::array<double, 3>> resample;
    unsigned jobs = 1;
    bool want_pred = true;
    bool want_silver = true;
};

std::string resolve_path(const std::string& raw, const std::string& dir,
                         const fs::path& metadata_dir) {
    if (raw.empty()) return {};
    const fs::path p(raw);
    if (p.is_absolute()) return raw;
    if (!dir.empty()) return (fs::path(dir) / p).string();
    return (metadata_dir / p).string();
}

std::vector<LoadedCase> ingest_cohort(const IngestConfig& cfg) {
    const auto rows = read_metadata_csv(cfg.metadata);
    const fs::path metadata_dir = fs::path(cfg.metadata).parent_path();

    std::vector<LoadedCase> cases(rows.size());
    std::set<std::string> seen;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (!seen.insert(row.case_id).second)
            throw FormatError(cfg.metadata + ": duplicate case_id " + row.case_id);
        CaseRecord& rec = cases[i].record;
        rec.case_id = row.case_id;
        rec.age = row.age;
        rec.age_group = age_group(row.age);
        const auto e1 = rating_from_string(row.expert1);
        const auto e2 = rating_from_string(row.expert2);
        if (!e1 || !e2)
            throw FormatError(cfg.metadata + ": case " + row.case_id +
                              ": unknown expert rating");
        rec.expert1 = *e1;
        rec.expert2 = *e2;
        rec.gold_path = resolve_path(row.gold_path, cfg.gold_dir, metadata_dir);
        rec.silver_path = resolve_path(row.silver_path, cfg.silver_dir, metadata_dir);
        rec.pred_path = resolve_path(row.pred_path, cfg.pred_dir, metadata_dir);
    }
    std::sort(cases.begin(), cases.end(), [](const LoadedCase& a, const LoadedCase& b) {
        return a.record.case_id < b.record.case_id;
    });

    parallel_for(cases.size(), cfg.jobs, [&](std::size_t i) {
        LoadedCase& c = cases[i];
        auto load = [&](const std::string& path, const char* role)
            -> std::optional<VoxelMask> {
            if (path.empty()) return std::nullopt;
            try {
                VoxelMask m = load_mask_auto(path);
                if (cfg.resample) m = resample_nearest(m, *cfg.resample);
                return m;
            } catch (const Error& e) {
                c.status += std::string(";") + role + "_error";
                log_warn("case " + c.record.case_id + ": " + e.what());
                return std::nullopt;
            }
        };
        c.gold = load(c.record.gold_path, "gold");
        if (!c.gold) {
            c.excluded = true;
            c.status = "excluded:gold_unavailable";
            return;
        }
        if (cfg.want_silver) c.silver = load(c.record.silver_path, "silver");
        if (cfg.want_pred) c.pred = load(c.record.pred_path, "pred");

        if (c.silver) {
            c.record.silver_dice = dice(*c.silver, *c.gold);
            c.record.silver_hd95 = hd95(*c.silver, *c.gold).value_or(0.0);
            c.record.tier = assign_tier(c.record.expert1, c.record.expert2,
                                        c.record.silver_dice, c.record.silver_hd95);
            c.record.difficulty = difficulty_of(c.record.tier);
            c.has_silver_metrics = true;
        }
    });
    return cases;
}

void enforce_exclusion_budget(const std::vector<LoadedCase>& cases) {
    const std::size_t excluded = static_cast<std::size_t>(
        std::count_if(cases.begin(), cases.end(),
                      [](const LoadedCase& c) { return c.excluded; }));
    if (cases.empty()) throw ArgError("cohort is empty");
    if (5 * excluded > cases.size())
        throw ArgError(std::to_string(excluded) + " of " + std::to_string(cases.size()) +
                       " cases excluded (limit is 20%)");
    if (excluded > 0)
        log_warn(std::to_string(excluded) + " case(s) excluded; run continues");
}

// ---------------------------------------------------------------------------
// report serialization
// ---------------------------------------------------------------------------

json anova_json(const AnovaResult& a) {
    json j;
    j["f_stat"] = a.infinite_f ? json("inf") : json(a.f_stat);
    j["df_between"] = a.df_between;
    j["df_within"] = a.df_within;
    j["p"] = a.p;
    j["infinite_f"] = a.infinite_f;
    return j;
}

json regression_json(const RegressionResult& r) {
    json j;
    j["slope"] = r.slope;
    j["intercept"] = r.intercept;
    j["r2"] = r.r2;
    j["p_slope"] = r.p_slope;
    j["n"] = r.n;
    return j;
}

json ttest_json(const TTestResult& t) {
    json j;
    j["t_stat"] = std::isinf(t.t_stat) ? json(t.t_stat > 0 ? "inf" : "-inf")
                                       : json(t.t_stat);
    j["df"] = t.df;
    j["p"] = t.p;
    j["degenerate"] = t.degenerate;
    return j;
}

json fairness_json(const FairnessReport& r) {
    json j;
    j["threshold"] = r.threshold;
    j["comparison_pair"] = {r.comparison_pair.first, r.comparison_pair.second};
    j["groups"] = json::array();
    for (const auto& g : r.groups) {
        json gj;
        gj["group"] = g.group;
        gj["n"] = g.n;
        gj["mean_dice"] = g.mean_dice;
        gj["std_dice"] = g.std_dice;
        gj["beneficial_rate"] = g.beneficial_rate;
        j["groups"].push_back(gj);
    }
    j["dpd"] = r.dpd;
    j["dir"] = r.dir;
    j["dir_degenerate"] = r.dir_degenerate;
    j["fairness_gap"] = r.fairness_gap;
    j["adverse_impact"] = r.adverse_impact;
    j["anova"] = r.anova ? anova_json(*r.anova) : json(nullptr);
    j["ols"] = r.ols ? regression_json(*r.ols) : json(nullptr);
    return j;
}

// ---------------------------------------------------------------------------
// audit
// ---------------------------------------------------------------------------

struct PairMetrics {
    std::optional<double> dice;
    std::optional<double> hd95;
};

struct AuditedCase {
    const LoadedCase* loaded = nullptr;
    PairMetrics pred_gold;
    PairMetrics pred_silver;
    PairMetrics silver_gold;
    std::optional<double> gold_volume;
};

struct SeriesData {
    std::string name;                 // e.g. "pred_vs_gold"
    std::string description;
    std::vector<const AuditedCase*> cases;
    std::vector<double> dice;
    std::vector<double> ages;
    std::vector<double> hd95;       // defined values only
    std::vector<double> hd95_ages;
};

const PairMetrics& series_metrics(const AuditedCase& c, const std::string& name) {
    if (name == "pred_vs_gold") return c.pred_gold;
    if (name == "pred_vs_silver") return c.pred_silver;
    return c.silver_gold;
}

int cmd_audit(const std::string& metadata, const std::string& gold_dir,
              const std::string& silver_dir, const std::string& pred_dir,
              double threshold, const std::string& pair_str,
              const std::string& resample_str, const std::string& gap_metric,
              const std::string& out_dir, std::uint64_t seed, unsigned jobs,
              bool deterministic) {
    const auto pair = parse_pair(pair_str);
    IngestConfig icfg;
    icfg.metadata = metadata;
    icfg.gold_dir = gold_dir;
    icfg.silver_dir = silver_dir;
    icfg.pred_dir = pred_dir;
    icfg.resample = parse_resample(resample_str);
    icfg.jobs = jobs;
    if (!(threshold > 0.0) || !(threshold < 1.0))
        throw ArgError("--threshold must lie in (0,1)");

    const auto cases = ingest_cohort(icfg);
    enforce_exclusion_budget(cases);

    std::vector<AuditedCase> audited(cases.size());
    parallel_for(cases.size(), jobs, [&](std::size_t i) {
        AuditedCase& a = audited[i];
        a.loaded = &cases[i];
        const LoadedCase& c = cases[i];
        if (c.excluded) return;
        a.gold_volume = tumor_volume(*c.gold);
        if (c.pred) {
            a.pred_gold.dice = dice(*c.pred, *c.gold);
            a.pred_gold.hd95 = hd95(*c.pred, *c.gold);
            if (c.silver) {
                a.pred_silver.dice = dice(*c.pred, *c.silver);
                a.pred_silver.hd95 = hd95(*c.pred, *c.silver);
            }
        }
        if (c.silver) {
            a.silver_gold.dice = dice(*c.silver, *c.gold);
            a.silver_gold.hd95 = hd95(*c.silver, *c.gold);
        }
    });

    fs::create_directories(out_dir);

    // per-case table
    CsvWriter csv(fs::path(out_dir) / "cases.csv");
    csv.row({"case_id", "age", "age_group", "expert1", "expert2", "tier", "difficulty",
             "status", "dice_pred_gold", "hd95_pred_gold", "dice_pred_silver",
             "hd95_pred_silver", "dice_silver_gold", "hd95_silver_gold",
             "volume_gold_mm3"});
    for (const auto& a : audited) {
        const CaseRecord& r = a.loaded->record;
        csv.row({r.case_id, std::to_string(r.age), to_string(r.age_group),
                 to_string(r.expert1), to_string(r.expert2),
                 a.loaded->has_silver_metrics ? to_string(r.tier) : "",
                 a.loaded->has_silver_metrics ? to_string(r.difficulty) : "",
                 a.loaded->status, opt_field(a.pred_gold.dice),
                 opt_field(a.pred_gold.hd95), opt_field(a.pred_silver.dice),
                 opt_field(a.pred_silver.hd95), opt_field(a.silver_gold.dice),
                 opt_field(a.silver_gold.hd95), opt_field(a.gold_volume)});
    }
    csv.close();

    // series assembly, fixed case-id order
    const char* series_names[] = {"pred_vs_gold", "pred_vs_silver", "silver_vs_gold"};
    const char* series_desc[] = {
        "prediction scored against gold (true performance)",
        "prediction scored against silver (observed performance)",
        "silver scored against gold (label quality)"};
    std::vector<SeriesData> series;
    for (int s = 0; s < 3; ++s) {
        SeriesData sd;
        sd.name = series_names[s];
        sd.description = series_desc[s];
        for (const auto& a : audited) {
            const PairMetrics& m = series_metrics(a, sd.name);
            if (!m.dice) continue;
            sd.cases.push_back(&a);
            sd.dice.push_back(*m.dice);
            sd.ages.push_back(static_cast<double>(a.loaded->record.age));
            if (m.hd95) {
                sd.hd95.push_back(*m.hd95);
                sd.hd95_ages.push_back(static_cast<double>(a.loaded->record.age));
            }
        }
        if (!sd.cases.empty()) series.push_back(std::move(sd));
    }
    if (series.empty())
        throw ArgError("no case has the mask pairs required for any audit series");

    const std::map<std::string, std::string> cfg_kv = {
        {"command", "audit"},       {"metadata", metadata},
        {"gold-dir", gold_dir},     {"silver-dir", silver_dir},
        {"pred-dir", pred_dir},     {"threshold", fmt_double(threshold)},
        {"pair", pair_str},         {"resample", resample_str},
        {"gap-metric", gap_metric}, {"seed", std::to_string(seed)},
    };
    const std::string hash = config_hash(cfg_kv);

    json fairness_out;
    fairness_out["schema_version"] = kSchemaVersion;
    fairness_out["provenance"] = provenance(seed, hash);
    json stats_out;
    stats_out["schema_version"] = kSchemaVersion;
    stats_out["provenance"] = provenance(seed, hash);
    stats_out["series"] = json::object();
    fairness_out["series"] = json::object();

    std::map<std::string, double> gap_by_series;      // dice gaps
    std::map<std::string, double> gap_hd95_by_series; // hd95 gaps (lower is better)

    for (const auto& sd : series) {
        std::vector<std::pair<std::string, double>> group_dice;
        group_dice.reserve(sd.cases.size());
        for (std::size_t i = 0; i < sd.cases.size(); ++i)
            group_dice.emplace_back(to_string(sd.cases[i]->loaded->record.age_group),
                                    sd.dice[i]);
        FairnessReport report = audit_groups(group_dice, threshold, pair);

        json series_stats;
        try {
            const RegressionResult ols = ols_fit(sd.ages, sd.dice);
            report.ols = ols;
            series_stats["ols_dice_vs_age"] = regression_json(ols);
        } catch (const ArgError& e) {
            log_info(sd.name + ": dice~age regression skipped: " + e.what());
            series_stats["ols_dice_vs_age"] = nullptr;
        }
        try {
            if (sd.hd95.size() >= 3)
                series_stats["ols_hd95_vs_age"] =
                    regression_json(ols_fit(sd.hd95_ages, sd.hd95));
            else
                series_stats["ols_hd95_vs_age"] = nullptr;
        } catch (const ArgError& e) {
            log_info(sd.name + ": hd95~age regression skipped: " + e.what());
            series_stats["ols_hd95_vs_age"] = nullptr;
        }

        // group HD95 aggregation mirrors the Dice aggregation
        std::map<std::string, std::vector<double>> hd95_by_group;
        for (const auto* c : sd.cases) {
            const PairMetrics& m = series_metrics(*c, sd.name);
            if (m.hd95)
                hd95_by_group[to_string(c->loaded->record.age_group)].push_back(*m.hd95);
        }
        json hd95_groups = json::array();
        std::vector<std::pair<std::string, double>> hd95_means;
        for (const auto& [group, values] : hd95_by_group) {
            const auto ms = mean_std(values);
            json gj;
            gj["group"] = group;
            gj["n"] = values.size();
            gj["mean_hd95_mm"] = ms.mean;
            gj["std_hd95_mm"] = ms.std ? json(*ms.std) : json(nullptr);
            hd95_groups.push_back(gj);
            hd95_means.emplace_back(group, ms.mean);
        }

        json sj = fairness_json(report);
        sj["description"] = sd.description;
        sj["hd95_groups"] = hd95_groups;
        if (hd95_means.size() >= 2) {
            const double gap95 = fairness_gap(hd95_means);
            sj["fairness_gap_hd95"] = gap95; // polarity inverted: higher mean = worse
            gap_hd95_by_series[sd.name] = gap95;
        }
        fairness_out["series"][sd.name] = sj;
        stats_out["series"][sd.name] = series_stats;
        gap_by_series[sd.name] = report.fairness_gap;

        // Fig-1-style scatter with the fitted line
        std::vector<ScatterPoint> pts;
        for (std::size_t i = 0; i < sd.cases.size(); ++i)
            pts.push_back({sd.ages[i], sd.dice[i],
                           to_string(sd.cases[i]->loaded->record.age_group)});
        std::optional<FitLine> fit;
        if (report.ols) {
            char ann[96];
            std::snprintf(ann, sizeof ann, "R²=%.4f, p=%.4g", report.ols->r2,
                          report.ols->p_slope);
            fit = FitLine{report.ols->slope, report.ols->intercept, ann};
        }
        write_scatter_svg((fs::path(out_dir) / ("audit_" + sd.name + ".svg")).string(),
                          "Dice vs age (" + sd.name + ")", "age (years)", "Dice",
                          pts, fit, deterministic);
    }

    // biased-ruler comparison: observed (vs silver) against true (vs gold)
    const bool have_both = gap_by_series.count("pred_vs_gold") &&
                           gap_by_series.count("pred_vs_silver");
    if (have_both) {
        BiasComparison cmp;
        if (gap_metric == "hd95") {
            if (gap_hd95_by_series.count("pred_vs_gold") &&
                gap_hd95_by_series.count("pred_vs_silver"))
                cmp = relative_change(gap_hd95_by_series["pred_vs_silver"],
                                      gap_hd95_by_series["pred_vs_gold"]);
        } else {
            cmp = relative_change(gap_by_series["pred_vs_silver"],
                                  gap_by_series["pred_vs_gold"]);
        }
        json bj;
        bj["gap_metric"] = gap_metric;
        bj["gap_true"] = cmp.gap_ref;
        bj["gap_observed"] = cmp.gap_new;
        bj["relative_change"] =
            cmp.relative_change ? json(*cmp.relative_change) : json(nullptr);
        fairness_out["bias_comparison"] = bj;
    } else {
        fairness_out["bias_comparison"] = nullptr;
    }

    write_json_file(fs::path(out_dir) / "fairness.json", fairness_out);
    write_json_file(fs::path(out_dir) / "stats.json", stats_out);
    std::cout << "audit: " << audited.size() << " cases, " << series.size()
              << " series -> " << out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// morph
// ---------------------------------------------------------------------------

int cmd_morph(const std::string& metadata, const std::string& gold_dir,
              const std::string& resample_str, const std::string& out_dir,
              std::uint64_t seed, unsigned jobs, bool deterministic) {
    IngestConfig icfg;
    icfg.metadata = metadata;
    icfg.gold_dir = gold_dir;
    icfg.resample = parse_resample(resample_str);
    icfg.jobs = jobs;
    icfg.want_pred = false;
    icfg.want_silver = false;

    const auto cases = ingest_cohort(icfg);
    enforce_exclusion_budget(cases);

    struct Morph {
        std::optional<double> volume, area, sphericity, elongation;
    };
    std::vector<Morph> morph(cases.size());
    parallel_for(cases.size(), jobs, [&](std::size_t i) {
        if (cases[i].excluded) return;
        const VoxelMask& gold = *cases[i].gold;
        morph[i].volume = tumor_volume(gold);
        if (gold.occupied_count() > 0) {
            morph[i].area = surface_area(gold);
            morph[i].sphericity = sphericity(gold);
        }
        morph[i].elongation = elongation(gold);
    });

    fs::create_directories(out_dir);
    CsvWriter csv(fs::path(out_dir) / "morph.csv");
    csv.row({"case_id", "age", "age_group", "status", "volume_mm3",
             "surface_area_mm2", "sphericity", "elongation"});
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const CaseRecord& r = cases[i].record;
        csv.row({r.case_id, std::to_string(r.age), to_string(r.age_group),
                 cases[i].status, opt_field(morph[i].volume), opt_field(morph[i].area),
                 opt_field(morph[i].sphericity), opt_field(morph[i].elongation)});
    }
    csv.close();

    const char* metric_names[] = {"volume_mm3", "sphericity", "elongation"};
    std::map<std::string, std::map<std::string, std::vector<double>>> by_metric_group;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        if (cases[i].excluded) continue;
        const std::string g = to_string(cases[i].record.age_group);
        if (morph[i].volume) by_metric_group["volume_mm3"][g].push_back(*morph[i].volume);
        if (morph[i].sphericity)
            by_metric_group["sphericity"][g].push_back(*morph[i].sphericity);
        if (morph[i].elongation)
            by_metric_group["elongation"][g].push_back(*morph[i].elongation);
    }

    const std::map<std::string, std::string> cfg_kv = {
        {"command", "morph"},   {"metadata", metadata},
        {"gold-dir", gold_dir}, {"resample", resample_str},
        {"seed", std::to_string(seed)},
    };
    json out;
    out["schema_version"] = kSchemaVersion;
    out["provenance"] = provenance(seed, config_hash(cfg_kv));
    out["groups"] = json::object();
    out["welch_tests"] = json::array();

    for (const char* metric : metric_names) {
        auto& groups = by_metric_group[metric];
        for (const auto& [g, values] : groups) {
            const auto ms = mean_std(values);
            json gj;
            gj["n"] = values.size();
            gj["mean"] = ms.mean;
            gj["std"] = ms.std ? json(*ms.std) : json(nullptr);
            out["groups"][g][metric] = gj;
        }
        if (groups.size() < 2) continue;
        std::vector<std::string> names;
        for (const auto& [g, _] : groups) names.push_back(g);
        for (std::size_t a = 0; a < names.size(); ++a) {
            for (std::size_t b = a + 1; b < names.size(); ++b) {
                if (groups[names[a]].size() < 2 || groups[names[b]].size() < 2) continue;
                const TTestResult t = welch_ttest(groups[names[a]], groups[names[b]]);
                json tj = ttest_json(t);
                tj["metric"] = metric;
                tj["group_a"] = names[a];
                tj["group_b"] = names[b];
                out["welch_tests"].push_back(tj);
            }
        }
    }
    if (by_metric_group["volume_mm3"].size() < 2)
        log_warn("single demographic group present; pairwise tests skipped");

    write_json_file(fs::path(out_dir) / "morph.json", out);

    for (const char* metric : metric_names) {
        std::vector<std::pair<std::string, std::vector<double>>> box_groups(
            by_metric_group[metric].begin(), by_metric_group[metric].end());
        if (box_groups.empty()) continue;
        write_box_svg(
            (fs::path(out_dir) / (std::string("morph_") + metric + ".svg")).string(),
            std::string(metric) + " by age group", metric, box_groups, deterministic);
    }
    std::cout << "morph: " << cases.size() << " cases -> " << out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// split
// ---------------------------------------------------------------------------

void validate_manifest(const SplitManifest& manifest) {
    std::map<std::string, int> val_count;
    std::map<std::string, std::set<int>> folds_seen;
    for (const auto& e : manifest.entries) {
        if (e.role == Role::Val) ++val_count[e.case_id];
        folds_seen[e.case_id].insert(e.fold);
    }
    for (const auto& [id, count] : val_count)
        if (count != 1)
            throw InternalError("manifest invariant violated: case " + id + " is val " +
                                std::to_string(count) + " times");
    for (const auto& [id, folds] : folds_seen)
        if (static_cast<int>(folds.size()) != manifest.k)
            throw InternalError("manifest invariant violated: case " + id +
                                " misses folds");
}

int cmd_split(const std::string& metadata, const std::string& gold_dir,
              const std::string& silver_dir, const std::string& design_str,
              const std::string& resample_str, int k, std::size_t n_easy,
              std::size_t n_hard, const std::string& out_file, std::uint64_t seed,
              unsigned jobs) {
    const auto design = design_from_string(design_str);
    if (!design)
        throw ArgError("unknown design '" + design_str +
                       "' (baseline|swap-young|swap-older|diff-bal|biased-input)");

    IngestConfig icfg;
    icfg.metadata = metadata;
    icfg.gold_dir = gold_dir;
    icfg.silver_dir = silver_dir;
    icfg.resample = parse_resample(resample_str);
    icfg.jobs = jobs;
    icfg.want_pred = false;

    const auto cases = ingest_cohort(icfg);
    enforce_exclusion_budget(cases);

    const bool needs_tiers = *design == Design::SwapYoung ||
                             *design == Design::SwapOlder || *design == Design::DiffBal;
    std::vector<CaseRecord> records;
    std::size_t missing_silver = 0;
    for (const auto& c : cases) {
        if (c.excluded) continue;
        if (!c.has_silver_metrics) ++missing_silver;
        records.push_back(c.record);
    }
    if (needs_tiers && missing_silver > 0)
        throw DesignError("design '" + design_str + "' needs tier stratification but " +
                          std::to_string(missing_silver) +
                          " case(s) lack silver masks for silver-vs-gold metrics");

    ManifestOptions opts;
    opts.k = k;
    opts.n_easy = n_easy;
    opts.n_hard = n_hard;
    const SplitManifest manifest = build_manifest(*design, records, seed, opts);
    validate_manifest(manifest);

    const std::map<std::string, std::string> cfg_kv = {
        {"command", "split"},       {"metadata", metadata},
        {"design", design_str},     {"k", std::to_string(k)},
        {"n-easy", std::to_string(n_easy)}, {"n-hard", std::to_string(n_hard)},
        {"resample", resample_str}, {"seed", std::to_string(seed)},
    };
    json j;
    j["schema_version"] = kSchemaVersion;
    j["provenance"] = provenance(seed, config_hash(cfg_kv));
    j["design"] = to_string(manifest.design);
    j["seed"] = manifest.seed;
    j["k"] = manifest.k;
    j["entries"] = json::array();
    for (const auto& e : manifest.entries) {
        json ej;
        ej["case_id"] = e.case_id;
        ej["label_source"] = to_string(e.label_source);
        ej["fold"] = e.fold;
        ej["role"] = to_string(e.role);
        j["entries"].push_back(ej);
    }
    if (const fs::path parent = fs::path(out_file).parent_path(); !parent.empty())
        fs::create_directories(parent);
    write_json_file(out_file, j);
    std::cout << "split: " << manifest.entries.size() << " entries -> " << out_file
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// embed
// ---------------------------------------------------------------------------

int cmd_embed(const std::string& features_path, const std::string& metadata,
              double perplexity, int iters, std::size_t bins,
              const std::string& out_dir, std::uint64_t seed, bool deterministic) {
    const auto features = read_features_csv(features_path);
    const auto meta = read_metadata_csv(metadata);
    std::map<std::string, int> age_by_id;
    for (const auto& m : meta) age_by_id[m.case_id] = m.age;

    std::vector<const FeatureRow*> rows;
    std::vector<std::string> join_failures;
    for (const auto& f : features) {
        if (age_by_id.count(f.case_id)) rows.push_back(&f);
        else join_failures.push_back(f.case_id);
    }
    if (!join_failures.empty()) {
        std::string list;
        for (const auto& id : join_failures) list += (list.empty() ? "" : ", ") + id;
        throw ArgError("feature rows without metadata: " + list);
    }
    std::sort(rows.begin(), rows.end(), [](const FeatureRow* a, const FeatureRow* b) {
        return a->case_id < b->case_id;
    });

    FeatureMatrix x;
    x.n = rows.size();
    x.d = rows.empty() ? 0 : rows[0]->features.size();
    for (const auto* r : rows) {
        if (r->features.size() != x.d)
            throw FormatError(features_path + ": inconsistent feature width for case " +
                              r->case_id);
        x.values.insert(x.values.end(), r->features.begin(), r->features.end());
        x.labels.push_back(to_string(age_group(age_by_id[r->case_id])));
    }

    TsneParams params;
    params.perplexity = perplexity;
    params.iters = iters;
    params.seed = seed;
    const TsneResult result = tsne(x, params);

    fs::create_directories(out_dir);
    CsvWriter csv(fs::path(out_dir) / "embedding.csv");
    csv.row({"case_id", "t1", "t2", "age_group"});
    for (std::size_t i = 0; i < x.n; ++i)
        csv.row({rows[i]->case_id, fmt_double(result.embedding[2 * i]),
                 fmt_double(result.embedding[2 * i + 1]), x.labels[i]});
    csv.close();

    // silhouette measures age separation directly; purity/ARI/NMI compare the
    // age labels with k-means clusters on the embedding (k = #groups present)
    std::map<std::string, int> label_ids;
    std::vector<int> truth(x.n);
    for (std::size_t i = 0; i < x.n; ++i)
        truth[i] = label_ids.emplace(x.labels[i], static_cast<int>(label_ids.size()))
                       .first->second;
    const std::size_t k = label_ids.size();
    if (k < 2) throw ArgError("embedding cohort has a single age group");

    ClusterEval eval;
    eval.silhouette = silhouette(result.embedding, truth);
    const std::vector<int> clusters = kmeans(result.embedding, k, seed);
    eval.purity = purity(clusters, truth);
    eval.ari = ari(clusters, truth);
    eval.nmi = nmi(clusters, truth);

    const std::map<std::string, std::string> cfg_kv = {
        {"command", "embed"},
        {"features", features_path},
        {"metadata", metadata},
        {"perplexity", fmt_double(perplexity)},
        {"iters", std::to_string(iters)},
        {"bins", std::to_string(bins)},
        {"seed", std::to_string(seed)},
    };
    json j;
    j["schema_version"] = kSchemaVersion;
    j["provenance"] = provenance(seed, config_hash(cfg_kv));
    j["n"] = x.n;
    j["d"] = x.d;
    j["params"]["perplexity"] =
        perplexity > 0.0 ? perplexity
                         : std::clamp(static_cast<double>(x.n) / 10.0, 5.0, 50.0);
    j["params"]["learning_rate"] = params.learning_rate;
    j["params"]["iters"] = params.iters;
    j["params"]["init"] = "pca";
    j["kl_initial"] = result.kl_initial;
    j["kl_final"] = result.kl_final;
    j["kmeans_k"] = k;
    j["silhouette"] = eval.silhouette;
    j["purity"] = eval.purity;
    j["ari"] = eval.ari;
    j["nmi"] = eval.nmi;
    write_json_file(fs::path(out_dir) / "clustereval.json", j);

    std::vector<ScatterPoint> pts;
    for (std::size_t i = 0; i < x.n; ++i)
        pts.push_back({result.embedding[2 * i], result.embedding[2 * i + 1], x.labels[i]});
    write_scatter_svg((fs::path(out_dir) / "embed_scatter.svg").string(),
                      "t-SNE embedding", "t-SNE 1", "t-SNE 2", pts, std::nullopt,
                      deterministic);

    std::map<std::string, std::vector<double>> dim1_by_group;
    for (std::size_t i = 0; i < x.n; ++i)
        dim1_by_group[x.labels[i]].push_back(result.embedding[2 * i]);
    std::vector<std::pair<std::string, Histogram>> densities;
    for (const auto& [g, values] : dim1_by_group)
        densities.emplace_back(g, density_1d(values, bins));
    write_density_svg((fs::path(out_dir) / "embed_density.svg").string(),
                      "t-SNE dimension 1 density", "t-SNE 1", densities, deterministic);

    std::cout << "embed: " << x.n << " cases -> " << out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

int cmd_synth(const SynthConfig& cfg,
              const std::map<std::string, std::string>& cfg_kv,
              const std::string& out_dir) {
    const auto cohort = gen_cohort(cfg);

    const fs::path out(out_dir);
    fs::create_directories(out / "masks");

    CsvWriter csv(out / "metadata.csv");
    csv.row({"case_id", "age", "expert1", "expert2", "gold_path", "silver_path",
             "pred_path"});
    for (const auto& c : cohort) {
        const std::string base = "masks/" + c.record.case_id;
        save_mask(c.gold, (out / (base + "_gold.sfm")).string());
        save_mask(c.silver, (out / (base + "_silver.sfm")).string());
        save_mask(c.pred, (out / (base + "_pred.sfm")).string());
        csv.row({c.record.case_id, std::to_string(c.record.age),
                 to_string(c.record.expert1), to_string(c.record.expert2),
                 base + "_gold.sfm", base + "_silver.sfm", base + "_pred.sfm"});
    }
    csv.close();

    json j;
    j["schema_version"] = kSchemaVersion;
    j["provenance"] = provenance(cfg.seed, config_hash(cfg_kv));
    j["n_per_group"] = cfg.n_per_group;
    j["grid"] = cfg.grid;
    j["spacing"] = cfg.spacing;
    j["flip_rate"] = cfg.flip_rate;
    const char* group_names[] = {"Young", "Middle", "Older"};
    for (int g = 0; g < 3; ++g) {
        json gj;
        gj["mean_radius_mm"] = cfg.volume_law[g].mean_radius_mm;
        gj["radius_std_mm"] = cfg.volume_law[g].radius_std_mm;
        gj["label_bias_layers"] = cfg.label_bias[g];
        gj["pred_bias_layers"] = cfg.pred_bias[g];
        j["injected_bias"][group_names[g]] = gj;
    }
    write_json_file(out / "synth_summary.json", j);
    std::cout << j.dump(2) << "\n";
    return 0;
}

} // namespace

// ---------------------------------------------------------------------------
// argument wiring
// ---------------------------------------------------------------------------

int run_cli(int argc, const char* const* argv) {
    init_log_from_env();

    CLI::App app{"segfair: demographic bias audit for segmentation outputs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    // common option storage
    std::string metadata, gold_dir, silver_dir, pred_dir, out = "segfair-out";
    std::string pair_str = "Young,Older", resample_str = "1.0";
    std::string gap_metric = "dice";
    double threshold = 0.8;
    std::uint64_t seed = 0;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    bool deterministic = false;
    std::string config_path;

    auto add_common = [&](CLI::App* cmd, bool with_dirs) {
        cmd->add_option("--metadata", metadata, "cohort metadata CSV")->required();
        if (with_dirs) {
            cmd->add_option("--gold-dir", gold_dir, "base dir for relative gold paths");
            cmd->add_option("--silver-dir", silver_dir,
                            "base dir for relative silver paths");
        }
        cmd->add_option("--seed", seed, "master seed (all sub-streams derive from it)");
        cmd->add_option("--resample", resample_str,
                        "isotropic target spacing in mm, or 'none'");
        cmd->add_option("--jobs", jobs, "worker threads for per-case computation");
        cmd->add_option("--config", config_path,
                        "flat key=value config file; flags override");
    };

    CLI::App* audit = app.add_subcommand("audit", "fairness audit of a cohort");
    add_common(audit, true);
    audit->add_option("--pred-dir", pred_dir, "base dir for relative prediction paths");
    audit->add_option("--threshold", threshold,
                      "beneficial-outcome Dice threshold (strict >)");
    audit->add_option("--pair", pair_str, "comparison pair, e.g. Young,Older");
    audit->add_option("--gap-metric", gap_metric,
                      "gap for the bias comparison: dice|hd95")
        ->check(CLI::IsMember({"dice", "hd95"}));
    audit->add_option("--out", out, "output directory");
    audit->add_flag("--deterministic", deterministic,
                    "suppress timestamps in figures");

    CLI::App* morph = app.add_subcommand("morph", "gold-mask morphometry by group");
    add_common(morph, true);
    morph->add_option("--out", out, "output directory");
    morph->add_flag("--deterministic", deterministic, "suppress timestamps in figures");

    std::string design_str = "baseline";
    int kfolds = 5;
    std::size_t n_easy = 143, n_hard = 206;
    CLI::App* split = app.add_subcommand("split", "experiment design manifests");
    add_common(split, true);
    split->add_option("--design", design_str,
                      "baseline|swap-young|swap-older|diff-bal|biased-input");
    split->add_option("--k", kfolds, "fold count");
    split->add_option("--n-easy", n_easy, "easy cases per group (diff-bal)");
    split->add_option("--n-hard", n_hard, "hard cases per group (diff-bal)");
    split->add_option("--out", out, "manifest JSON path")->required();

    std::string features_path;
    double perplexity = 0.0; // auto
    int iters = 1500;
    std::size_t bins = 30;
    CLI::App* embed = app.add_subcommand("embed", "t-SNE diagnostics of feature space");
    embed->add_option("--features", features_path, "feature CSV (case_id,f0,f1,...)")
        ->required();
    embed->add_option("--metadata", metadata, "cohort metadata CSV")->required();
    embed->add_option("--perplexity", perplexity, "t-SNE perplexity (0 = n/10 in [5,50])");
    embed->add_option("--iters", iters, "gradient descent iterations");
    embed->add_option("--bins", bins, "density histogram bins");
    embed->add_option("--seed", seed, "seed for k-means");
    embed->add_option("--out", out, "output directory");
    embed->add_flag("--deterministic", deterministic, "suppress timestamps in figures");
    embed->add_option("--config", config_path,
                      "flat key=value config file; flags override");

    SynthConfig synth_cfg;
    std::string grid_str = "48,48,48", spacing_str = "1,1,1";
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic cohort");
    synth->add_option("--n-per-group", synth_cfg.n_per_group, "cases per age group");
    synth->add_option("--grid", grid_str, "grid dims, e.g. 48,48,48");
    synth->add_option("--spacing", spacing_str, "voxel spacing mm, e.g. 1,1,1");
    synth->add_option("--young-radius-mean", synth_cfg.volume_law[0].mean_radius_mm);
    synth->add_option("--young-radius-std", synth_cfg.volume_law[0].radius_std_mm);
    synth->add_option("--middle-radius-mean", synth_cfg.volume_law[1].mean_radius_mm);
    synth->add_option("--middle-radius-std", synth_cfg.volume_law[1].radius_std_mm);
    synth->add_option("--older-radius-mean", synth_cfg.volume_law[2].mean_radius_mm);
    synth->add_option("--older-radius-std", synth_cfg.volume_law[2].radius_std_mm);
    synth->add_option("--label-bias-young", synth_cfg.label_bias[0],
                      "silver erosion layers for Young (<0 dilates)");
    synth->add_option("--label-bias-middle", synth_cfg.label_bias[1]);
    synth->add_option("--label-bias-older", synth_cfg.label_bias[2]);
    synth->add_option("--pred-bias-young", synth_cfg.pred_bias[0]);
    synth->add_option("--pred-bias-middle", synth_cfg.pred_bias[1]);
    synth->add_option("--pred-bias-older", synth_cfg.pred_bias[2]);
    synth->add_option("--flip-rate", synth_cfg.flip_rate, "surface-band flip probability");
    synth->add_option("--seed", seed, "generator seed");
    synth->add_option("--out", out, "output directory")->required();
    synth->add_option("--config", config_path,
                      "flat key=value config file; flags override");

    try {
        try {
            std::vector<std::string> args = expand_config_args(argc, argv);
            std::reverse(args.begin(), args.end()); // CLI11 vector parse order
            app.parse(args);
        } catch (const CLI::CallForHelp& e) {
            return app.exit(e);
        } catch (const CLI::CallForVersion& e) {
            return app.exit(e);
        } catch (const CLI::ParseError& e) {
            app.exit(e);
            return 2;
        }

        if (audit->parsed())
            return cmd_audit(metadata, gold_dir, silver_dir, pred_dir, threshold,
                             pair_str, resample_str, gap_metric, out, seed, jobs,
                             deterministic);
        if (morph->parsed())
            return cmd_morph(metadata, gold_dir, resample_str, out, seed, jobs,
                             deterministic);
        if (split->parsed())
            return cmd_split(metadata, gold_dir, silver_dir, design_str, resample_str,
                             kfolds, n_easy, n_hard, out, seed, jobs);
        if (embed->parsed())
            return cmd_embed(features_path, metadata, perplexity, iters, bins, out,
                             seed, deterministic);
        if (synth->parsed()) {
            auto parse_triplet = [](const std::string& s, auto& target,
                                    const char* what) {
                std::stringstream ss(s);
                std::string part;
                int i = 0;
                while (std::getline(ss, part, ',') && i < 3) {
                    try {
                        target[i] = static_cast<std::remove_reference_t<
                            decltype(target[0])>>(std::stod(part));
                    } catch (const std::exception&) {
                        throw ArgError(std::string("bad ") + what + ": " + s);
                    }
                    ++i;
                }
                if (i != 3) throw ArgError(std::string("bad ") + what + ": " + s);
            };
            parse_triplet(grid_str, synth_cfg.grid, "--grid");
            parse_triplet(spacing_str, synth_cfg.spacing, "--spacing");
            synth_cfg.seed = seed;

            std::map<std::string, std::string> cfg_kv = {
                {"command", "synth"},
                {"n-per-group", std::to_string(synth_cfg.n_per_group)},
                {"grid", grid_str},
                {"spacing", spacing_str},
                {"flip-rate", fmt_double(synth_cfg.flip_rate)},
                {"seed", std::to_string(seed)},
            };
            const char* names[] = {"young", "middle", "older"};
            for (int g = 0; g < 3; ++g) {
                cfg_kv[std::string(names[g]) + "-radius-mean"] =
                    fmt_double(synth_cfg.volume_law[g].mean_radius_mm);
                cfg_kv[std::string(names[g]) + "-radius-std"] =
                    fmt_double(synth_cfg.volume_law[g].radius_std_mm);
                cfg_kv[std::string("label-bias-") + names[g]] =
                    fmt_double(synth_cfg.label_bias[g]);
                cfg_kv[std::string("pred-bias-") + names[g]] =
                    fmt_double(synth_cfg.pred_bias[g]);
            }
            return cmd_synth(synth_cfg, cfg_kv, out);
        }
        throw InternalError("no subcommand dispatched");
    } catch (const DesignError& e) {
        log_error(e.what());
        return 3;
    } catch (const InternalError& e) {
        log_error(std::string("internal invariant violation: ") + e.what());
        return 4;
    } catch (const Error& e) {
        log_error(e.what());
        return 2;
    } catch (const std::exception& e) {
        log_error(std::string("unexpected: ") + e.what());
        return 4;
    }
}

} // namespace segfair
