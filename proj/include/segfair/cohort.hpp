#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace segfair {

enum class AgeGroup { Young, Middle, Older };
enum class Rating { Good, Acceptable, Poor, Missed };
enum class Tier { T1, T1_5, T2, T3 };
enum class Difficulty { Easy, Hard };
enum class Design { Baseline, SwapYoung, SwapOlder, DiffBal, BiasedInput };
enum class LabelSource { Gold, Silver };
enum class Role { Train, Val };

const char* to_string(AgeGroup g);
const char* to_string(Rating r);
const char* to_string(Tier t);
const char* to_string(Difficulty d);
const char* to_string(Design d);
const char* to_string(LabelSource s);
const char* to_string(Role r);

std::optional<AgeGroup> age_group_from_string(const std::string& s);
std::optional<Rating> rating_from_string(const std::string& s);
std::optional<Design> design_from_string(const std::string& s);

// One patient case. silver_dice/silver_hd95 are the silver-vs-gold quality
// metrics that drive tier stratification; they are computed at ingest for
// real cohorts and by the generator for synthetic ones.
struct CaseRecord {
    std::string case_id;
    int age = 0;
    AgeGroup age_group = AgeGroup::Middle;
    Rating expert1 = Rating::Good;
    Rating expert2 = Rating::Good;
    double silver_dice = 0.0;
    double silver_hd95 = 0.0;
    Tier tier = Tier::T2;
    Difficulty difficulty = Difficulty::Hard;
    std::string gold_path;
    std::string silver_path;
    std::string pred_path;
};

struct ManifestEntry {
    std::string case_id;
    LabelSource label_source = LabelSource::Gold;
    int fold = 0;
    Role role = Role::Train;
};

// Deterministic description of an experiment's training/validation
// composition. Each selected case contributes one entry per fold: role Val
// in its assigned fold and Train in every other, so a trainer reads fold f
// as { entries with fold == f } split by role.
struct SplitManifest {
    Design design = Design::Baseline;
    std::uint64_t seed = 0;
    int k = 5;
    std::vector<ManifestEntry> entries;
};

struct ManifestOptions {
    int k = 5;
    std::size_t n_easy = 143; // per group, diff-bal design
    std::size_t n_hard = 206;
};

// Young <= 40, Older >= 55, Middle otherwise (41-54).
AgeGroup age_group(int age);

// Quality tier from dual-expert ratings plus silver-vs-gold metrics:
//   T1   both Good and (dice >= 0.80 and hd95 <= 10)
//   T1.5 both Good but the metric condition fails
//   T3   both Poor, or both Missed
//   T2   anything else (any Acceptable, expert disagreement, single Missed)
// "Missed" is treated as worse than Poor: it never reaches tier 1.
Tier assign_tier(Rating expert1, Rating expert2, double dice, double hd95);

Difficulty difficulty_of(Tier t); // T1, T1.5 -> Easy; T2, T3 -> Hard

// Draws exactly n_per_group case ids per age group, without replacement.
// Each group's draw uses a sub-generator seeded from (seed, group label), so
// the selection is independent of group iteration order. Returned ids are
// sorted. Throws DesignError when a group is too small.
std::vector<std::string> balanced_sample(std::span<const CaseRecord> cases,
                                         std::size_t n_per_group, std::uint64_t seed);

// Per group: exactly n_easy Easy plus n_hard Hard cases.
std::vector<std::string> difficulty_balanced_sample(std::span<const CaseRecord> cases,
                                                    std::size_t n_easy,
                                                    std::size_t n_hard,
                                                    std::uint64_t seed);

// Age-stratified k-fold: within each group, cases are shuffled by the seeded
// generator and dealt round-robin, so per-fold group counts differ by at
// most 1. Returns the validation fold per case, aligned with `cases`.
std::vector<int> stratified_kfold(std::span<const CaseRecord> cases, int k,
                                  std::uint64_t seed);

// Experiment designs:
//   baseline      age-balanced to the minimum group size, all gold labels
//   swap-young    as baseline, but Young Tier-1 cases use silver labels
//   swap-older    as baseline, but Older Tier-1 cases use silver labels
//   diff-bal      difficulty-balanced (n_easy/n_hard per group), gold labels
//   biased-input  as baseline, all silver labels
// Baseline and the swap/biased-input variants share the same case selection
// and folds for a given (cohort, seed); they differ only in label_source.
SplitManifest build_manifest(Design design, std::span<const CaseRecord> cases,
                             std::uint64_t seed, const ManifestOptions& opts = {});

} // namespace segfair
