#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "segfair/stats.hpp"

namespace segfair {

// Per-group audit summary. "Beneficial" is the high-quality-segmentation
// event: per-case Dice strictly above the threshold (default 0.8).
struct GroupOutcome {
    std::string group;
    std::size_t n = 0;
    double mean_dice = 0.0;
    double std_dice = 0.0; // 0 for singleton groups
    double beneficial_rate = 0.0;
};

struct DirResult {
    double value = 1.0;
    bool degenerate = false; // both rates zero: no measurable disparity
};

struct BiasComparison {
    double gap_ref = 0.0;
    double gap_new = 0.0;
    std::optional<double> relative_change; // (new - ref)/ref; undefined at ref = 0
};

struct FairnessReport {
    std::vector<GroupOutcome> groups; // sorted by group label
    double dpd = 0.0;
    double dir = 1.0;
    bool dir_degenerate = false;
    double fairness_gap = 0.0;
    bool adverse_impact = false; // dir < 0.8 (the four-fifths rule)
    std::optional<AnovaResult> anova; // absent when a group has < 2 cases
    std::optional<RegressionResult> ols; // filled by callers that have ages
    double threshold = 0.8;
    std::pair<std::string, std::string> comparison_pair;
};

// Share of scores strictly above the threshold.
double beneficial_rate(std::span<const double> scores, double threshold);

// Demographic parity difference: |rate_a - rate_b|.
double dpd(double rate_a, double rate_b);

// Disparate impact ratio: min/max of the two rates. Both rates zero is
// reported as 1.0 with the degenerate flag raised, never as NaN.
DirResult dir(double rate_a, double rate_b);

// max(mean) - min(mean) over the given (group, mean) pairs; requires >= 2.
double fairness_gap(std::span<const std::pair<std::string, double>> group_means);

BiasComparison relative_change(double gap_new, double gap_ref);

// Composes the quantities above over per-case (group, dice) observations.
// comparison_pair names the two groups entering DPD/DIR; both must be
// present with at least one case.
FairnessReport audit_groups(std::span<const std::pair<std::string, double>> cases,
                            double threshold,
                            const std::pair<std::string, std::string>& comparison_pair);

} // namespace segfair
