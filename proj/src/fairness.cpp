#include "segfair/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "segfair/error.hpp"

namespace segfair {

double beneficial_rate(std::span<const double> scores, double threshold) {
    if (scores.empty()) throw ArgError("beneficial_rate of empty sample");
    if (!(threshold > 0.0) || !(threshold < 1.0))
        throw ArgError("threshold must lie in (0,1)");
    std::size_t count = 0;
    for (double s : scores)
        if (s > threshold) ++count; // strict: a score AT the threshold does not count
    return static_cast<double>(count) / static_cast<double>(scores.size());
}

double dpd(double rate_a, double rate_b) {
    if (rate_a < 0.0 || rate_a > 1.0 || rate_b < 0.0 || rate_b > 1.0)
        throw ArgError("rates must lie in [0,1]");
    return std::fabs(rate_a - rate_b);
}

DirResult dir(double rate_a, double rate_b) {
    if (rate_a < 0.0 || rate_a > 1.0 || rate_b < 0.0 || rate_b > 1.0)
        throw ArgError("rates must lie in [0,1]");
    DirResult r;
    if (rate_a == 0.0 && rate_b == 0.0) {
        r.value = 1.0;
        r.degenerate = true;
        return r;
    }
    r.value = std::min(rate_a, rate_b) / std::max(rate_a, rate_b);
    return r;
}

double fairness_gap(std::span<const std::pair<std::string, double>> group_means) {
    if (group_means.size() < 2) throw ArgError("fairness_gap requires >= 2 groups");
    double lo = group_means[0].second, hi = group_means[0].second;
    for (const auto& [_, mean] : group_means) {
        lo = std::min(lo, mean);
        hi = std::max(hi, mean);
    }
    return hi - lo;
}

BiasComparison relative_change(double gap_new, double gap_ref) {
    BiasComparison c;
    c.gap_ref = gap_ref;
    c.gap_new = gap_new;
    if (gap_ref > 0.0) c.relative_change = (gap_new - gap_ref) / gap_ref;
    return c;
}

FairnessReport audit_groups(std::span<const std::pair<std::string, double>> cases,
                            double threshold,
                            const std::pair<std::string, std::string>& comparison_pair) {
    std::map<std::string, std::vector<double>> by_group; // ordered: deterministic output
    for (const auto& [group, score] : cases) by_group[group].push_back(score);

    for (const auto& g : {comparison_pair.first, comparison_pair.second})
        if (by_group.find(g) == by_group.end())
            throw ArgError("comparison group absent from cohort: " + g);

    FairnessReport report;
    report.threshold = threshold;
    report.comparison_pair = comparison_pair;

    std::vector<std::pair<std::string, double>> means;
    bool anova_feasible = true;
    for (const auto& [group, scores] : by_group) {
        GroupOutcome out;
        out.group = group;
        out.n = scores.size();
        const auto ms = mean_std(scores);
        out.mean_dice = ms.mean;
        out.std_dice = ms.std.value_or(0.0);
        out.beneficial_rate = beneficial_rate(scores, threshold);
        means.emplace_back(group, ms.mean);
        anova_feasible = anova_feasible && scores.size() >= 2;
        report.groups.push_back(std::move(out));
    }

    const double rate_a = std::find_if(report.groups.begin(), report.groups.end(),
                                       [&](const GroupOutcome& g) {
                                           return g.group == comparison_pair.first;
                                       })
                              ->beneficial_rate;
    const double rate_b = std::find_if(report.groups.begin(), report.groups.end(),
                                       [&](const GroupOutcome& g) {
                                           return g.group == comparison_pair.second;
                                       })
                              ->beneficial_rate;

    report.dpd = dpd(rate_a, rate_b);
    const DirResult d = dir(rate_a, rate_b);
    report.dir = d.value;
    report.dir_degenerate = d.degenerate;
    report.adverse_impact = report.dir < 0.8;
    report.fairness_gap = fairness_gap(means);
    if (by_group.size() >= 2 && anova_feasible) {
        std::vector<std::vector<double>> groups;
        groups.reserve(by_group.size());
        for (auto& [_, scores] : by_group) groups.push_back(std::move(scores));
        report.anova = anova_oneway(groups);
    }
    return report;
}

} // namespace segfair
