#include "segfair/cohort.hpp"

#include <algorithm>
#include <array>
#include <map>

#include "segfair/error.hpp"
#include "segfair/rng.hpp"

namespace segfair {

const char* to_string(AgeGroup g) {
    switch (g) {
    case AgeGroup::Young: return "Young";
    case AgeGroup::Middle: return "Middle";
    case AgeGroup::Older: return "Older";
    }
    return "?";
}

const char* to_string(Rating r) {
    switch (r) {
    case Rating::Good: return "Good";
    case Rating::Acceptable: return "Acceptable";
    case Rating::Poor: return "Poor";
    case Rating::Missed: return "Missed";
    }
    return "?";
}

const char* to_string(Tier t) {
    switch (t) {
    case Tier::T1: return "T1";
    case Tier::T1_5: return "T1_5";
    case Tier::T2: return "T2";
    case Tier::T3: return "T3";
    }
    return "?";
}

const char* to_string(Difficulty d) {
    return d == Difficulty::Easy ? "Easy" : "Hard";
}

const char* to_string(Design d) {
    switch (d) {
    case Design::Baseline: return "baseline";
    case Design::SwapYoung: return "swap-young";
    case Design::SwapOlder: return "swap-older";
    case Design::DiffBal: return "diff-bal";
    case Design::BiasedInput: return "biased-input";
    }
    return "?";
}

const char* to_string(LabelSource s) {
    return s == LabelSource::Gold ? "gold" : "silver";
}

const char* to_string(Role r) { return r == Role::Train ? "train" : "val"; }

std::optional<AgeGroup> age_group_from_string(const std::string& s) {
    if (s == "Young") return AgeGroup::Young;
    if (s == "Middle") return AgeGroup::Middle;
    if (s == "Older") return AgeGroup::Older;
    return std::nullopt;
}

std::optional<Rating> rating_from_string(const std::string& s) {
    if (s == "Good") return Rating::Good;
    if (s == "Acceptable") return Rating::Acceptable;
    if (s == "Poor") return Rating::Poor;
    if (s == "Missed") return Rating::Missed;
    return std::nullopt;
}

std::optional<Design> design_from_string(const std::string& s) {
    if (s == "baseline") return Design::Baseline;
    if (s == "swap-young") return Design::SwapYoung;
    if (s == "swap-older") return Design::SwapOlder;
    if (s == "diff-bal") return Design::DiffBal;
    if (s == "biased-input") return Design::BiasedInput;
    return std::nullopt;
}

AgeGroup age_group(int age) {
    if (age < 0) throw ArgError("age must be non-negative");
    if (age <= 40) return AgeGroup::Young;
    if (age >= 55) return AgeGroup::Older;
    return AgeGroup::Middle;
}

Tier assign_tier(Rating expert1, Rating expert2, double dice, double hd95) {
    if (dice < 0.0 || dice > 1.0) throw ArgError("dice out of [0,1]");
    if (hd95 < 0.0) throw ArgError("hd95 must be non-negative");
    if (expert1 == Rating::Good && expert2 == Rating::Good)
        return (dice >= 0.80 && hd95 <= 10.0) ? Tier::T1 : Tier::T1_5;
    if (expert1 == Rating::Poor && expert2 == Rating::Poor) return Tier::T3;
    if (expert1 == Rating::Missed && expert2 == Rating::Missed) return Tier::T3;
    return Tier::T2;
}

Difficulty difficulty_of(Tier t) {
    return (t == Tier::T1 || t == Tier::T1_5) ? Difficulty::Easy : Difficulty::Hard;
}

namespace {

constexpr std::array<AgeGroup, 3> kGroups{AgeGroup::Young, AgeGroup::Middle,
                                          AgeGroup::Older};

// Case ids of one group, sorted; sorting first makes the draw independent of
// the caller's case ordering.
std::vector<std::string> group_ids(std::span<const CaseRecord> cases, AgeGroup g) {
    std::vector<std::string> ids;
    for (const auto& c : cases)
        if (c.age_group == g) ids.push_back(c.case_id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<std::string> draw(std::vector<std::string> ids, std::size_t n, Rng& rng) {
    rng.shuffle(ids);
    ids.resize(n);
    return ids;
}

} // namespace

std::vector<std::string> balanced_sample(std::span<const CaseRecord> cases,
                                         std::size_t n_per_group, std::uint64_t seed) {
    std::vector<std::string> selected;
    for (AgeGroup g : kGroups) {
        auto ids = group_ids(cases, g);
        if (ids.size() < n_per_group)
            throw DesignError(std::string("group ") + to_string(g) + " has " +
                              std::to_string(ids.size()) + " cases, need " +
                              std::to_string(n_per_group));
        Rng rng(derive_seed(seed, fnv1a64(to_string(g))));
        auto picked = draw(std::move(ids), n_per_group, rng);
        selected.insert(selected.end(), picked.begin(), picked.end());
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

std::vector<std::string> difficulty_balanced_sample(std::span<const CaseRecord> cases,
                                                    std::size_t n_easy,
                                                    std::size_t n_hard,
                                                    std::uint64_t seed) {
    std::vector<std::string> selected;
    for (AgeGroup g : kGroups) {
        for (auto [diff, want] : {std::pair{Difficulty::Easy, n_easy},
                                  std::pair{Difficulty::Hard, n_hard}}) {
            std::vector<std::string> ids;
            for (const auto& c : cases)
                if (c.age_group == g && c.difficulty == diff) ids.push_back(c.case_id);
            std::sort(ids.begin(), ids.end());
            if (ids.size() < want)
                throw DesignError(std::string("stratum ") + to_string(g) + "/" +
                                  to_string(diff) + " has " +
                                  std::to_string(ids.size()) + " cases, need " +
                                  std::to_string(want));
            Rng rng(derive_seed(seed, fnv1a64(std::string(to_string(g)) + "/" +
                                              to_string(diff))));
            auto picked = draw(std::move(ids), want, rng);
            selected.insert(selected.end(), picked.begin(), picked.end());
        }
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

std::vector<int> stratified_kfold(std::span<const CaseRecord> cases, int k,
                                  std::uint64_t seed) {
    if (k < 1) throw ArgError("k must be >= 1");
    std::map<std::string, std::size_t> index_of;
    for (std::size_t i = 0; i < cases.size(); ++i) index_of[cases[i].case_id] = i;

    std::vector<int> fold(cases.size(), -1);
    for (AgeGroup g : kGroups) {
        auto ids = group_ids(cases, g);
        if (ids.empty()) continue;
        if (ids.size() < static_cast<std::size_t>(k))
            throw DesignError(std::string("group ") + to_string(g) + " has fewer cases (" +
                              std::to_string(ids.size()) + ") than folds (" +
                              std::to_string(k) + ")");
        Rng rng(derive_seed(seed, fnv1a64(std::string("folds/") + to_string(g))));
        rng.shuffle(ids);
        for (std::size_t i = 0; i < ids.size(); ++i)
            fold[index_of[ids[i]]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    return fold;
}

SplitManifest build_manifest(Design design, std::span<const CaseRecord> cases,
                             std::uint64_t seed, const ManifestOptions& opts) {
    std::map<std::string, const CaseRecord*> by_id;
    for (const auto& c : cases) {
        if (!by_id.emplace(c.case_id, &c).second)
            throw ArgError("duplicate case_id: " + c.case_id);
    }

    std::vector<std::string> selected;
    if (design == Design::DiffBal) {
        selected = difficulty_balanced_sample(cases, opts.n_easy, opts.n_hard, seed);
    } else {
        std::size_t min_group = SIZE_MAX;
        for (AgeGroup g : kGroups) min_group = std::min(min_group, group_ids(cases, g).size());
        if (min_group == 0) throw DesignError("a demographic group is empty");
        selected = balanced_sample(cases, min_group, seed);
    }

    std::vector<CaseRecord> subset;
    subset.reserve(selected.size());
    for (const auto& id : selected) subset.push_back(*by_id.at(id));
    const std::vector<int> folds = stratified_kfold(subset, opts.k, derive_seed(seed, "kfold"));

    SplitManifest manifest;
    manifest.design = design;
    manifest.seed = seed;
    manifest.k = opts.k;
    manifest.entries.reserve(subset.size() * static_cast<std::size_t>(opts.k));
    for (std::size_t i = 0; i < subset.size(); ++i) {
        const CaseRecord& c = subset[i];
        LabelSource source = LabelSource::Gold;
        switch (design) {
        case Design::Baseline:
        case Design::DiffBal:
            break;
        case Design::SwapYoung:
            if (c.age_group == AgeGroup::Young && c.tier == Tier::T1)
                source = LabelSource::Silver;
            break;
        case Design::SwapOlder:
            if (c.age_group == AgeGroup::Older && c.tier == Tier::T1)
                source = LabelSource::Silver;
            break;
        case Design::BiasedInput:
            source = LabelSource::Silver;
            break;
        }
        for (int f = 0; f < opts.k; ++f)
            manifest.entries.push_back(
                {c.case_id, source, f, f == folds[i] ? Role::Val : Role::Train});
    }
    return manifest;
}

} // namespace segfair
