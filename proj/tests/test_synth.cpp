#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "segfair/error.hpp"
#include "segfair/fairness.hpp"
#include "segfair/seg_metrics.hpp"
#include "segfair/synth.hpp"

using namespace segfair;

namespace {

SynthConfig small_config() {
    SynthConfig cfg;
    cfg.n_per_group = 12;
    cfg.grid = {32, 32, 32};
    cfg.spacing = {1.0, 1.0, 1.0};
    // smaller tumors so perturbation sweeps stay inside the grid
    cfg.volume_law = {GroupLaw{6.0, 0.4}, GroupLaw{5.5, 0.4}, GroupLaw{5.0, 0.4}};
    cfg.seed = 20240501;
    return cfg;
}

struct GapPair {
    double true_gap;
    double observed_gap;
};

// fairness gaps of mean pred-vs-gold (true) and pred-vs-silver (observed)
GapPair audit_gaps(const std::vector<SynthCase>& cohort) {
    std::vector<std::pair<std::string, double>> true_scores, observed_scores;
    for (const auto& c : cohort) {
        const std::string g = to_string(c.record.age_group);
        true_scores.emplace_back(g, dice(c.pred, c.gold));
        observed_scores.emplace_back(g, dice(c.pred, c.silver));
    }
    const auto t = audit_groups(true_scores, 0.8, {"Young", "Older"});
    const auto o = audit_groups(observed_scores, 0.8, {"Young", "Older"});
    return {t.fairness_gap, o.fairness_gap};
}

std::map<std::string, double> group_mean_silver_dice(
    const std::vector<SynthCase>& cohort) {
    std::map<std::string, std::pair<double, int>> acc;
    for (const auto& c : cohort) {
        auto& [sum, n] = acc[to_string(c.record.age_group)];
        sum += c.record.silver_dice;
        ++n;
    }
    std::map<std::string, double> out;
    for (const auto& [g, sn] : acc) out[g] = sn.first / sn.second;
    return out;
}

} // namespace

TEST_CASE("ellipsoid_mask geometry") {
    SUBCASE("near-sphere: shape metrics match a ball") {
        // fine grid: radius 3 mm at 0.5 mm spacing
        const VoxelMask m = ellipsoid_mask({9.75, 9.75, 9.75}, {3.0, 3.0, 3.0},
                                           {40, 40, 40}, {0.5, 0.5, 0.5});
        CHECK(*elongation(m) > 0.9);
        // digitized-ball sphericity plateaus near 2/3 (staircase area bias)
        CHECK(sphericity(m) > 0.6);
        CHECK(sphericity(m) < 0.74);
        // digitized volume close to (4/3) pi r^3
        CHECK(tumor_volume(m) ==
              doctest::Approx(4.0 / 3.0 * M_PI * 27.0).epsilon(0.05));
    }
    SUBCASE("2:1 axes give elongation about 0.5") {
        const VoxelMask m = ellipsoid_mask({15.75, 15.75, 15.75}, {6.0, 3.0, 3.0},
                                           {64, 64, 64}, {0.5, 0.5, 0.5});
        CHECK(*elongation(m) == doctest::Approx(0.5).epsilon(0.2)); // tolerance 0.1 abs
        CHECK(std::fabs(*elongation(m) - 0.5) < 0.1);
    }
    SUBCASE("radius half a voxel yields a single voxel") {
        const VoxelMask m =
            ellipsoid_mask({5.0, 5.0, 5.0}, {0.5, 0.5, 0.5}, {11, 11, 11}, {1, 1, 1});
        CHECK(m.occupied_count() == 1);
        CHECK(m.at(5, 5, 5));
    }
    SUBCASE("no intersection is an error") {
        CHECK_THROWS_AS(
            ellipsoid_mask({100, 100, 100}, {1, 1, 1}, {8, 8, 8}, {1, 1, 1}),
            ArgError);
    }
}

TEST_CASE("perturb_mask") {
    const VoxelMask ball =
        ellipsoid_mask({12, 12, 12}, {6, 6, 6}, {25, 25, 25}, {1, 1, 1});

    SUBCASE("zero layers and zero flips is the identity") {
        CHECK(perturb_mask(ball, 0.0, 0.0, 42) == ball);
    }
    SUBCASE("erosion layers degrade dice monotonically") {
        double last = 1.0;
        for (double layers : {1.0, 2.0, 3.0, 4.0}) {
            const VoxelMask p = perturb_mask(ball, layers, 0.0, 42);
            const double d = dice(p, ball);
            CHECK(d < last);
            last = d;
        }
    }
    SUBCASE("negative layers dilate") {
        const VoxelMask p = perturb_mask(ball, -2.0, 0.0, 42);
        CHECK(p.occupied_count() > ball.occupied_count());
        // dilation never removes voxels
        for (std::size_t i = 0; i < ball.data.size(); ++i)
            if (ball.data[i]) REQUIRE(p.data[i]);
    }
    SUBCASE("fractional layers floor to whole erosions") {
        CHECK(perturb_mask(ball, 1.7, 0.0, 42) == perturb_mask(ball, 1.0, 0.0, 42));
    }
    SUBCASE("flips are confined to the surface band and deterministic") {
        const VoxelMask a = perturb_mask(ball, 0.0, 0.3, 7);
        const VoxelMask b = perturb_mask(ball, 0.0, 0.3, 7);
        CHECK(a == b);
        const VoxelMask c = perturb_mask(ball, 0.0, 0.3, 8);
        CHECK(a != c);
        // interior voxels untouched: erode twice to find the deep interior
        const VoxelMask interior = perturb_mask(ball, 2.0, 0.0, 0);
        for (std::size_t i = 0; i < ball.data.size(); ++i)
            if (interior.data[i]) REQUIRE(a.data[i] == 1);
    }
    SUBCASE("annihilating the mask is an error") {
        const VoxelMask tiny =
            ellipsoid_mask({4, 4, 4}, {1.2, 1.2, 1.2}, {9, 9, 9}, {1, 1, 1});
        CHECK_THROWS_AS(perturb_mask(tiny, 10.0, 0.0, 1), ArgError);
    }
    SUBCASE("empty input is an error") {
        CHECK_THROWS_AS(perturb_mask(VoxelMask::zeros({4, 4, 4}, {1, 1, 1}), 1, 0, 1),
                        ArgError);
    }
}

TEST_CASE("gen_cohort: zero biases sit at the parity fixed point") {
    SynthConfig cfg = small_config();
    const auto cohort = gen_cohort(cfg);
    REQUIRE(cohort.size() == 36);
    for (const auto& c : cohort) {
        REQUIRE(c.silver == c.gold);
        REQUIRE(c.pred == c.gold);
        REQUIRE(c.record.silver_dice == 1.0);
        REQUIRE(c.record.tier == Tier::T1);
    }
    std::vector<std::pair<std::string, double>> scores;
    for (const auto& c : cohort)
        scores.emplace_back(to_string(c.record.age_group), dice(c.pred, c.gold));
    const FairnessReport r = audit_groups(scores, 0.8, {"Young", "Older"});
    CHECK(r.dpd == 0.0);
    CHECK(r.dir == 1.0);
    CHECK(r.fairness_gap == 0.0);
}

TEST_CASE("gen_cohort: ages and ids are group-consistent and deterministic") {
    SynthConfig cfg = small_config();
    const auto a = gen_cohort(cfg);
    const auto b = gen_cohort(cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].record.case_id == b[i].record.case_id);
        REQUIRE(a[i].record.age == b[i].record.age);
        REQUIRE(a[i].gold == b[i].gold);
        REQUIRE(a[i].silver == b[i].silver);
        REQUIRE(a[i].pred == b[i].pred);
    }
    for (const auto& c : a) {
        switch (c.record.case_id[0]) {
        case 'Y': REQUIRE(c.record.age_group == AgeGroup::Young); break;
        case 'M': REQUIRE(c.record.age_group == AgeGroup::Middle); break;
        case 'O': REQUIRE(c.record.age_group == AgeGroup::Older); break;
        default: FAIL("unexpected id prefix");
        }
    }
    SynthConfig other = cfg;
    other.seed = cfg.seed + 1;
    const auto c2 = gen_cohort(other);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        any_diff = any_diff || !(a[i].gold == c2[i].gold);
    CHECK(any_diff);
}

TEST_CASE("gen_cohort: biased ruler, observed gap exceeds true gap") {
    SynthConfig cfg = small_config();
    cfg.label_bias = {2.0, 0.0, 0.0};    // Young silver labels eroded
    cfg.pred_bias = {-1.0, -1.0, -1.0};  // uniform prediction bias (dilation)
    const auto cohort = gen_cohort(cfg);
    const GapPair gaps = audit_gaps(cohort);
    CHECK(gaps.observed_gap > gaps.true_gap);
}

TEST_CASE("gen_cohort: observed-vs-true inflation is monotone in label bias") {
    double last_inflation = -1.0;
    for (double bias : {1.0, 2.0, 3.0}) {
        SynthConfig cfg = small_config();
        cfg.label_bias = {bias, 0.0, 0.0};
        cfg.pred_bias = {-1.0, -1.0, -1.0};
        const GapPair gaps = audit_gaps(gen_cohort(cfg));
        const double inflation = gaps.observed_gap - gaps.true_gap;
        CHECK(inflation > last_inflation);
        last_inflation = inflation;
    }
}

TEST_CASE("gen_cohort: injected representational bias makes Young the worst group") {
    SynthConfig cfg = small_config();
    cfg.pred_bias = {2.0, 1.0, 1.0}; // Young predictions degraded more
    const auto cohort = gen_cohort(cfg);

    std::map<std::string, std::pair<double, int>> acc;
    for (const auto& c : cohort) {
        auto& [sum, n] = acc[to_string(c.record.age_group)];
        sum += dice(c.pred, c.gold);
        ++n;
    }
    const double young = acc["Young"].first / acc["Young"].second;
    const double middle = acc["Middle"].first / acc["Middle"].second;
    const double older = acc["Older"].first / acc["Older"].second;
    CHECK(young < middle);
    CHECK(young < older);

    const GapPair gaps = audit_gaps(cohort);
    CHECK(gaps.true_gap > 0.0);
}

TEST_CASE("gen_cohort: swapped group biases mirror the audit") {
    SynthConfig base = small_config();
    base.n_per_group = 24;
    base.volume_law = {GroupLaw{5.5, 0.4}, GroupLaw{5.5, 0.4}, GroupLaw{5.5, 0.4}};

    SynthConfig young_biased = base;
    young_biased.label_bias = {2.0, 0.0, 0.0};
    SynthConfig older_biased = base;
    older_biased.label_bias = {0.0, 0.0, 2.0};

    const auto mean_a = group_mean_silver_dice(gen_cohort(young_biased));
    const auto mean_b = group_mean_silver_dice(gen_cohort(older_biased));

    // the degraded group swaps; magnitudes agree up to per-group draw noise
    CHECK(mean_a.at("Young") < mean_a.at("Older"));
    CHECK(mean_b.at("Older") < mean_b.at("Young"));
    CHECK(std::fabs(mean_a.at("Young") - mean_b.at("Older")) < 0.04);
    CHECK(std::fabs(mean_a.at("Older") - mean_b.at("Young")) < 0.04);
}

TEST_CASE("gen_cohort: default volume laws reproduce the anatomical disparity") {
    SynthConfig cfg; // defaults: Young ~1.66x Older mean volume
    cfg.n_per_group = 40;
    cfg.seed = 7;
    const auto cohort = gen_cohort(cfg);
    std::map<std::string, std::pair<double, int>> acc;
    for (const auto& c : cohort) {
        auto& [sum, n] = acc[to_string(c.record.age_group)];
        sum += tumor_volume(c.gold);
        ++n;
    }
    const double ratio = (acc["Young"].first / acc["Young"].second) /
                         (acc["Older"].first / acc["Older"].second);
    CHECK(ratio == doctest::Approx(1.66).epsilon(0.12));
}

TEST_CASE("synth config validation") {
    SynthConfig cfg = small_config();
    cfg.flip_rate = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ArgError);
    cfg = small_config();
    cfg.volume_law[0].mean_radius_mm = 40.0; // does not fit a 32-voxel grid
    CHECK_THROWS_AS(cfg.validate(), ArgError);
    cfg = small_config();
    cfg.n_per_group = 0;
    CHECK_THROWS_AS(cfg.validate(), ArgError);
}
