#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "segfair/error.hpp"
#include "segfair/fairness.hpp"
#include "segfair/rng.hpp"

using namespace segfair;

TEST_CASE("beneficial_rate uses a strict threshold") {
    CHECK(beneficial_rate(std::vector<double>{0.9, 0.9, 0.9}, 0.8) == 1.0);
    CHECK(beneficial_rate(std::vector<double>{0.8}, 0.8) == 0.0); // at threshold: no
    CHECK(beneficial_rate(std::vector<double>{0.85, 0.75, 0.9, 0.5}, 0.8) == 0.5);
    CHECK_THROWS_AS(beneficial_rate(std::vector<double>{}, 0.8), ArgError);
    CHECK_THROWS_AS(beneficial_rate(std::vector<double>{0.9}, 1.0), ArgError);
}

TEST_CASE("dpd") {
    CHECK(dpd(0.5, 0.5) == 0.0);
    CHECK(dpd(0.5, 0.6) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(dpd(1.0, 0.0) == 1.0); // maximum disparity
    CHECK_THROWS_AS(dpd(1.2, 0.5), ArgError);
}

TEST_CASE("dir") {
    CHECK(dir(0.5, 0.6).value == doctest::Approx(0.5 / 0.6).epsilon(1e-14));
    CHECK(dir(0.4, 0.4).value == 1.0); // perfect fairness
    const auto degenerate = dir(0.0, 0.0);
    CHECK(degenerate.value == 1.0);
    CHECK(degenerate.degenerate);
    CHECK_FALSE(dir(0.5, 0.6).degenerate);
}

TEST_CASE("dpd and dir are symmetric; dir stays in [0,1]") {
    Rng rng(3);
    for (int t = 0; t < 500; ++t) {
        const double a = rng.uniform(), b = rng.uniform();
        REQUIRE(dpd(a, b) == dpd(b, a));
        REQUIRE(dir(a, b).value == dir(b, a).value);
        REQUIRE(dir(a, b).value >= 0.0);
        REQUIRE(dir(a, b).value <= 1.0);
        // parity correspondences for non-degenerate rates
        if (a > 0.0 || b > 0.0) {
            if (dpd(a, b) == 0.0) REQUIRE(dir(a, b).value == 1.0);
            if (dir(a, b).value == 1.0) REQUIRE(dpd(a, b) == 0.0);
        }
    }
}

TEST_CASE("fairness_gap on the published group means") {
    using GM = std::vector<std::pair<std::string, double>>;
    const GM true_perf = {{"Young", 0.7304}, {"Middle", 0.7333}, {"Older", 0.7703}};
    CHECK(fairness_gap(true_perf) == doctest::Approx(0.0399).epsilon(1e-10));
    const GM biased_input = {{"Young", 0.6797}, {"Middle", 0.7132}, {"Older", 0.7458}};
    CHECK(fairness_gap(biased_input) == doctest::Approx(0.0661).epsilon(1e-10));
    const GM equal = {{"A", 0.7}, {"B", 0.7}};
    CHECK(fairness_gap(equal) == 0.0);
    CHECK_THROWS_AS(fairness_gap(GM{{"A", 0.7}}), ArgError);
}

TEST_CASE("fairness_gap is permutation invariant") {
    Rng rng(5);
    std::vector<std::pair<std::string, double>> means = {
        {"A", 0.61}, {"B", 0.72}, {"C", 0.55}, {"D", 0.80}};
    const double reference = fairness_gap(means);
    for (int t = 0; t < 20; ++t) {
        rng.shuffle(means);
        REQUIRE(fairness_gap(means) == reference);
    }
    // relabeling a non-extreme group leaves the gap unchanged
    means[1].second = 0.60;
    CHECK(fairness_gap(means) == reference);
}

TEST_CASE("relative_change reproduces the published inflation figures") {
    const auto ruler = relative_change(0.0559, 0.0399);
    REQUIRE(ruler.relative_change.has_value());
    CHECK(std::round(*ruler.relative_change * 1000.0) / 1000.0 ==
          doctest::Approx(0.401)); // the "40% higher than the true bias"
    const auto amplification = relative_change(0.0661, 0.0399);
    CHECK(std::round(*amplification.relative_change * 1000.0) / 1000.0 ==
          doctest::Approx(0.657)); // the "widened by 66%"
    const auto same = relative_change(0.25, 0.25);
    CHECK(*same.relative_change == 0.0);
    CHECK_FALSE(relative_change(0.1, 0.0).relative_change.has_value());
}

TEST_CASE("audit_groups composes rates, gap and tests") {
    // Young rate 0.35 (7/20 above), Older rate 0.50 (10/20 above)
    std::vector<std::pair<std::string, double>> cases;
    for (int i = 0; i < 20; ++i)
        cases.emplace_back("Young", i < 7 ? 0.9 : 0.5 + 0.001 * i);
    for (int i = 0; i < 20; ++i)
        cases.emplace_back("Older", i < 10 ? 0.85 : 0.6 + 0.001 * i);

    const FairnessReport r = audit_groups(cases, 0.8, {"Young", "Older"});
    CHECK(r.dpd == doctest::Approx(0.15).epsilon(1e-14));
    CHECK(r.dir == doctest::Approx(0.70).epsilon(1e-14));
    CHECK(r.adverse_impact);
    CHECK(r.groups.size() == 2);
    REQUIRE(r.anova.has_value());
}

TEST_CASE("audit_groups parity fixed point on identical score lists") {
    std::vector<std::pair<std::string, double>> cases;
    const std::vector<double> scores = {0.9, 0.7, 0.85, 0.6};
    for (const auto* g : {"Young", "Middle", "Older"})
        for (double s : scores) cases.emplace_back(g, s);
    const FairnessReport r = audit_groups(cases, 0.8, {"Young", "Older"});
    CHECK(r.dpd == 0.0);
    CHECK(r.dir == 1.0);
    CHECK(r.fairness_gap == 0.0);
    CHECK_FALSE(r.adverse_impact);
    REQUIRE(r.anova.has_value());
    CHECK(r.anova->f_stat == 0.0);
    CHECK(r.anova->p == 1.0);
}

TEST_CASE("audit_groups three hand-built means") {
    std::vector<std::pair<std::string, double>> cases;
    for (double v : {0.55, 0.65}) cases.emplace_back("Young", v);   // mean 0.6
    for (double v : {0.65, 0.75}) cases.emplace_back("Middle", v);  // mean 0.7
    for (double v : {0.75, 0.85}) cases.emplace_back("Older", v);   // mean 0.8
    const FairnessReport r = audit_groups(cases, 0.8, {"Young", "Older"});
    CHECK(r.fairness_gap == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("audit_groups requires the comparison pair to exist") {
    std::vector<std::pair<std::string, double>> cases = {{"Young", 0.9}, {"Young", 0.7}};
    CHECK_THROWS_AS(audit_groups(cases, 0.8, {"Young", "Older"}), ArgError);
}

TEST_CASE("adverse-impact flag flips exactly at dir = 0.8") {
    // rates 0.4/0.5 produce a DIR of exactly the double 0.8: not adverse
    std::vector<std::pair<std::string, double>> cases;
    for (int i = 0; i < 10; ++i) cases.emplace_back("Young", i < 4 ? 0.9 : 0.1);
    for (int i = 0; i < 10; ++i) cases.emplace_back("Older", i < 5 ? 0.9 : 0.1);
    const FairnessReport at = audit_groups(cases, 0.8, {"Young", "Older"});
    CHECK(at.dir == 0.8);
    CHECK_FALSE(at.adverse_impact);

    // one fewer beneficial Young case drops DIR strictly below 0.8
    cases[3].second = 0.1; // 3/10 vs 5/10 -> 0.6
    const FairnessReport below = audit_groups(cases, 0.8, {"Young", "Older"});
    CHECK(below.dir < 0.8);
    CHECK(below.adverse_impact);
}
