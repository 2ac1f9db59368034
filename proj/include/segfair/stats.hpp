#pragma once

#include <optional>
#include <span>
#include <vector>

namespace segfair {

struct MeanStd {
    double mean = 0.0;
    std::optional<double> std; // sample std (n-1), defined for n >= 2
};

struct RegressionResult {
    double slope = 0.0;   // per unit of x (years for Performance ~ Age)
    double intercept = 0.0;
    double r2 = 0.0;
    double p_slope = 1.0; // two-sided t-test on the slope, n-2 df
    std::size_t n = 0;
};

struct AnovaResult {
    double f_stat = 0.0;
    std::size_t df_between = 0;
    std::size_t df_within = 0;
    double p = 1.0;
    bool infinite_f = false; // zero within-group variance with distinct means
};

struct TTestResult {
    double t_stat = 0.0;
    double df = 0.0; // Welch-Satterthwaite
    double p = 1.0;
    bool degenerate = false; // both variances zero
};

MeanStd mean_std(std::span<const double> xs);

// Regularized incomplete beta I_x(a,b), continued-fraction evaluation with
// the symmetry switch at x = (a+1)/(a+b+2). Absolute accuracy ~1e-14.
double reg_inc_beta(double x, double a, double b);

// Upper-tail p-values used by the tests below.
double t_sf_two_sided(double t, double df);       // P(|T_df| >= |t|)
double f_sf(double f, double df1, double df2);    // P(F_{df1,df2} >= f)

// Least squares of y on x with intercept. Requires n >= 3 and non-constant x
// (throws ArgError("degenerate regressor") otherwise).
RegressionResult ols_fit(std::span<const double> x, std::span<const double> y);

// Classic equal-variance one-way ANOVA. Each group needs >= 2 samples.
// All group means bitwise equal -> F = 0, p = 1; zero within-group variance
// with distinct means -> infinite-F convention, p = 0, flagged.
AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups);

// Welch's unequal-variance t-test, two-sided.
TTestResult welch_ttest(std::span<const double> a, std::span<const double> b);

} // namespace segfair
