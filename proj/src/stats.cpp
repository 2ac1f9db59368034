#include "segfair/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "segfair/error.hpp"

namespace segfair {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Continued fraction for I_x(a,b), modified Lentz algorithm.
// Converges fast for x < (a+1)/(a+b+2); the caller applies the symmetry
// switch so we are always on the fast side.
double inc_beta_cf(double x, double a, double b) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    constexpr int max_iter = 500;

    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;

    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        // even step
        double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        // odd step
        num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < eps) return h;
    }
    return h; // converged in practice long before max_iter
}

} // namespace

double reg_inc_beta(double x, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw ArgError("reg_inc_beta requires a, b > 0");
    if (!(x >= 0.0) || !(x <= 1.0)) throw ArgError("reg_inc_beta requires x in [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;

    const double log_front = a * std::log(x) + b * std::log1p(-x) -
                             (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * inc_beta_cf(x, a, b) / a;
    return 1.0 - front * inc_beta_cf(1.0 - x, b, a) / b;
}

double t_sf_two_sided(double t, double df) {
    if (std::isinf(t)) return 0.0;
    if (t == 0.0) return 1.0;
    return reg_inc_beta(df / (df + t * t), 0.5 * df, 0.5);
}

double f_sf(double f, double df1, double df2) {
    if (std::isinf(f)) return 0.0;
    if (f <= 0.0) return 1.0;
    return reg_inc_beta(df2 / (df2 + df1 * f), 0.5 * df2, 0.5 * df1);
}

MeanStd mean_std(std::span<const double> xs) {
    if (xs.empty()) throw ArgError("mean_std of empty sample");
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / static_cast<double>(xs.size());

    MeanStd result;
    result.mean = mean;
    if (xs.size() >= 2) {
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        result.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return result;
}

RegressionResult ols_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ArgError("ols_fit length mismatch");
    const std::size_t n = x.size();
    if (n < 3) throw ArgError("ols_fit requires n >= 3");

    double xbar = 0.0, ybar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xbar += x[i];
        ybar += y[i];
    }
    xbar /= static_cast<double>(n);
    ybar /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - xbar;
        const double dy = y[i] - ybar;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw ArgError("degenerate regressor");

    RegressionResult r;
    r.n = n;
    r.slope = sxy / sxx;
    r.intercept = ybar - r.slope * xbar;

    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - (r.intercept + r.slope * x[i]);
        ss_res += e * e;
    }
    r.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    r.r2 = std::clamp(r.r2, 0.0, 1.0);

    const double df = static_cast<double>(n - 2);
    if (ss_res <= 0.0) {
        // exact fit: slope evidence is certain unless the line is flat
        r.p_slope = r.slope == 0.0 ? 1.0 : 0.0;
        return r;
    }
    const double se = std::sqrt(ss_res / df / sxx);
    r.p_slope = t_sf_two_sided(r.slope / se, df);
    return r;
}

AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw ArgError("anova_oneway requires >= 2 groups");
    std::size_t n = 0;
    for (const auto& g : groups) {
        if (g.size() < 2) throw ArgError("anova_oneway requires >= 2 samples per group");
        n += g.size();
    }
    const std::size_t k = groups.size();

    std::vector<double> means(k);
    for (std::size_t i = 0; i < k; ++i) {
        double s = 0.0;
        for (double v : groups[i]) s += v;
        means[i] = s / static_cast<double>(groups[i].size());
    }

    bool means_equal = true;
    for (std::size_t i = 1; i < k; ++i) means_equal = means_equal && means[i] == means[0];

    double grand = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        grand += means[i] * static_cast<double>(groups[i].size());
    grand /= static_cast<double>(n);

    // Bitwise-equal group means short-circuit to SSB = 0 so that identical
    // groups report F = 0, p = 1 instead of a ratio of rounding noise.
    double ssb = 0.0;
    if (!means_equal)
        for (std::size_t i = 0; i < k; ++i) {
            const double d = means[i] - grand;
            ssb += static_cast<double>(groups[i].size()) * d * d;
        }

    double ssw = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        for (double v : groups[i]) {
            const double d = v - means[i];
            ssw += d * d;
        }

    AnovaResult r;
    r.df_between = k - 1;
    r.df_within = n - k;
    if (ssw == 0.0) {
        if (ssb == 0.0) {
            r.f_stat = 0.0;
            r.p = 1.0;
        } else {
            r.f_stat = kInf;
            r.p = 0.0;
            r.infinite_f = true;
        }
        return r;
    }
    const double msb = ssb / static_cast<double>(r.df_between);
    const double msw = ssw / static_cast<double>(r.df_within);
    r.f_stat = msb / msw;
    r.p = f_sf(r.f_stat, static_cast<double>(r.df_between),
               static_cast<double>(r.df_within));
    return r;
}

TTestResult welch_ttest(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2)
        throw ArgError("welch_ttest requires >= 2 samples per group");
    const auto ma = mean_std(a);
    const auto mb = mean_std(b);
    const double va = *ma.std * *ma.std;
    const double vb = *mb.std * *mb.std;
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());

    TTestResult r;
    const double se2 = va / na + vb / nb;
    if (se2 == 0.0) {
        r.degenerate = true;
        r.df = na + nb - 2.0;
        if (ma.mean == mb.mean) {
            r.t_stat = 0.0;
            r.p = 1.0;
        } else {
            r.t_stat = ma.mean > mb.mean ? kInf : -kInf;
            r.p = 0.0;
        }
        return r;
    }
    r.t_stat = (ma.mean - mb.mean) / std::sqrt(se2);
    r.df = se2 * se2 /
           (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
    r.p = t_sf_two_sided(r.t_stat, r.df);
    return r;
}

} // namespace segfair
