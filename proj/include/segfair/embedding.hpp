#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace segfair {

// Row-major n x d feature matrix with one demographic label per row.
struct FeatureMatrix {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<double> values; // n*d, row-major
    std::vector<std::string> labels;

    double at(std::size_t row, std::size_t col) const { return values[row * d + col]; }
    void validate() const; // finite values, n >= 5, label count matches
};

struct TsneParams {
    double perplexity = 0.0;      // <= 0 selects n/10 clipped to [5, 50]
    double learning_rate = 200.0;
    int iters = 1500;
    double early_exaggeration = 12.0;
    int exaggeration_iters = 250;
    int momentum_switch_iter = 250;
    double momentum_initial = 0.5;
    double momentum_final = 0.8;
    std::uint64_t seed = 0; // reserved; the PCA init makes the run deterministic
};

struct TsneResult {
    std::vector<double> embedding; // n x 2, row-major
    std::vector<double> kl_trace;  // KL(P||Q) sampled every 50 iterations
    double kl_initial = 0.0;
    double kl_final = 0.0;
};

struct ClusterEval {
    double silhouette = 0.0; // in [-1, 1]
    double purity = 0.0;     // in [0, 1]
    double ari = 0.0;        // in [-1, 1]
    double nmi = 0.0;        // in [0, 1]
};

// Projection onto the top-ncomp principal directions of the centered data
// (descending eigenvalue order; each component's sign is fixed so its
// largest-magnitude loading is positive). Zero-variance data yields the zero
// projection with *degenerate set.
std::vector<double> pca(const FeatureMatrix& x, std::size_t ncomp,
                        bool* degenerate = nullptr);

// Exact O(n^2) t-SNE.
// P: per-point Gaussian kernels calibrated to the target perplexity by
// bisection on the bandwidth (entropy tolerance 1e-5, <= 50 iterations per
// point), then symmetrized and normalized to sum 1. Q: Student-t kernel.
// Gradient descent with gains, the early-exaggeration phase, and the
// momentum switch of the reference implementation; init = PCA scaled to
// std 1e-4 per dimension. KL is always reported against the
// un-exaggerated P.
TsneResult tsne(const FeatureMatrix& x, const TsneParams& params);

// Exposed t-SNE internals; reusable and independently testable.
// Conditional p_{j|i} rows before symmetrization (each row sums to 1 and its
// entropy matches log(perplexity) after the bisection).
std::vector<double> tsne_conditional(std::span<const double> x, std::size_t n,
                                     std::size_t d, double perplexity);
std::vector<double> tsne_affinities(std::span<const double> x, std::size_t n,
                                    std::size_t d, double perplexity);
std::vector<double> tsne_gradient(std::span<const double> p,
                                  std::span<const double> y, std::size_t n,
                                  double exaggeration = 1.0);
double tsne_kl(std::span<const double> p, std::span<const double> y, std::size_t n);

// Mean over points of (b-a)/max(a,b); a = mean distance to own label,
// b = smallest mean distance to another label. Singleton labels contribute
// 0. Requires >= 2 distinct labels.
double silhouette(std::span<const double> xy, std::span<const int> labels);

// Lloyd's algorithm from seeded farthest-point initialization, until the
// assignment reaches a fixpoint or 300 iterations. Deterministic per seed.
std::vector<int> kmeans(std::span<const double> xy, std::size_t k, std::uint64_t seed);

double purity(std::span<const int> pred, std::span<const int> truth);
double ari(std::span<const int> pred, std::span<const int> truth);
double nmi(std::span<const int> pred, std::span<const int> truth);

// Equal-width normalized histogram over [min, max]; integrates to 1.
// Constant input collapses to a single unit-width spike bin.
struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<double> density;
};

Histogram density_1d(std::span<const double> values, std::size_t bins);

} // namespace segfair
