#include "segfair/embedding.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "segfair/error.hpp"
#include "segfair/rng.hpp"

namespace segfair {

void FeatureMatrix::validate() const {
    if (n < 5) throw ArgError("feature matrix requires n >= 5 rows");
    if (d == 0) throw ArgError("feature matrix requires d >= 1 columns");
    if (values.size() != n * d) throw ArgError("feature matrix size mismatch");
    if (labels.size() != n) throw ArgError("feature matrix label count mismatch");
    for (double v : values)
        if (!std::isfinite(v)) throw ArgError("feature matrix contains non-finite values");
}

std::vector<double> pca(const FeatureMatrix& x, std::size_t ncomp, bool* degenerate) {
    x.validate();
    if (ncomp == 0 || ncomp > std::min(x.n, x.d))
        throw ArgError("pca requires 1 <= ncomp <= min(n,d)");
    if (degenerate) *degenerate = false;

    using Matrix = Eigen::MatrixXd;
    Eigen::Map<const Matrix> data(x.values.data(), static_cast<Eigen::Index>(x.d),
                                  static_cast<Eigen::Index>(x.n));
    // `data` is d x n because the storage is row-major; work with columns = rows.
    Matrix centered = data;
    const Eigen::VectorXd mean = centered.rowwise().mean();
    centered.colwise() -= mean;

    Matrix cov = centered * centered.transpose() / static_cast<double>(x.n - 1);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
    if (solver.info() != Eigen::Success) throw InternalError("PCA eigensolver failed");

    if (solver.eigenvalues().maxCoeff() <= 1e-300) {
        if (degenerate) *degenerate = true;
        return std::vector<double>(x.n * ncomp, 0.0);
    }

    std::vector<double> out(x.n * ncomp, 0.0);
    for (std::size_t c = 0; c < ncomp; ++c) {
        Eigen::VectorXd dir = solver.eigenvectors().col(
            static_cast<Eigen::Index>(x.d - 1 - c)); // descending eigenvalue order
        Eigen::Index imax = 0;
        dir.cwiseAbs().maxCoeff(&imax);
        if (dir[imax] < 0.0) dir = -dir;
        const Eigen::VectorXd proj = centered.transpose() * dir;
        for (std::size_t i = 0; i < x.n; ++i)
            out[i * ncomp + c] = proj[static_cast<Eigen::Index>(i)];
    }
    return out;
}

namespace {

std::vector<double> squared_distances(std::span<const double> x, std::size_t n,
                                      std::size_t d) {
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = x[i * d + c] - x[j * d + c];
                s += diff * diff;
            }
            dist[i * n + j] = s;
            dist[j * n + i] = s;
        }
    }
    return dist;
}

} // namespace

std::vector<double> tsne_conditional(std::span<const double> x, std::size_t n,
                                     std::size_t d, double perplexity) {
    if (n < 2) throw ArgError("tsne_conditional requires n >= 2");
    if (!(perplexity > 0.0) || 3.0 * perplexity >= static_cast<double>(n - 1))
        throw ArgError("perplexity infeasible for n points (need 0 < perp < (n-1)/3)");

    const auto dist = squared_distances(x, n, d);
    const double target_entropy = std::log(perplexity);
    std::vector<double> p(n * n, 0.0);
    std::vector<double> row(n);

    for (std::size_t i = 0; i < n; ++i) {
        // Bisection on the precision beta = 1/(2 sigma^2) of point i's kernel
        // until the row entropy matches log(perplexity) within 1e-5.
        double beta = 1.0;
        double beta_min = -std::numeric_limits<double>::infinity();
        double beta_max = std::numeric_limits<double>::infinity();

        double sum = 0.0;
        for (int iter = 0; iter < 50; ++iter) {
            sum = 0.0;
            double weighted = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) { row[j] = 0.0; continue; }
                row[j] = std::exp(-beta * dist[i * n + j]);
                sum += row[j];
                weighted += dist[i * n + j] * row[j];
            }
            const double entropy = std::log(sum) + beta * weighted / sum;
            const double diff = entropy - target_entropy;
            if (std::fabs(diff) < 1e-5) break;
            if (diff > 0.0) {
                beta_min = beta;
                beta = std::isinf(beta_max) ? beta * 2.0 : 0.5 * (beta + beta_max);
            } else {
                beta_max = beta;
                beta = std::isinf(beta_min) ? beta * 0.5 : 0.5 * (beta + beta_min);
            }
        }
        for (std::size_t j = 0; j < n; ++j) p[i * n + j] = row[j] / sum;
    }
    return p;
}

std::vector<double> tsne_affinities(std::span<const double> x, std::size_t n,
                                    std::size_t d, double perplexity) {
    std::vector<double> p = tsne_conditional(x, n, d, perplexity);

    // Symmetrize and normalize to a joint distribution summing to 1.
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = p[i * n + j] + p[j * n + i];
            p[i * n + j] = v;
            p[j * n + i] = v;
            total += 2.0 * v;
        }
    }
    for (double& v : p) v /= total;
    return p;
}

std::vector<double> tsne_gradient(std::span<const double> p, std::span<const double> y,
                                  std::size_t n, double exaggeration) {
    std::vector<double> w(n * n, 0.0);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = y[2 * i] - y[2 * j];
            const double dy = y[2 * i + 1] - y[2 * j + 1];
            const double v = 1.0 / (1.0 + dx * dx + dy * dy);
            w[i * n + j] = v;
            w[j * n + i] = v;
            z += 2.0 * v;
        }
    }

    std::vector<double> grad(2 * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double wij = w[i * n + j];
            const double mult = 4.0 * (exaggeration * p[i * n + j] - wij / z) * wij;
            grad[2 * i] += mult * (y[2 * i] - y[2 * j]);
            grad[2 * i + 1] += mult * (y[2 * i + 1] - y[2 * j + 1]);
        }
    }
    return grad;
}

double tsne_kl(std::span<const double> p, std::span<const double> y, std::size_t n) {
    double z = 0.0;
    std::vector<double> w(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = y[2 * i] - y[2 * j];
            const double dy = y[2 * i + 1] - y[2 * j + 1];
            const double v = 1.0 / (1.0 + dx * dx + dy * dy);
            w[i * n + j] = v;
            w[j * n + i] = v;
            z += 2.0 * v;
        }
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double pij = p[i * n + j];
            if (pij <= 0.0) continue;
            const double qij = std::max(w[i * n + j] / z, 1e-300);
            kl += pij * std::log(pij / qij);
        }
    }
    return kl;
}

TsneResult tsne(const FeatureMatrix& x, const TsneParams& params) {
    x.validate();
    const std::size_t n = x.n;
    double perplexity = params.perplexity;
    if (perplexity <= 0.0)
        perplexity = std::clamp(static_cast<double>(n) / 10.0, 5.0, 50.0);
    if (params.iters < 1) throw ArgError("tsne requires iters >= 1");

    const auto p = tsne_affinities(x.values, n, x.d, perplexity);

    // PCA init, rescaled to std 1e-4 per embedding dimension.
    std::vector<double> y = pca(x, 2);
    for (std::size_t c = 0; c < 2; ++c) {
        double mean = 0.0, ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += y[2 * i + c];
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double dv = y[2 * i + c] - mean;
            ss += dv * dv;
        }
        const double sd = std::sqrt(ss / static_cast<double>(n));
        if (sd > 0.0) {
            const double scale = 1e-4 / sd;
            for (std::size_t i = 0; i < n; ++i) y[2 * i + c] = (y[2 * i + c] - mean) * scale;
        }
    }

    TsneResult result;
    std::vector<double> velocity(2 * n, 0.0);
    std::vector<double> gains(2 * n, 1.0);

    for (int it = 0; it < params.iters; ++it) {
        if (it % 50 == 0) result.kl_trace.push_back(tsne_kl(p, y, n));
        const double exaggeration =
            it < params.exaggeration_iters ? params.early_exaggeration : 1.0;
        const double momentum = it < params.momentum_switch_iter
                                    ? params.momentum_initial
                                    : params.momentum_final;
        const auto grad = tsne_gradient(p, y, n, exaggeration);

        for (std::size_t i = 0; i < 2 * n; ++i) {
            const bool same_sign = (grad[i] > 0.0) == (velocity[i] > 0.0);
            gains[i] = same_sign ? gains[i] * 0.8 : gains[i] + 0.2;
            gains[i] = std::max(gains[i], 0.01);
            velocity[i] = momentum * velocity[i] - params.learning_rate * gains[i] * grad[i];
            y[i] += velocity[i];
        }
        // keep the embedding centered
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mx += y[2 * i];
            my += y[2 * i + 1];
        }
        mx /= static_cast<double>(n);
        my /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[2 * i] -= mx;
            y[2 * i + 1] -= my;
        }
    }

    result.kl_final = tsne_kl(p, y, n);
    result.kl_trace.push_back(result.kl_final);
    result.kl_initial = result.kl_trace.front();
    result.embedding = std::move(y);
    return result;
}

double silhouette(std::span<const double> xy, std::span<const int> labels) {
    const std::size_t n = labels.size();
    if (xy.size() != 2 * n) throw ArgError("silhouette point/label count mismatch");
    std::map<int, std::size_t> counts;
    for (int l : labels) ++counts[l];
    if (counts.size() < 2) throw ArgError("silhouette requires >= 2 distinct labels");

    auto distance = [&](std::size_t i, std::size_t j) {
        const double dx = xy[2 * i] - xy[2 * j];
        const double dy = xy[2 * i + 1] - xy[2 * j + 1];
        return std::sqrt(dx * dx + dy * dy);
    };

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (counts[labels[i]] == 1) continue; // singleton contributes 0
        std::map<int, double> sum_to_label;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            sum_to_label[labels[j]] += distance(i, j);
        }
        const double a = sum_to_label[labels[i]] /
                         static_cast<double>(counts[labels[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (const auto& [label, sum] : sum_to_label) {
            if (label == labels[i]) continue;
            b = std::min(b, sum / static_cast<double>(counts[label]));
        }
        const double m = std::max(a, b);
        total += m > 0.0 ? (b - a) / m : 0.0;
    }
    return total / static_cast<double>(n);
}

std::vector<int> kmeans(std::span<const double> xy, std::size_t k, std::uint64_t seed) {
    const std::size_t n = xy.size() / 2;
    if (k == 0 || k > n) throw ArgError("kmeans requires 1 <= k <= n");

    auto sq_dist = [&](std::size_t i, double cx, double cy) {
        const double dx = xy[2 * i] - cx;
        const double dy = xy[2 * i + 1] - cy;
        return dx * dx + dy * dy;
    };

    // Farthest-point initialization; ties toward the lower index.
    Rng rng(derive_seed(seed, "kmeans-init"));
    std::vector<double> cx(k), cy(k);
    {
        const std::size_t first = static_cast<std::size_t>(rng.bounded(n));
        cx[0] = xy[2 * first];
        cy[0] = xy[2 * first + 1];
        std::vector<double> nearest(n);
        for (std::size_t i = 0; i < n; ++i) nearest[i] = sq_dist(i, cx[0], cy[0]);
        for (std::size_t c = 1; c < k; ++c) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < n; ++i)
                if (nearest[i] > nearest[best]) best = i;
            cx[c] = xy[2 * best];
            cy[c] = xy[2 * best + 1];
            for (std::size_t i = 0; i < n; ++i)
                nearest[i] = std::min(nearest[i], sq_dist(i, cx[c], cy[c]));
        }
    }

    std::vector<int> assign(n, -1);
    for (int iter = 0; iter < 300; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = sq_dist(i, cx[0], cy[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = sq_dist(i, cx[c], cy[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[i] != static_cast<int>(best)) {
                assign[i] = static_cast<int>(best);
                changed = true;
            }
        }
        if (!changed) break;

        std::vector<double> sx(k, 0.0), sy(k, 0.0);
        std::vector<std::size_t> cnt(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sx[static_cast<std::size_t>(assign[i])] += xy[2 * i];
            sy[static_cast<std::size_t>(assign[i])] += xy[2 * i + 1];
            ++cnt[static_cast<std::size_t>(assign[i])];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (cnt[c] == 0) {
                // revive an empty cluster with the point farthest from its center
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const std::size_t a = static_cast<std::size_t>(assign[i]);
                    const double d = sq_dist(i, cx[a], cy[a]);
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                cx[c] = xy[2 * far];
                cy[c] = xy[2 * far + 1];
            } else {
                cx[c] = sx[c] / static_cast<double>(cnt[c]);
                cy[c] = sy[c] / static_cast<double>(cnt[c]);
            }
        }
    }
    return assign;
}

namespace {

// Contingency counts with cluster ids compacted to 0..K-1 in order of first
// appearance; shared by purity/ari/nmi.
struct Contingency {
    std::size_t n = 0;
    std::size_t rows = 0, cols = 0;
    std::vector<std::size_t> table; // rows x cols
    std::vector<std::size_t> row_sums, col_sums;
};

std::vector<int> compact_ids(std::span<const int> labels, std::size_t& k) {
    std::map<int, int> remap;
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        out[i] = remap.emplace(labels[i], static_cast<int>(remap.size())).first->second;
    k = remap.size();
    return out;
}

Contingency contingency(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size()) throw ArgError("partition length mismatch");
    if (pred.empty()) throw ArgError("empty partitions");
    Contingency c;
    c.n = pred.size();
    const auto p = compact_ids(pred, c.rows);
    const auto t = compact_ids(truth, c.cols);
    c.table.assign(c.rows * c.cols, 0);
    c.row_sums.assign(c.rows, 0);
    c.col_sums.assign(c.cols, 0);
    for (std::size_t i = 0; i < c.n; ++i) {
        ++c.table[static_cast<std::size_t>(p[i]) * c.cols + static_cast<std::size_t>(t[i])];
        ++c.row_sums[static_cast<std::size_t>(p[i])];
        ++c.col_sums[static_cast<std::size_t>(t[i])];
    }
    return c;
}

double choose2(std::size_t m) {
    return m < 2 ? 0.0 : 0.5 * static_cast<double>(m) * static_cast<double>(m - 1);
}

} // namespace

double purity(std::span<const int> pred, std::span<const int> truth) {
    const Contingency c = contingency(pred, truth);
    std::size_t sum_max = 0;
    for (std::size_t r = 0; r < c.rows; ++r) {
        std::size_t best = 0;
        for (std::size_t t = 0; t < c.cols; ++t)
            best = std::max(best, c.table[r * c.cols + t]);
        sum_max += best;
    }
    return static_cast<double>(sum_max) / static_cast<double>(c.n);
}

double ari(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() < 2) throw ArgError("ari requires n >= 2");
    const Contingency c = contingency(pred, truth);
    double cells = 0.0, rows = 0.0, cols = 0.0;
    for (std::size_t v : c.table) cells += choose2(v);
    for (std::size_t v : c.row_sums) rows += choose2(v);
    for (std::size_t v : c.col_sums) cols += choose2(v);
    const double pairs = choose2(c.n);
    const double expected = rows * cols / pairs;
    const double max_index = 0.5 * (rows + cols);
    if (max_index == expected) return 1.0; // both partitions trivial and identical
    return (cells - expected) / (max_index - expected);
}

double nmi(std::span<const int> pred, std::span<const int> truth) {
    const Contingency c = contingency(pred, truth);
    const double n = static_cast<double>(c.n);

    auto entropy = [&](const std::vector<std::size_t>& sums) {
        double h = 0.0;
        for (std::size_t v : sums) {
            if (v == 0) continue;
            const double q = static_cast<double>(v) / n;
            h -= q * std::log(q);
        }
        return h;
    };
    const double hp = entropy(c.row_sums);
    const double ht = entropy(c.col_sums);

    if (hp == 0.0 || ht == 0.0) {
        // one-cluster partition: NMI degenerates; identical-up-to-relabel -> 1
        std::size_t nonzero = 0;
        for (std::size_t v : c.table) nonzero += v != 0;
        const bool identical = nonzero == c.rows && nonzero == c.cols;
        return identical ? 1.0 : 0.0;
    }

    double mi = 0.0;
    for (std::size_t r = 0; r < c.rows; ++r) {
        for (std::size_t t = 0; t < c.cols; ++t) {
            const std::size_t v = c.table[r * c.cols + t];
            if (v == 0) continue;
            const double joint = static_cast<double>(v) / n;
            mi += joint * std::log(n * static_cast<double>(v) /
                                   (static_cast<double>(c.row_sums[r]) *
                                    static_cast<double>(c.col_sums[t])));
        }
    }
    return mi / std::sqrt(hp * ht);
}

Histogram density_1d(std::span<const double> values, std::size_t bins) {
    if (bins == 0) throw ArgError("density_1d requires bins >= 1");
    if (values.empty()) throw ArgError("density_1d of empty sample");

    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    Histogram h;
    h.lo = *lo_it;
    h.hi = *hi_it;
    if (h.lo == h.hi) {
        // constant sample: unit-width spike so the density still integrates to 1
        h.lo -= 0.5;
        h.hi += 0.5;
        h.density = {1.0};
        return h;
    }
    const double width = (h.hi - h.lo) / static_cast<double>(bins);
    std::vector<std::size_t> counts(bins, 0);
    for (double v : values) {
        std::size_t b = static_cast<std::size_t>((v - h.lo) / width);
        b = std::min(b, bins - 1); // the maximum lands in the last bin
        ++counts[b];
    }
    h.density.resize(bins);
    for (std::size_t b = 0; b < bins; ++b)
        h.density[b] =
            static_cast<double>(counts[b]) / (static_cast<double>(values.size()) * width);
    return h;
}

} // namespace segfair
