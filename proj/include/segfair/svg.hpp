#pragma once

#include <optional>
#include <string>
#include <vector>

#include "segfair/embedding.hpp"

namespace segfair {

// Self-emitted SVG figures; no plotting dependency. Output is byte-stable
// for identical inputs. A generation timestamp comment is included unless
// `deterministic` is set.

struct ScatterPoint {
    double x = 0.0;
    double y = 0.0;
    std::string group;
};

struct FitLine {
    double slope = 0.0;
    double intercept = 0.0;
    std::string annotation; // e.g. "R²=0.0104, p=0.0001"
};

void write_scatter_svg(const std::string& path, const std::string& title,
                       const std::string& xlabel, const std::string& ylabel,
                       const std::vector<ScatterPoint>& points,
                       const std::optional<FitLine>& fit, bool deterministic);

// One box per (label, sample) pair: median, quartile box, 1.5 IQR whiskers,
// outliers as dots.
void write_box_svg(const std::string& path, const std::string& title,
                   const std::string& ylabel,
                   const std::vector<std::pair<std::string, std::vector<double>>>& groups,
                   bool deterministic);

// Overlaid per-group density polylines (used for the first embedding
// dimension).
void write_density_svg(const std::string& path, const std::string& title,
                       const std::string& xlabel,
                       const std::vector<std::pair<std::string, Histogram>>& groups,
                       bool deterministic);

} // namespace segfair
