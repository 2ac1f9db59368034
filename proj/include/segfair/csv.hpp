#pragma once

#include <string>
#include <vector>

namespace segfair {

// Minimal RFC-4180-style CSV: quoted fields with embedded commas/quotes/
// newlines are supported. Lines starting with '#' are treated as comments
// (segfair writes a "# schema_version=N" comment at the top of its outputs).
std::vector<std::vector<std::string>> read_csv(const std::string& path);

std::string csv_escape(const std::string& field);

// Fixed "%.*g" formatting; keeps output byte-stable across runs.
std::string fmt_double(double v, int significant_digits = 12);

// Cohort metadata schema (input):
//   case_id,age,expert1,expert2,gold_path,silver_path,pred_path
// silver_path and pred_path may be empty. Paths are taken verbatim; the CLI
// resolves relative ones against per-role directories.
struct MetadataRow {
    std::string case_id;
    int age = 0;
    std::string expert1;
    std::string expert2;
    std::string gold_path;
    std::string silver_path;
    std::string pred_path;
};

std::vector<MetadataRow> read_metadata_csv(const std::string& path);

// Feature matrix schema (input): case_id,f0,f1,...
struct FeatureRow {
    std::string case_id;
    std::vector<double> features;
};

std::vector<FeatureRow> read_features_csv(const std::string& path);

} // namespace segfair
