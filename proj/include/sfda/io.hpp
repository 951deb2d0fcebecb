#pragma once

// CSV exchange formats.
//
//   curves.csv  header `curve_id,t,x`, long format, one row per observation
//   labels.csv  header `curve_id,label`, label a positive integer or empty

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sfda/smoother.hpp"

namespace sfda {

struct CurveReadResult {
    std::vector<RawCurve> curves;          // order of first appearance
    std::vector<std::string> dropped_ids;  // curves with missing values (drop_missing only)
};

/// Throws ParseError on malformed rows or duplicate (curve_id, t) pairs, and
/// InvalidArgument listing the offending ids when values are missing and
/// `drop_missing` is false.
CurveReadResult read_curves_csv(const std::filesystem::path& path, bool drop_missing = false);

std::map<std::string, std::optional<int>> read_labels_csv(const std::filesystem::path& path);

struct IngestResult {
    std::vector<RawCurve> curves;
    std::vector<std::optional<int>> labels;  // aligned with curves
    std::vector<std::string> dropped_ids;
};

/// Merges several curve files and label files. Curves without a label entry
/// are unlabeled.
IngestResult ingest_csv(const std::vector<std::filesystem::path>& curve_files,
                        const std::vector<std::filesystem::path>& label_files,
                        bool drop_missing = false);

void write_curves_csv(const std::filesystem::path& path, const std::vector<RawCurve>& curves);
void write_labels_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                      const std::vector<std::optional<int>>& labels);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// Opens `path` for writing, creating parent directories. Throws IoError.
std::ofstream open_output(const std::filesystem::path& path);

} // namespace sfda
