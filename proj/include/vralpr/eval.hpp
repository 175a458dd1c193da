#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vralpr/pipeline.hpp"

namespace vralpr {

struct GroundTruthEntry {
  std::int64_t crossing_frame = 0;
  std::string plate_text;
};

/// Levenshtein distance with unit insert/delete/substitute costs.
std::size_t edit_distance(std::string_view a, std::string_view b);

struct MatchedPair {
  std::size_t record = 0;  ///< index into the records
  std::size_t gt = 0;      ///< index into the ground truth
  std::size_t distance = 0;
};

struct Matching {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  ///< (record, gt)
  std::vector<std::size_t> unmatched_records;
  std::vector<std::size_t> unmatched_gt;
};

/// Greedy one-to-one matching of records to ground truth on frame index:
/// candidate pairs within `frame_tolerance` are taken in order of absolute
/// frame difference, then ground-truth order, then record order.
Matching match_records(const std::vector<PlateRecord>& records, const std::vector<GroundTruthEntry>& gts,
                       std::int64_t frame_tolerance = 3);

struct CERReport {
  std::vector<MatchedPair> pairs;
  std::vector<std::size_t> unmatched_gt;
  std::vector<std::size_t> unmatched_records;
  std::size_t total_edits = 0;
  std::size_t total_gt_chars = 0;
  double cer = 0.0;        ///< total_edits / total_gt_chars
  double macro_cer = 0.0;  ///< mean over ground-truth plates of per-plate CER
  std::map<std::string, std::size_t> status_counts;
  std::int64_t frame_tolerance = 3;
};

/// Matched OK records cost their edit distance; failed records and missed
/// ground truth cost the full plate length. Unmatched records are reported
/// but never enter the rate. Throws EvalError on empty ground truth.
CERReport compute_cer(const std::vector<PlateRecord>& records, const std::vector<GroundTruthEntry>& gts,
                      std::int64_t frame_tolerance = 3);

std::string ground_truth_to_json(const GroundTruthEntry& e);
GroundTruthEntry ground_truth_from_json(std::string_view line);
void write_ground_truth(const std::filesystem::path& path, const std::vector<GroundTruthEntry>& gts);
std::vector<GroundTruthEntry> read_ground_truth(const std::filesystem::path& path);

/// The report as one JSON document.
std::string report_to_json(const CERReport& report, const std::vector<PlateRecord>& records,
                           const std::vector<GroundTruthEntry>& gts);

/// Human-readable per-plate table and totals.
std::string report_table(const CERReport& report, const std::vector<PlateRecord>& records,
                         const std::vector<GroundTruthEntry>& gts);

}  // namespace vralpr
