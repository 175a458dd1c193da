#include "vralpr/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <tuple>

#include "json_util.hpp"
#include "vralpr/error.hpp"

namespace vralpr {

using nlohmann::json;

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] != b[j - 1]);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

Matching match_records(const std::vector<PlateRecord>& records, const std::vector<GroundTruthEntry>& gts,
                       std::int64_t frame_tolerance) {
  // (|frame diff|, gt index, record index)
  std::vector<std::tuple<std::int64_t, std::size_t, std::size_t>> candidates;
  for (std::size_t r = 0; r < records.size(); ++r) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const auto diff = std::abs(records[r].frame_index - gts[g].crossing_frame);
      if (diff <= frame_tolerance) candidates.emplace_back(diff, g, r);
    }
  }
  std::sort(candidates.begin(), candidates.end());

  Matching m;
  std::vector<bool> record_used(records.size());
  std::vector<bool> gt_used(gts.size());
  for (const auto& [diff, g, r] : candidates) {
    if (record_used[r] || gt_used[g]) continue;
    record_used[r] = gt_used[g] = true;
    m.pairs.emplace_back(r, g);
  }
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (!record_used[r]) m.unmatched_records.push_back(r);
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!gt_used[g]) m.unmatched_gt.push_back(g);
  }
  return m;
}

CERReport compute_cer(const std::vector<PlateRecord>& records, const std::vector<GroundTruthEntry>& gts,
                      std::int64_t frame_tolerance) {
  if (gts.empty()) throw Error(ErrorCode::EvalError, "CER is undefined without ground truth");

  CERReport report;
  report.frame_tolerance = frame_tolerance;
  for (const auto& r : records) ++report.status_counts[std::string(to_string(r.status))];

  const Matching m = match_records(records, gts, frame_tolerance);
  std::vector<std::size_t> per_gt_edits(gts.size());
  for (const auto& [r, g] : m.pairs) {
    const auto& rec = records[r];
    const auto& truth = gts[g].plate_text;
    // A failed stage counts as every character misread.
    const std::size_t d = (rec.status == RecordStatus::OK && rec.text) ? edit_distance(*rec.text, truth)
                                                                       : truth.size();
    report.pairs.push_back({r, g, d});
    per_gt_edits[g] = d;
  }
  std::sort(report.pairs.begin(), report.pairs.end(),
            [](const MatchedPair& a, const MatchedPair& b) { return a.record < b.record; });
  for (const auto g : m.unmatched_gt) per_gt_edits[g] = gts[g].plate_text.size();
  report.unmatched_gt = m.unmatched_gt;
  report.unmatched_records = m.unmatched_records;

  double macro = 0.0;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    const auto n = gts[g].plate_text.size();
    report.total_edits += per_gt_edits[g];
    report.total_gt_chars += n;
    macro += n == 0 ? 0.0 : static_cast<double>(per_gt_edits[g]) / static_cast<double>(n);
  }
  if (report.total_gt_chars == 0) throw Error(ErrorCode::EvalError, "ground truth has no characters");
  report.cer = static_cast<double>(report.total_edits) / static_cast<double>(report.total_gt_chars);
  report.macro_cer = macro / static_cast<double>(gts.size());
  return report;
}

std::string ground_truth_to_json(const GroundTruthEntry& e) {
  return json{{"crossing_frame", e.crossing_frame}, {"plate_text", e.plate_text}}.dump();
}

GroundTruthEntry ground_truth_from_json(std::string_view line) {
  const json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::EvalError, "ground-truth line is not a JSON object");
  try {
    GroundTruthEntry e{j.at("crossing_frame").get<std::int64_t>(), j.at("plate_text").get<std::string>()};
    if (e.crossing_frame < 0) throw Error(ErrorCode::EvalError, "negative crossing_frame");
    if (e.plate_text.empty()) throw Error(ErrorCode::EvalError, "empty plate_text");
    return e;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::EvalError, std::string("malformed ground truth: ") + ex.what());
  }
}

void write_ground_truth(const std::filesystem::path& path, const std::vector<GroundTruthEntry>& gts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::SourceNotFound, "cannot write " + path.string());
  for (const auto& e : gts) out << ground_truth_to_json(e) << '\n';
}

std::vector<GroundTruthEntry> read_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::SourceNotFound, "cannot open " + path.string());
  std::vector<GroundTruthEntry> gts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    gts.push_back(ground_truth_from_json(line));
  }
  return gts;
}

std::string report_to_json(const CERReport& report, const std::vector<PlateRecord>& records,
                           const std::vector<GroundTruthEntry>& gts) {
  json pairs = json::array();
  for (const auto& p : report.pairs) {
    const auto& r = records[p.record];
    pairs.push_back({{"vehicle_id", r.vehicle_id},
                     {"frame_index", r.frame_index},
                     {"crossing_frame", gts[p.gt].crossing_frame},
                     {"plate_text", gts[p.gt].plate_text},
                     {"text", r.text ? json(*r.text) : json(nullptr)},
                     {"status", std::string(to_string(r.status))},
                     {"edit_distance", p.distance}});
  }
  json unmatched_gt = json::array();
  for (const auto g : report.unmatched_gt) {
    unmatched_gt.push_back({{"crossing_frame", gts[g].crossing_frame}, {"plate_text", gts[g].plate_text}});
  }
  json unmatched_records = json::array();
  for (const auto r : report.unmatched_records) {
    unmatched_records.push_back({{"vehicle_id", records[r].vehicle_id}, {"frame_index", records[r].frame_index}});
  }
  json doc{{"aggregation", "micro"},
           {"frame_tolerance", report.frame_tolerance},
           {"cer", report.cer},
           {"macro_cer", report.macro_cer},
           {"total_edits", report.total_edits},
           {"total_gt_chars", report.total_gt_chars},
           {"status_counts", report.status_counts},
           {"pairs", pairs},
           {"unmatched_gt", unmatched_gt},
           {"unmatched_records", unmatched_records}};
  return doc.dump(2);
}

std::string report_table(const CERReport& report, const std::vector<PlateRecord>& records,
                         const std::vector<GroundTruthEntry>& gts) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %-8s %-10s %-10s %-11s %s\n", "frame", "gt_frame", "truth", "read",
                "status", "edits");
  os << line;
  for (const auto& p : report.pairs) {
    const auto& r = records[p.record];
    std::snprintf(line, sizeof line, "%-8lld %-8lld %-10s %-10s %-11s %zu\n", static_cast<long long>(r.frame_index),
                  static_cast<long long>(gts[p.gt].crossing_frame), gts[p.gt].plate_text.c_str(),
                  r.text ? r.text->c_str() : "-", std::string(to_string(r.status)).c_str(), p.distance);
    os << line;
  }
  for (const auto g : report.unmatched_gt) {
    std::snprintf(line, sizeof line, "%-8s %-8lld %-10s %-10s %-11s %zu\n", "-",
                  static_cast<long long>(gts[g].crossing_frame), gts[g].plate_text.c_str(), "-", "MISSED",
                  gts[g].plate_text.size());
    os << line;
  }
  std::snprintf(line, sizeof line,
                "\nCER (micro) %.4f  = %zu / %zu   macro %.4f   tolerance %lld frames\n"
                "matched %zu   missed %zu   spurious records %zu\n",
                report.cer, report.total_edits, report.total_gt_chars, report.macro_cer,
                static_cast<long long>(report.frame_tolerance), report.pairs.size(), report.unmatched_gt.size(),
                report.unmatched_records.size());
  os << line;
  return os.str();
}

}  // namespace vralpr
