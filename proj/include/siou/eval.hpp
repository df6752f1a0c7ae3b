#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "siou/box.hpp"
#include "siou/criteria.hpp"
#include "siou/error.hpp"

namespace siou {

struct GroundTruthRecord {
  std::string image_id;
  std::string category;
  Box box;
};

struct DetectionRecord {
  std::string image_id;
  std::string category;
  Box box;
  double score;
};

/// Matching criterion and thresholds. Thresholds on GIoU/GSIoU are accepted but
/// are not a standard protocol.
struct EvalConfig {
  CriterionId criterion = CriterionId::IoU;
  CriterionParams params = CriterionParams::evaluation_preset();
  std::vector<double> thresholds{0.5};
  std::optional<SizeClass> size_filter;

  void validate() const {
    params.validate();
    if (thresholds.empty()) {
      throw InvalidArgument("at least one threshold is required");
    }
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      if (!(thresholds[i] > 0.0 && thresholds[i] <= 1.0)) {
        throw InvalidArgument("thresholds must lie in (0, 1]");
      }
      if (i > 0 && thresholds[i] < thresholds[i - 1]) {
        throw InvalidArgument("thresholds must be sorted ascending");
      }
    }
  }
};

/// COCO-style threshold ladder 0.50:0.05:0.95.
inline std::vector<double> coco_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) {
    t.push_back(0.5 + 0.05 * i);
  }
  return t;
}

enum class MatchLabel { TP, FP, Ignored };

inline std::string_view to_string(MatchLabel l) noexcept {
  switch (l) {
  case MatchLabel::TP:
    return "TP";
  case MatchLabel::FP:
    return "FP";
  case MatchLabel::Ignored:
    return "ignored";
  }
  return "?";
}

namespace detail {

using GroupKey = std::pair<std::string, std::string>;  // (image_id, category)

template <class Record>
std::map<GroupKey, std::vector<std::size_t>> group_indices(std::span<const Record> records) {
  std::map<GroupKey, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) {
    groups[{records[i].image_id, records[i].category}].push_back(i);
  }
  return groups;
}

// Descending score; ties broken by image_id, then input index.
inline std::vector<std::size_t> ranking(std::span<const DetectionRecord> dets,
                                        std::vector<std::size_t> idx) {
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].score != dets[b].score) {
      return dets[a].score > dets[b].score;
    }
    if (dets[a].image_id != dets[b].image_id) {
      return dets[a].image_id < dets[b].image_id;
    }
    return a < b;
  });
  return idx;
}

inline bool outside_bucket(const Box& b, const std::optional<SizeClass>& filter) {
  return filter && size_class(b) != *filter;
}

} // namespace detail

/// Label every detection (result is indexed like `dets`).
///
/// Within each (image, category) group, detections are visited by descending
/// score and matched greedily to the unmatched ground truth with the highest
/// criterion value, provided that value reaches `threshold`. With a size
/// filter, ground truths outside the bucket are ignore regions: a detection
/// that only matches one of them is Ignored, and an unmatched detection that
/// is itself outside the bucket is Ignored too.
inline std::vector<MatchLabel> match_detections(std::span<const DetectionRecord> dets,
                                                std::span<const GroundTruthRecord> gts,
                                                const EvalConfig& config, double threshold) {
  std::vector<MatchLabel> labels(dets.size(), MatchLabel::FP);
  const auto gt_groups = detail::group_indices(gts);
  const auto det_groups = detail::group_indices(dets);
  static const std::vector<std::size_t> kNone;

  for (const auto& [key, det_idx] : det_groups) {
    const auto it = gt_groups.find(key);
    const auto& gt_idx = it == gt_groups.end() ? kNone : it->second;
    std::vector<bool> matched(gt_idx.size(), false);
    std::vector<bool> ignored(gt_idx.size(), false);
    for (std::size_t j = 0; j < gt_idx.size(); ++j) {
      ignored[j] = detail::outside_bucket(gts[gt_idx[j]].box, config.size_filter);
    }

    for (std::size_t d : detail::ranking(dets, det_idx)) {
      std::optional<std::size_t> best;
      double best_value = -std::numeric_limits<double>::infinity();
      std::optional<std::size_t> best_ignored;
      double best_ignored_value = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < gt_idx.size(); ++j) {
        const double v =
            evaluate(config.criterion, dets[d].box, gts[gt_idx[j]].box, config.params);
        if (v < threshold) {
          continue;
        }
        if (ignored[j]) {
          if (v > best_ignored_value) {
            best_ignored = j;
            best_ignored_value = v;
          }
        } else if (!matched[j] && v > best_value) {
          best = j;
          best_value = v;
        }
      }
      if (best) {
        matched[*best] = true;
        labels[d] = MatchLabel::TP;
      } else if (best_ignored || detail::outside_bucket(dets[d].box, config.size_filter)) {
        labels[d] = MatchLabel::Ignored;
      } else {
        labels[d] = MatchLabel::FP;
      }
    }
  }
  return labels;
}

/// All-point interpolated AP over labels already ranked by descending score.
/// Ignored labels are skipped. Returns nullopt when there is nothing to
/// evaluate (no ground truth and no detection), 0 when detections exist
/// without any ground truth.
inline std::optional<double> average_precision(std::span<const MatchLabel> ranked,
                                               std::size_t n_ground_truth) {
  std::vector<bool> is_tp;
  is_tp.reserve(ranked.size());
  for (MatchLabel l : ranked) {
    if (l != MatchLabel::Ignored) {
      is_tp.push_back(l == MatchLabel::TP);
    }
  }
  if (n_ground_truth == 0) {
    if (is_tp.empty()) {
      return std::nullopt;
    }
    return 0.0;
  }
  // Extended precision so simple cases round to the nearest double (5/6, not 5/6 - ulp).
  std::vector<long double> precision(is_tp.size());
  std::size_t tp = 0;
  for (std::size_t k = 0; k < is_tp.size(); ++k) {
    tp += is_tp[k] ? 1 : 0;
    precision[k] = static_cast<long double>(tp) / static_cast<long double>(k + 1);
  }
  // Monotone envelope: best precision at this recall or beyond.
  for (std::size_t k = precision.size(); k-- > 1;) {
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  }
  long double ap = 0.0L;
  for (std::size_t k = 0; k < is_tp.size(); ++k) {
    if (is_tp[k]) {
      ap += precision[k];
    }
  }
  return static_cast<double>(ap / static_cast<long double>(n_ground_truth));
}

struct ApRow {
  std::string category;
  std::string bucket;
  double threshold;
  std::optional<double> ap;
  std::size_t n_ground_truth;
  std::size_t n_true_positive;
};

struct MapRow {
  std::string bucket;
  // nullopt marks the average over all thresholds.
  std::optional<double> threshold;
  std::optional<double> map;
};

struct MapReport {
  std::vector<ApRow> per_category;
  std::vector<MapRow> summary;
};

inline std::string bucket_name(const std::optional<SizeClass>& filter) {
  return filter ? std::string(to_string(*filter)) : std::string("all");
}

/// AP per (category, threshold) for the configured size bucket, mAP per
/// threshold (unweighted mean over categories with a defined AP) and the mean
/// of those mAPs over the threshold list.
inline MapReport map_report(std::span<const DetectionRecord> dets,
                            std::span<const GroundTruthRecord> gts, const EvalConfig& config) {
  config.validate();
  std::set<std::string> categories;
  for (const auto& g : gts) {
    categories.insert(g.category);
  }
  for (const auto& d : dets) {
    categories.insert(d.category);
  }
  const std::string bucket = bucket_name(config.size_filter);

  std::map<std::string, std::vector<std::size_t>> det_by_cat;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    det_by_cat[dets[i].category].push_back(i);
  }
  std::map<std::string, std::size_t> gt_count;
  for (const auto& g : gts) {
    if (!detail::outside_bucket(g.box, config.size_filter)) {
      ++gt_count[g.category];
    }
  }

  MapReport report;
  std::vector<std::optional<double>> map_per_threshold;
  for (double t : config.thresholds) {
    const auto labels = match_detections(dets, gts, config, t);
    double sum = 0.0;
    std::size_t n_defined = 0;
    for (const auto& cat : categories) {
      const auto ranked_idx = detail::ranking(dets, det_by_cat[cat]);
      std::vector<MatchLabel> ranked;
      ranked.reserve(ranked_idx.size());
      std::size_t n_tp = 0;
      for (std::size_t i : ranked_idx) {
        ranked.push_back(labels[i]);
        n_tp += labels[i] == MatchLabel::TP ? 1 : 0;
      }
      const std::size_t n_gt = gt_count[cat];
      const auto ap = average_precision(ranked, n_gt);
      if (ap) {
        sum += *ap;
        ++n_defined;
      }
      report.per_category.push_back({cat, bucket, t, ap, n_gt, n_tp});
    }
    std::optional<double> m;
    if (n_defined > 0) {
      m = sum / static_cast<double>(n_defined);
    }
    map_per_threshold.push_back(m);
    report.summary.push_back({bucket, t, m});
  }

  double sum = 0.0;
  std::size_t n_defined = 0;
  for (const auto& m : map_per_threshold) {
    if (m) {
      sum += *m;
      ++n_defined;
    }
  }
  std::optional<double> mean;
  if (n_defined > 0) {
    mean = sum / static_cast<double>(n_defined);
  }
  report.summary.push_back({bucket, std::nullopt, mean});
  return report;
}

/// map_report for the "all" bucket followed by small, medium and large.
inline MapReport map_report_all_buckets(std::span<const DetectionRecord> dets,
                                        std::span<const GroundTruthRecord> gts,
                                        EvalConfig config) {
  MapReport out;
  const std::optional<SizeClass> buckets[] = {std::nullopt, SizeClass::Small, SizeClass::Medium,
                                              SizeClass::Large};
  for (const auto& b : buckets) {
    config.size_filter = b;
    auto r = map_report(dets, gts, config);
    out.per_category.insert(out.per_category.end(), r.per_category.begin(), r.per_category.end());
    out.summary.insert(out.summary.end(), r.summary.begin(), r.summary.end());
  }
  return out;
}

} // namespace siou
