#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/fisher_f.hpp>

#include "siou/box.hpp"
#include "siou/criteria.hpp"
#include "siou/error.hpp"

namespace siou {

/// One human judgement: how well `proposal_box` detects the object outlined
/// by `gt_box`, on a 1 (very poor) to 5 (very good) scale.
struct RatingRecord {
  int rating;
  Box gt_box;
  Box proposal_box;
  std::optional<bool> context;
  std::optional<bool> expertise;
  std::optional<int> age;
};

/// Kendall tau-b between x and y (tie-corrected), by pair enumeration.
inline double kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw InvalidArgument("kendall tau needs equal-length inputs");
  }
  if (x.size() < 2) {
    throw InsufficientSamples("kendall tau needs at least two observations");
  }
  const std::size_t n = x.size();
  long long concordant = 0;
  long long discordant = 0;
  long long tied_x = 0;
  long long tied_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0.0) {
        ++tied_x;
      }
      if (dy == 0.0) {
        ++tied_y;
      }
      if (dx == 0.0 || dy == 0.0) {
        continue;
      }
      if ((dx > 0.0) == (dy > 0.0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const long long pairs = static_cast<long long>(n) * static_cast<long long>(n - 1) / 2;
  if (tied_x == pairs || tied_y == pairs) {
    throw DegenerateInput("kendall tau is undefined when every value is tied");
  }
  const double denom = std::sqrt(static_cast<double>(pairs - tied_x)) *
                       std::sqrt(static_cast<double>(pairs - tied_y));
  return static_cast<double>(concordant - discordant) / denom;
}

inline std::vector<double> criterion_values(std::span<const RatingRecord> records, CriterionId id,
                                            const CriterionParams& params) {
  std::vector<double> v;
  v.reserve(records.size());
  for (const auto& r : records) {
    v.push_back(evaluate(id, r.proposal_box, r.gt_box, params));
  }
  return v;
}

/// Pooled tau between per-record criterion values and ratings.
inline double criterion_rating_correlation(std::span<const RatingRecord> records, CriterionId id,
                                           const CriterionParams& params) {
  if (records.size() < 2) {
    throw InsufficientSamples("correlation needs at least two records");
  }
  const auto values = criterion_values(records, id, params);
  std::vector<double> ratings;
  ratings.reserve(records.size());
  for (const auto& r : records) {
    ratings.push_back(static_cast<double>(r.rating));
  }
  return kendall_tau(values, ratings);
}

// ---------------------------------------------------------------------------
// Relative gaps c_{s,r}

/// c_s = (m_s - M) / M with M the mean of the three size-class means.
inline std::array<double, 3> relative_gap_from_means(const std::array<double, 3>& means) {
  const double m = (means[0] + means[1] + means[2]) / 3.0;
  if (m == 0.0) {
    throw DegenerateInput("relative gap is undefined when the cross-size mean is 0");
  }
  return {(means[0] - m) / m, (means[1] - m) / m, (means[2] - m) / m};
}

struct RelativeGapRow {
  int rating;
  std::array<double, 3> cell_mean;  // small, medium, large
  std::array<double, 3> gap;
  std::array<std::size_t, 3> count;
};

/// One row per rating present in `records`; size classes come from the
/// ground-truth box. Throws EmptyCell naming every (size, rating) cell that has
/// no record.
inline std::vector<RelativeGapRow> relative_gap(std::span<const RatingRecord> records,
                                                CriterionId id, const CriterionParams& params) {
  std::map<int, std::array<double, 3>> sums;
  std::map<int, std::array<std::size_t, 3>> counts;
  for (const auto& r : records) {
    const auto s = static_cast<std::size_t>(size_class(r.gt_box));
    auto& sum = sums.try_emplace(r.rating, std::array<double, 3>{}).first->second;
    auto& cnt = counts.try_emplace(r.rating, std::array<std::size_t, 3>{}).first->second;
    sum[s] += evaluate(id, r.proposal_box, r.gt_box, params);
    ++cnt[s];
  }
  std::string missing;
  for (const auto& [rating, cnt] : counts) {
    for (std::size_t s = 0; s < 3; ++s) {
      if (cnt[s] == 0) {
        missing += (missing.empty() ? "" : ", ") + std::string(to_string(SizeClass(s))) +
                   "/r=" + std::to_string(rating);
      }
    }
  }
  if (!missing.empty()) {
    throw EmptyCell("relative gap has empty cells: " + missing);
  }
  std::vector<RelativeGapRow> rows;
  for (const auto& [rating, cnt] : counts) {
    RelativeGapRow row{rating, {}, {}, cnt};
    for (std::size_t s = 0; s < 3; ++s) {
      row.cell_mean[s] = sums[rating][s] / static_cast<double>(cnt[s]);
    }
    row.gap = relative_gap_from_means(row.cell_mean);
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Group means

enum class Grouping { Size, Context, Expertise, AgeBucket };

inline Grouping parse_grouping(std::string_view name) {
  if (name == "size") {
    return Grouping::Size;
  }
  if (name == "context") {
    return Grouping::Context;
  }
  if (name == "expertise") {
    return Grouping::Expertise;
  }
  if (name == "age" || name == "age-bucket") {
    return Grouping::AgeBucket;
  }
  throw InvalidArgument("unknown grouping '" + std::string(name) + "'");
}

/// Age tertiles (10,25], (25,40], (40,65]; anything else is "other".
inline std::string age_bucket(int age) {
  if (age > 10 && age <= 25) {
    return "(10,25]";
  }
  if (age > 25 && age <= 40) {
    return "(25,40]";
  }
  if (age > 40 && age <= 65) {
    return "(40,65]";
  }
  return "other";
}

/// Group label of a record, or nullopt when the grouping field is absent.
inline std::optional<std::string> group_label(const RatingRecord& r, Grouping g) {
  switch (g) {
  case Grouping::Size:
    return std::string(to_string(size_class(r.gt_box)));
  case Grouping::Context:
    if (!r.context) {
      return std::nullopt;
    }
    return *r.context ? "with-context" : "without-context";
  case Grouping::Expertise:
    if (!r.expertise) {
      return std::nullopt;
    }
    return *r.expertise ? "expert" : "non-expert";
  case Grouping::AgeBucket:
    if (!r.age) {
      return std::nullopt;
    }
    return age_bucket(*r.age);
  }
  return std::nullopt;
}

struct GroupMeanRow {
  std::string group;
  std::size_t n;
  double mean_rating;
  double mean_criterion;
};

/// Mean rating and mean criterion value per group, ordered by group label.
/// Records lacking the grouping field are left out.
inline std::vector<GroupMeanRow> group_means(std::span<const RatingRecord> records,
                                             Grouping grouping, CriterionId id,
                                             const CriterionParams& params) {
  struct Acc {
    std::size_t n = 0;
    double rating = 0.0;
    double crit = 0.0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& r : records) {
    const auto label = group_label(r, grouping);
    if (!label) {
      continue;
    }
    auto& a = acc[*label];
    ++a.n;
    a.rating += r.rating;
    a.crit += evaluate(id, r.proposal_box, r.gt_box, params);
  }
  std::vector<GroupMeanRow> rows;
  for (const auto& [label, a] : acc) {
    const double n = static_cast<double>(a.n);
    rows.push_back({label, a.n, a.rating / n, a.crit / n});
  }
  return rows;
}

/// Ratings split by grouping, in group-label order; the input to one_way_anova.
inline std::vector<std::vector<double>> ratings_by_group(std::span<const RatingRecord> records,
                                                         Grouping grouping) {
  std::map<std::string, std::vector<double>> groups;
  for (const auto& r : records) {
    if (const auto label = group_label(r, grouping)) {
      groups[*label].push_back(static_cast<double>(r.rating));
    }
  }
  std::vector<std::vector<double>> out;
  for (auto& [_, v] : groups) {
    out.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// One-way ANOVA

struct AnovaResult {
  double f_statistic;
  double p_value;
  double df_between;
  double df_within;
};

inline AnovaResult one_way_anova(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) {
    throw InsufficientSamples("ANOVA needs at least two groups");
  }
  std::size_t total_n = 0;
  double grand_sum = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) {
      throw InsufficientSamples("ANOVA needs at least two samples per group");
    }
    total_n += g.size();
    for (double v : g) {
      grand_sum += v;
    }
  }
  const double grand_mean = grand_sum / static_cast<double>(total_n);
  double ss_between = 0.0;
  double ss_within = 0.0;
  for (const auto& g : groups) {
    double sum = 0.0;
    for (double v : g) {
      sum += v;
    }
    const double mean = sum / static_cast<double>(g.size());
    ss_between += static_cast<double>(g.size()) * (mean - grand_mean) * (mean - grand_mean);
    for (double v : g) {
      ss_within += (v - mean) * (v - mean);
    }
  }
  if (ss_within <= 0.0) {
    throw DegenerateInput("ANOVA is undefined with zero within-group variance");
  }
  const double df_b = static_cast<double>(groups.size() - 1);
  const double df_w = static_cast<double>(total_n - groups.size());
  const double f = (ss_between / df_b) / (ss_within / df_w);
  const boost::math::fisher_f_distribution<double> dist(df_b, df_w);
  const double p = boost::math::cdf(boost::math::complement(dist, f));
  return {f, p, df_b, df_w};
}

} // namespace siou
