#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "siou/box.hpp"
#include "siou/criteria.hpp"
#include "siou/error.hpp"
#include "siou/random.hpp"

namespace siou {

enum class ShiftDirection { Horizontal, Diagonal };

/// Stochastic detector-inaccuracy model. The predicted box is offset from the
/// ground truth by X ~ N(0, sigma(omega)^2) with sigma(omega) = sigma_base +
/// sigma_slope * omega, along x only or along both axes (Diagonal). The ground
/// truth is a square of width size_ratio * omega.
struct ShiftModel {
  ShiftDirection direction = ShiftDirection::Horizontal;
  double sigma_base = 16.0;
  double sigma_slope = 0.0;
  double size_ratio = 1.0;

  double sigma(double omega) const noexcept { return sigma_base + sigma_slope * omega; }

  void validate() const {
    if (!(sigma_base > 0.0) || !std::isfinite(sigma_base)) {
      throw InvalidArgument("sigma must be > 0");
    }
    if (!(sigma_slope >= 0.0) || !std::isfinite(sigma_slope)) {
      throw InvalidArgument("sigma slope must be >= 0");
    }
    if (!(size_ratio > 0.0) || !std::isfinite(size_ratio)) {
      throw InvalidArgument("size ratio must be > 0");
    }
  }
};

struct PdfPoint {
  double z;
  double density;
};

struct DistributionSummary {
  double omega = 0.0;
  double mean = 0.0;
  double std_dev = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  std::optional<std::vector<PdfPoint>> pdf;
};

// ---------------------------------------------------------------------------
// Shift response

struct CurvePoint {
  double shift;
  double value;
};

/// The pair compared at a given offset: the ground truth is a square of width
/// size_ratio * omega at the origin; the prediction is an omega-wide square
/// moved by `shift` along x (Horizontal) or along both axes (Diagonal).
inline std::pair<Box, Box> shifted_pair(double omega, double shift, ShiftDirection direction,
                                        double size_ratio) {
  const double r = size_ratio * omega;
  const Box truth(0.0, 0.0, r, r);
  const double dy = direction == ShiftDirection::Diagonal ? shift : 0.0;
  return {Box(shift, dy, omega, omega), truth};
}

inline std::vector<CurvePoint> shift_curve(CriterionId id, double omega,
                                           std::span<const double> shifts,
                                           ShiftDirection direction, double size_ratio,
                                           const CriterionParams& params) {
  if (!(omega > 0.0)) {
    throw InvalidArgument("omega must be > 0");
  }
  std::vector<CurvePoint> out;
  out.reserve(shifts.size());
  for (double s : shifts) {
    if (!(s >= 0.0)) {
      throw InvalidArgument("shifts must be non-negative");
    }
    const auto [pred, truth] = shifted_pair(omega, s, direction, size_ratio);
    out.push_back({s, evaluate(id, pred, truth, params)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo

inline constexpr std::size_t kSimulationChunk = std::size_t{1} << 15;

/// Standard-normal shift draws for stream `seed`. Draw i only depends on
/// (seed, i / kSimulationChunk), so the result is identical for any thread count.
inline std::vector<double> standard_normal_draws(std::size_t n, std::uint64_t seed,
                                                 unsigned threads = rng::default_thread_count()) {
  std::vector<double> out(n);
  const std::size_t n_chunks = (n + kSimulationChunk - 1) / kSimulationChunk;
  rng::for_each_chunk(n_chunks, threads, [&](std::size_t c) {
    std::mt19937_64 gen(rng::derive_seed(seed, static_cast<std::uint64_t>(c)));
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t begin = c * kSimulationChunk;
    const std::size_t end = std::min(n, begin + kSimulationChunk);
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = normal(gen);
    }
  });
  return out;
}

/// n i.i.d. draws of Z = C(pred, truth) with the prediction offset by
/// X ~ N(0, sigma(omega)^2). Deterministic in (seed, model, n); the shift
/// sequence does not depend on the criterion, so two criteria simulated with
/// the same seed are evaluated on identical shifts.
inline std::vector<double> simulate_criterion(CriterionId id, double omega,
                                              const ShiftModel& model, std::size_t n,
                                              std::uint64_t seed, const CriterionParams& params,
                                              unsigned threads = rng::default_thread_count()) {
  if (n < 1) {
    throw InvalidArgument("simulation needs n >= 1");
  }
  if (!(omega > 0.0)) {
    throw InvalidArgument("omega must be > 0");
  }
  model.validate();
  const double sigma = model.sigma(omega);
  std::vector<double> z = standard_normal_draws(n, seed, threads);
  const std::size_t n_chunks = (n + kSimulationChunk - 1) / kSimulationChunk;
  const double r = model.size_ratio * omega;
  const Box truth(0.0, 0.0, r, r);
  const bool diagonal = model.direction == ShiftDirection::Diagonal;
  rng::for_each_chunk(n_chunks, threads, [&](std::size_t c) {
    const std::size_t begin = c * kSimulationChunk;
    const std::size_t end = std::min(n, begin + kSimulationChunk);
    for (std::size_t i = begin; i < end; ++i) {
      const double x = sigma * z[i];
      const Box pred(x, diagonal ? x : 0.0, omega, omega);
      z[i] = evaluate(id, pred, truth, params);
    }
  });
  return z;
}

/// Sample mean, unbiased standard deviation and standard error.
inline DistributionSummary summarize(std::span<const double> samples) {
  if (samples.size() < 2) {
    throw InsufficientSamples("summary needs at least 2 samples");
  }
  const double n = static_cast<double>(samples.size());
  // Neumaier-compensated sums keep 1e7-sample moments accurate.
  auto compensated_sum = [](std::span<const double> v, auto&& term) {
    double sum = 0.0;
    double comp = 0.0;
    for (double x : v) {
      const double t = term(x);
      const double s = sum + t;
      comp += std::abs(sum) >= std::abs(t) ? (sum - s) + t : (t - s) + sum;
      sum = s;
    }
    return sum + comp;
  };
  const double mean = compensated_sum(samples, [](double x) { return x; }) / n;
  const double ss = compensated_sum(samples, [mean](double x) { return (x - mean) * (x - mean); });
  DistributionSummary s;
  s.mean = mean;
  s.std_dev = std::sqrt(ss / (n - 1.0));
  s.std_error = s.std_dev / std::sqrt(n);
  s.n_samples = samples.size();
  return s;
}

// ---------------------------------------------------------------------------
// Density estimation

enum class PdfMethod { Histogram, GaussianKde };

struct PdfOptions {
  PdfMethod method = PdfMethod::Histogram;
  double lo = 0.0;
  double hi = 1.0;
  std::size_t bins = 64;                // histogram bins
  std::size_t grid_points = 257;        // KDE evaluation grid, endpoints included
  std::optional<double> bandwidth;      // KDE; Silverman's rule when absent
};

/// Silverman's rule of thumb: 0.9 * min(sd, IQR / 1.34) * n^(-1/5).
inline double silverman_bandwidth(std::span<const double> samples) {
  if (samples.size() < 2) {
    throw InsufficientSamples("bandwidth needs at least 2 samples");
  }
  const auto s = summarize(samples);
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    const std::size_t j = std::min(i + 1, sorted.size() - 1);
    return sorted[i] + frac * (sorted[j] - sorted[i]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = s.std_dev;
  if (iqr > 0.0) {
    spread = std::min(spread, iqr / 1.34);
  }
  return 0.9 * spread * std::pow(static_cast<double>(samples.size()), -0.2);
}

/// Density estimate on [lo, hi].
///
/// Histogram: a step function, emitted as two points per bin (left and right
/// edge at the bin density) so a trapezoid over the points integrates the
/// steps exactly. Samples equal to hi fall in the last bin; samples outside
/// [lo, hi] are counted in n but not binned.
///
/// GaussianKde: Gaussian kernel, reflected at both range ends so no mass leaks
/// outside [lo, hi]. Samples are pre-binned on a 4096-cell grid. The bandwidth
/// is floored at two grid spacings so a trapezoid rule resolves the kernel.
inline std::vector<PdfPoint> empirical_pdf(std::span<const double> samples,
                                           const PdfOptions& opts = {}) {
  if (samples.size() < 10) {
    throw InsufficientSamples("density estimate needs at least 10 samples");
  }
  if (!(opts.hi > opts.lo)) {
    throw InvalidArgument("density range must satisfy lo < hi");
  }
  const double n = static_cast<double>(samples.size());
  const double lo = opts.lo;
  const double hi = opts.hi;

  auto bin_counts = [&](std::size_t bins) {
    std::vector<double> counts(bins, 0.0);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (double v : samples) {
      if (v < lo || v > hi) {
        continue;
      }
      auto k = static_cast<std::size_t>((v - lo) / width);
      counts[std::min(k, bins - 1)] += 1.0;
    }
    return counts;
  };

  std::vector<PdfPoint> out;
  if (opts.method == PdfMethod::Histogram) {
    if (opts.bins < 1) {
      throw InvalidArgument("histogram needs at least one bin");
    }
    const auto counts = bin_counts(opts.bins);
    const double width = (hi - lo) / static_cast<double>(opts.bins);
    out.reserve(2 * opts.bins);
    for (std::size_t k = 0; k < opts.bins; ++k) {
      const double d = counts[k] / (n * width);
      out.push_back({lo + static_cast<double>(k) * width, d});
      out.push_back({lo + static_cast<double>(k + 1) * width, d});
    }
    return out;
  }

  if (opts.grid_points < 2) {
    throw InvalidArgument("KDE grid needs at least two points");
  }
  constexpr std::size_t kFineBins = 4096;
  const auto counts = bin_counts(kFineBins);
  const double fine_width = (hi - lo) / static_cast<double>(kFineBins);
  const double spacing = (hi - lo) / static_cast<double>(opts.grid_points - 1);
  double h = opts.bandwidth ? *opts.bandwidth : silverman_bandwidth(samples);
  if (opts.bandwidth && !(*opts.bandwidth > 0.0)) {
    throw InvalidArgument("KDE bandwidth must be > 0");
  }
  h = std::max(h, 2.0 * spacing);

  const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
  out.reserve(opts.grid_points);
  for (std::size_t i = 0; i < opts.grid_points; ++i) {
    const double z = lo + static_cast<double>(i) * spacing;
    double acc = 0.0;
    for (std::size_t j = 0; j < kFineBins; ++j) {
      if (counts[j] == 0.0) {
        continue;
      }
      const double t = lo + (static_cast<double>(j) + 0.5) * fine_width;
      const double d0 = (z - t) / h;
      const double d1 = (z - (2.0 * lo - t)) / h;
      const double d2 = (z - (2.0 * hi - t)) / h;
      acc += counts[j] *
             (std::exp(-0.5 * d0 * d0) + std::exp(-0.5 * d1 * d1) + std::exp(-0.5 * d2 * d2));
    }
    out.push_back({z, acc * norm});
  }
  return out;
}

inline double trapezoid_integral(std::span<const PdfPoint> pts) noexcept {
  double total = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    total += 0.5 * (pts[i].density + pts[i - 1].density) * (pts[i].z - pts[i - 1].z);
  }
  return total;
}

/// One summary per omega. Each omega draws from its own stream
/// derive_seed(seed, omega), so a point's samples do not depend on the rest of
/// the grid and different criteria at the same (omega, seed) share shifts.
inline std::vector<DistributionSummary> moment_curve(CriterionId id, std::span<const double> omegas,
                                                     const ShiftModel& model, std::size_t n,
                                                     std::uint64_t seed,
                                                     const CriterionParams& params,
                                                     unsigned threads = rng::default_thread_count()) {
  if (omegas.empty()) {
    throw InvalidArgument("omega grid must be non-empty");
  }
  std::vector<DistributionSummary> out;
  out.reserve(omegas.size());
  for (double omega : omegas) {
    const auto samples =
        simulate_criterion(id, omega, model, n, rng::derive_seed(seed, omega), params, threads);
    auto s = summarize(samples);
    s.omega = omega;
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Order preservation

struct BoxSamplerConfig {
  double field = 512.0;
  double min_width = 4.0;
  double max_width = 256.0;
  bool squares = true;
};

struct OrderCheckResult {
  double rate = 1.0;
  std::size_t triples = 0;
  std::size_t violations = 0;
  std::size_t resampled = 0;
  // Triples whose lower-IoU pair also has the smaller (or equal) area sum, and
  // the violations among them. For gamma <= 0 the latter is always 0.
  std::size_t area_aligned = 0;
  std::size_t area_aligned_violations = 0;
};

/// Fraction of random triples (b1, b2, b3) for which SIoU keeps IoU's order:
/// after orienting the pair so that IoU(b1, b2) <= IoU(b1, b3), the triple is
/// preserved iff SIoU(b1, b2) <= SIoU(b1, b3). Triples where both IoUs are 0
/// are redrawn.
inline OrderCheckResult order_preservation_rate(const CriterionParams& params,
                                                std::size_t n_triples, std::uint64_t seed,
                                                const BoxSamplerConfig& cfg = {}) {
  if (n_triples < 1) {
    throw InvalidArgument("order check needs at least one triple");
  }
  if (!(cfg.min_width > 0.0) || !(cfg.max_width >= cfg.min_width) || !(cfg.field > 0.0)) {
    throw InvalidArgument("invalid box sampler configuration");
  }
  std::mt19937_64 gen(rng::derive_seed(seed, std::uint64_t{0}));
  std::uniform_real_distribution<double> pos(0.0, cfg.field);
  std::uniform_real_distribution<double> log_w(std::log(cfg.min_width), std::log(cfg.max_width));
  auto draw = [&] {
    const double x = pos(gen);
    const double y = pos(gen);
    const double w = std::exp(log_w(gen));
    const double h = cfg.squares ? w : std::exp(log_w(gen));
    return Box(x, y, w, h);
  };

  OrderCheckResult res;
  res.triples = n_triples;
  for (std::size_t t = 0; t < n_triples; ++t) {
    for (;;) {
      const Box b1 = draw();
      Box b2 = draw();
      Box b3 = draw();
      double u12 = iou(b1, b2);
      double u13 = iou(b1, b3);
      if (u12 == 0.0 && u13 == 0.0) {
        ++res.resampled;
        continue;
      }
      if (u12 > u13) {
        std::swap(b2, b3);
      }
      const bool aligned = area(b2) <= area(b3);
      res.area_aligned += aligned ? 1 : 0;
      if (siou(b1, b2, params) > siou(b1, b3, params)) {
        ++res.violations;
        res.area_aligned_violations += aligned ? 1 : 0;
      }
      break;
    }
  }
  res.rate = 1.0 - static_cast<double>(res.violations) / static_cast<double>(n_triples);
  return res;
}

} // namespace siou
