#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "siou/criteria.hpp"
#include "siou/error.hpp"
#include "siou/quadrature.hpp"
#include "siou/random.hpp"
#include "siou/stats.hpp"

// Distribution of criteria between two omega-wide squares when one of them is
// shifted horizontally by X ~ N(0, sigma^2). In units u = x / omega, a = sigma / omega:
//   E[C(X)^k] = 2 / (sqrt(2 pi) a) * int_0^inf c(u)^k exp(-u^2 / (2 a^2)) du
// with c(u) = (1 - u) / (1 + u) for GIoU, clipped at 0 for IoU, and the
// scale-adaptive variants taking the signed power c^p.

namespace siou {

class TheorySetup {
public:
  TheorySetup(double omega, double sigma, const CriterionParams& params = {})
      : omega_(omega), sigma_(sigma), params_(params) {
    if (!(omega > 0.0) || !std::isfinite(omega)) {
      throw InvalidArgument("omega must be > 0");
    }
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw InvalidArgument("sigma must be > 0");
    }
    // Two omega-wide squares: sqrt(2 omega^2) / (sqrt(2) kappa) = omega / kappa.
    p_ = exponent_from_area_sum(2.0 * omega * omega, params.gamma, params.kappa);
  }

  double omega() const noexcept { return omega_; }
  double sigma() const noexcept { return sigma_; }
  double a() const noexcept { return sigma_ / omega_; }
  double p() const noexcept { return p_; }
  const CriterionParams& params() const noexcept { return params_; }

private:
  double omega_;
  double sigma_;
  CriterionParams params_;
  double p_;
};

/// Density of GIoU between two same-size squares under a horizontal Gaussian
/// shift: 4 omega / ((1 + z)^2 sqrt(2 pi) sigma) * exp(-0.5 * [omega (1 - z) / (sigma (1 + z))]^2).
inline double giou_pdf(double z, const TheorySetup& setup) {
  if (!(z > -1.0 && z < 1.0)) {
    throw DomainError("GIoU density is defined on the open interval (-1, 1)");
  }
  const double t = setup.omega() * (1.0 - z) / (setup.sigma() * (1.0 + z));
  return 4.0 * setup.omega() / ((1.0 + z) * (1.0 + z) * std::sqrt(2.0 * std::numbers::pi) *
                                setup.sigma()) *
         std::exp(-0.5 * t * t);
}

/// P(Z <= z) = P(|X| >= omega (1 - z) / (1 + z)).
inline double giou_cdf(double z, const TheorySetup& setup) {
  if (z <= -1.0) {
    return 0.0;
  }
  if (z >= 1.0) {
    return 1.0;
  }
  const double g = setup.omega() * (1.0 - z) / (1.0 + z);
  return std::erfc(g / (setup.sigma() * std::numbers::sqrt2));
}

/// k-th raw moment (k in {1, 2}) of IoU, GIoU, SIoU or GSIoU under the setup,
/// by adaptive quadrature. The IoU/SIoU atom at 0 (non-overlapping shifts)
/// contributes nothing to either moment, so only [0, 1] is integrated for them.
/// The Gaussian weight is truncated at 12 a.
inline double theoretical_moment(CriterionId id, int order, const TheorySetup& setup,
                                 const quad::Options& opts = {}) {
  if (order != 1 && order != 2) {
    throw InvalidArgument("moment order must be 1 or 2");
  }
  if (id != CriterionId::IoU && id != CriterionId::GIoU && id != CriterionId::SIoU &&
      id != CriterionId::GSIoU) {
    throw InvalidArgument("theoretical moments exist for iou, giou, siou and gsiou only");
  }
  const double a = setup.a();
  const bool scale_adaptive = id == CriterionId::SIoU || id == CriterionId::GSIoU;
  const double p = setup.p();
  const double norm = 2.0 / (std::sqrt(2.0 * std::numbers::pi) * a);
  const double inv_two_a2 = 1.0 / (2.0 * a * a);

  auto integrand = [&](double u) {
    const double c = (1.0 - u) / (1.0 + u);
    double value = c;
    if (scale_adaptive) {
      value = signed_pow(c, p);
    }
    if (order == 2) {
      value *= value;
    }
    return value * std::exp(-u * u * inv_two_a2);
  };

  const double cutoff = 12.0 * a;
  double total = quad::integrate(integrand, 0.0, std::min(1.0, cutoff), opts).value;
  if (is_generalized(id) && cutoff > 1.0) {
    total += quad::integrate(integrand, 1.0, cutoff, opts).value;
  }
  return norm * total;
}

inline double theoretical_variance(CriterionId id, const TheorySetup& setup,
                                   const quad::Options& opts = {}) {
  const double m1 = theoretical_moment(id, 1, setup, opts);
  return theoretical_moment(id, 2, setup, opts) - m1 * m1;
}

struct MonteCarloConfig {
  std::size_t n = 1'000'000;
  std::uint64_t seed = 0;
  unsigned threads = rng::default_thread_count();
  // Simulate with this sigma instead of the setup's. Only used to check that
  // the report flags a mismatch.
  std::optional<double> sigma_override;
};

struct ConsistencyRow {
  CriterionId criterion;
  int order;
  double omega;
  double sigma;
  double a;
  double theory;
  double mc;
  double std_error;
  double z_score;
  bool flagged;
};

/// Theory-vs-Monte-Carlo table: first and second raw moments per (setup,
/// criterion) with z = (mc - theory) / SE. Rows with |z| > 4 are flagged. Each
/// setup draws from stream derive_seed(seed, omega).
inline std::vector<ConsistencyRow> moment_consistency_report(std::span<const TheorySetup> setups,
                                                             std::span<const CriterionId> criteria,
                                                             const MonteCarloConfig& mc,
                                                             const quad::Options& opts = {}) {
  std::vector<ConsistencyRow> rows;
  for (const auto& setup : setups) {
    ShiftModel model;
    model.sigma_base = mc.sigma_override.value_or(setup.sigma());
    for (CriterionId id : criteria) {
      auto samples = simulate_criterion(id, setup.omega(), model, mc.n,
                                        rng::derive_seed(mc.seed, setup.omega()), setup.params(),
                                        mc.threads);
      const auto first = summarize(samples);
      for (double& v : samples) {
        v *= v;
      }
      const auto second = summarize(samples);
      for (int order : {1, 2}) {
        const auto& s = order == 1 ? first : second;
        const double th = theoretical_moment(id, order, setup, opts);
        const double z = s.std_error > 0.0 ? (s.mean - th) / s.std_error
                         : (s.mean == th ? 0.0 : INFINITY);
        rows.push_back({id, order, setup.omega(), setup.sigma(), setup.a(), th, s.mean,
                        s.std_error, z, std::abs(z) > 4.0});
      }
    }
  }
  return rows;
}

} // namespace siou
