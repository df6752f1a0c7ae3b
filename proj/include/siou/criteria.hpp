#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "siou/box.hpp"
#include "siou/error.hpp"

namespace siou {

enum class CriterionId { IoU, GIoU, AlphaIoU, NWD, SIoU, GSIoU };

inline constexpr std::array<CriterionId, 6> kAllCriteria = {
    CriterionId::IoU, CriterionId::GIoU, CriterionId::AlphaIoU,
    CriterionId::NWD, CriterionId::SIoU, CriterionId::GSIoU};

inline std::string_view to_string(CriterionId id) noexcept {
  switch (id) {
  case CriterionId::IoU:
    return "iou";
  case CriterionId::GIoU:
    return "giou";
  case CriterionId::AlphaIoU:
    return "alpha-iou";
  case CriterionId::NWD:
    return "nwd";
  case CriterionId::SIoU:
    return "siou";
  case CriterionId::GSIoU:
    return "gsiou";
  }
  return "unknown";
}

inline CriterionId parse_criterion(std::string_view name) {
  for (CriterionId id : kAllCriteria) {
    if (name == to_string(id)) {
      return id;
    }
  }
  if (name == "alpha_iou" || name == "alphaiou") {
    return CriterionId::AlphaIoU;
  }
  throw InvalidArgument("unknown criterion '" + std::string(name) + "'");
}

/// True for criteria whose values live in (-1, 1] rather than [0, 1].
inline constexpr bool is_generalized(CriterionId id) noexcept {
  return id == CriterionId::GIoU || id == CriterionId::GSIoU;
}

/// Parameters shared by every criterion. Only the fields relevant to the
/// evaluated criterion are read: gamma/kappa by SIoU and GSIoU, alpha by
/// alpha-IoU, nwd_constant by NWD.
struct CriterionParams {
  double gamma = 0.2;
  double kappa = 64.0;
  double alpha = 3.0;
  double nwd_constant = 32.0;

  /// Lenient on small objects; tuned for evaluation and agreement with human ratings.
  static constexpr CriterionParams evaluation_preset() { return {0.2, 64.0, 3.0, 32.0}; }
  /// Strict on small objects; tuned for use as a regression loss.
  static constexpr CriterionParams loss_preset() { return {-3.0, 16.0, 3.0, 32.0}; }

  void validate() const {
    if (!std::isfinite(gamma) || gamma > 1.0) {
      throw InvalidArgument("gamma must be finite and <= 1");
    }
    if (!std::isfinite(kappa) || !(kappa > 0.0)) {
      throw InvalidArgument("kappa must be > 0");
    }
    if (!std::isfinite(alpha) || !(alpha > 0.0)) {
      throw InvalidArgument("alpha must be > 0");
    }
    if (!std::isfinite(nwd_constant) || !(nwd_constant > 0.0)) {
      throw InvalidArgument("nwd constant must be > 0");
    }
  }

  friend bool operator==(const CriterionParams&, const CriterionParams&) = default;
};

// base^p for base >= 0 and p > 0, with 0^p = 0.
inline double nonneg_pow(double base, double p) noexcept {
  if (base <= 0.0) {
    return 0.0;
  }
  return std::exp(p * std::log(base));
}

// sign(g) * |g|^p
inline double signed_pow(double g, double p) noexcept {
  if (g == 0.0) {
    return 0.0;
  }
  const double mag = std::exp(p * std::log(std::abs(g)));
  return g > 0.0 ? mag : -mag;
}

/// Scale-adaptive exponent from the summed areas of the two boxes:
/// p = 1 - gamma * exp(-sqrt(A1 + A2) / (sqrt(2) * kappa)).
inline double exponent_from_area_sum(double area_sum, double gamma, double kappa) noexcept {
  return 1.0 - gamma * std::exp(-std::sqrt(area_sum) / (std::numbers::sqrt2 * kappa));
}

inline double exponent_p(const Box& a, const Box& b, const CriterionParams& params) noexcept {
  return exponent_from_area_sum(area(a) + area(b), params.gamma, params.kappa);
}

inline double iou(const Box& a, const Box& b) noexcept {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) {
    return 0.0;
  }
  return inter / (area(a) + area(b) - inter);
}

inline double giou(const Box& a, const Box& b) noexcept {
  const double inter = intersection_area(a, b);
  const double uni = area(a) + area(b) - inter;
  const double hull = enclosing_hull_area(a, b);
  return inter / uni - (hull - uni) / hull;
}

inline double siou(const Box& a, const Box& b, const CriterionParams& params) noexcept {
  return nonneg_pow(iou(a, b), exponent_p(a, b, params));
}

inline double gsiou(const Box& a, const Box& b, const CriterionParams& params) noexcept {
  return signed_pow(giou(a, b), exponent_p(a, b, params));
}

inline double alpha_iou(const Box& a, const Box& b, const CriterionParams& params) noexcept {
  return nonneg_pow(iou(a, b), params.alpha);
}

// 2-Wasserstein distance between the Gaussians N([x, y], diag(w^2/4, h^2/4)).
inline double wasserstein2(const Box& a, const Box& b) noexcept {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dw = 0.5 * (a.w() - b.w());
  const double dh = 0.5 * (a.h() - b.h());
  return std::sqrt(dx * dx + dy * dy + dw * dw + dh * dh);
}

inline double nwd(const Box& a, const Box& b, const CriterionParams& params) noexcept {
  return std::exp(-wasserstein2(a, b) / params.nwd_constant);
}

inline double evaluate(CriterionId id, const Box& a, const Box& b,
                       const CriterionParams& params) noexcept {
  switch (id) {
  case CriterionId::IoU:
    return iou(a, b);
  case CriterionId::GIoU:
    return giou(a, b);
  case CriterionId::AlphaIoU:
    return alpha_iou(a, b, params);
  case CriterionId::NWD:
    return nwd(a, b, params);
  case CriterionId::SIoU:
    return siou(a, b, params);
  case CriterionId::GSIoU:
    return gsiou(a, b, params);
  }
  return 0.0;
}

/// Closed range [lo, hi] of a criterion's values, used for histogram and KDE grids.
inline std::pair<double, double> criterion_range(CriterionId id) noexcept {
  return is_generalized(id) ? std::pair{-1.0, 1.0} : std::pair{0.0, 1.0};
}

} // namespace siou
