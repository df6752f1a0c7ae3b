#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "siou/box.hpp"
#include "siou/criteria.hpp"
#include "siou/error.hpp"

namespace siou {

/// Partial derivatives of a scalar loss with respect to the predicted box's
/// center-form coordinates.
struct BoxGradient {
  double d_x = 0.0;
  double d_y = 0.0;
  double d_w = 0.0;
  double d_h = 0.0;

  double norm() const noexcept { return std::sqrt(d_x * d_x + d_y * d_y + d_w * d_w + d_h * d_h); }
  double max_abs() const noexcept {
    return std::max({std::abs(d_x), std::abs(d_y), std::abs(d_w), std::abs(d_h)});
  }
  BoxGradient operator-(const BoxGradient& o) const noexcept {
    return {d_x - o.d_x, d_y - o.d_y, d_w - o.d_w, d_h - o.d_h};
  }
  BoxGradient operator*(double k) const noexcept { return {k * d_x, k * d_y, k * d_w, k * d_h}; }
  BoxGradient operator+(const BoxGradient& o) const noexcept {
    return {d_x + o.d_x, d_y + o.d_y, d_w + o.d_w, d_h + o.d_h};
  }
};

/// How the SIoU/GSIoU exponent p enters the gradient. Coupled differentiates
/// p through the predicted box's area; Detached treats p as a constant
/// evaluated at the current pair.
enum class ExponentMode { Coupled, Detached };

/// Loss 1 - C(b1, b2). With a fixed exponent the SIoU/GSIoU power uses
/// `fixed_p` instead of recomputing it from the boxes.
inline double loss_value(CriterionId id, const Box& pred, const Box& truth,
                         const CriterionParams& params,
                         std::optional<double> fixed_p = std::nullopt) {
  if (fixed_p && (id == CriterionId::SIoU || id == CriterionId::GSIoU)) {
    const double value = id == CriterionId::SIoU ? nonneg_pow(iou(pred, truth), *fixed_p)
                                                 : signed_pow(giou(pred, truth), *fixed_p);
    return 1.0 - value;
  }
  return 1.0 - evaluate(id, pred, truth, params);
}

namespace detail {

// Values and partials (w.r.t. the predicted box's center c and extent e) of the
// overlap length and the enclosing span along one axis.
struct AxisTerms {
  double overlap = 0.0;
  double d_overlap_c = 0.0;
  double d_overlap_e = 0.0;
  double span = 0.0;
  double d_span_c = 0.0;
  double d_span_e = 0.0;
};

inline bool nearly_equal(double a, double b) noexcept {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) <= 1e-12 * scale;
}

// Derivative of min(v, other) w.r.t. v; 1/2 on a tie, which averages the two
// one-sided derivatives.
inline double d_min(double v, double other, bool tie) noexcept {
  if (tie) {
    return 0.5;
  }
  return v < other ? 1.0 : 0.0;
}

inline double d_max(double v, double other, bool tie) noexcept {
  if (tie) {
    return 0.5;
  }
  return v > other ? 1.0 : 0.0;
}

// Along an axis where the two boxes share exactly the same interval the loss is
// symmetric, and the one-sided derivatives are averaged (what a central
// difference converges to). Any other edge coincidence is a kink.
inline AxisTerms axis_terms(double lo1, double hi1, double lo2, double hi2, const char* axis) {
  const bool lo_tie = nearly_equal(lo1, lo2);
  const bool hi_tie = nearly_equal(hi1, hi2);
  const bool shared = lo_tie && hi_tie;
  if (!shared && (lo_tie || hi_tie || nearly_equal(hi1, lo2) || nearly_equal(lo1, hi2))) {
    throw NonDifferentiablePoint(std::string("box edges coincide along ") + axis);
  }

  AxisTerms t;
  const double raw_overlap = std::min(hi1, hi2) - std::max(lo1, lo2);
  if (raw_overlap > 0.0) {
    const double dmin = d_min(hi1, hi2, shared);
    const double dmax = d_max(lo1, lo2, shared);
    t.overlap = raw_overlap;
    t.d_overlap_c = dmin - dmax;
    t.d_overlap_e = 0.5 * (dmin + dmax);
  }
  const double dmax_hi = d_max(hi1, hi2, shared);
  const double dmin_lo = d_min(lo1, lo2, shared);
  t.span = std::max(hi1, hi2) - std::min(lo1, lo2);
  t.d_span_c = dmax_hi - dmin_lo;
  t.d_span_e = 0.5 * (dmax_hi + dmin_lo);
  return t;
}

} // namespace detail

/// Analytic gradient of loss_value w.r.t. the predicted box (first argument);
/// the ground truth is held fixed.
///
/// Throws NonDifferentiablePoint when a single pair of edges coincides (within
/// 1e-12 relative), when the boxes touch, or when GSIoU has GIoU = 0 with p < 1.
/// When the boxes share the same interval along an axis the symmetric
/// derivative is returned for that axis, so identical boxes give a zero gradient.
inline BoxGradient loss_gradient(CriterionId id, const Box& pred, const Box& truth,
                                 const CriterionParams& params,
                                 ExponentMode mode = ExponentMode::Coupled) {
  if (id == CriterionId::NWD) {
    const double dist = wasserstein2(pred, truth);
    if (dist == 0.0) {
      return {};
    }
    const double value = std::exp(-dist / params.nwd_constant);
    // d(1 - NWD) = NWD / C * dW
    const double k = value / (params.nwd_constant * dist);
    return {k * (pred.x() - truth.x()), k * (pred.y() - truth.y()),
            k * 0.25 * (pred.w() - truth.w()), k * 0.25 * (pred.h() - truth.h())};
  }

  const auto tx = detail::axis_terms(pred.left(), pred.right(), truth.left(), truth.right(), "x");
  const auto ty = detail::axis_terms(pred.bottom(), pred.top(), truth.bottom(), truth.top(), "y");

  const double inter = tx.overlap * ty.overlap;
  const BoxGradient d_inter{tx.d_overlap_c * ty.overlap, tx.overlap * ty.d_overlap_c,
                            tx.d_overlap_e * ty.overlap, tx.overlap * ty.d_overlap_e};
  const double area1 = area(pred);
  const double area2 = area(truth);
  const BoxGradient d_area1{0.0, 0.0, pred.h(), pred.w()};
  const double uni = area1 + area2 - inter;
  const BoxGradient d_uni = d_area1 - d_inter;

  const double u = inter / uni;
  const BoxGradient d_u = (d_inter * uni - d_uni * inter) * (1.0 / (uni * uni));

  double crit_value = u;
  BoxGradient d_crit = d_u;
  if (is_generalized(id)) {
    const double hull = tx.span * ty.span;
    const BoxGradient d_hull{tx.d_span_c * ty.span, tx.span * ty.d_span_c, tx.d_span_e * ty.span,
                             tx.span * ty.d_span_e};
    crit_value = u - 1.0 + uni / hull;
    d_crit = d_u + (d_uni * hull - d_hull * uni) * (1.0 / (hull * hull));
  }

  switch (id) {
  case CriterionId::IoU:
  case CriterionId::GIoU:
    return d_crit * -1.0;
  case CriterionId::AlphaIoU: {
    if (u <= 0.0) {
      return {};
    }
    const double a = params.alpha;
    return d_u * (-a * std::exp((a - 1.0) * std::log(u)));
  }
  case CriterionId::SIoU:
  case CriterionId::GSIoU: {
    const double area_sum = area1 + area2;
    const double p = exponent_from_area_sum(area_sum, params.gamma, params.kappa);
    BoxGradient d_p{};
    if (mode == ExponentMode::Coupled) {
      const double s = std::sqrt(area_sum);
      const double c = std::numbers::sqrt2 * params.kappa;
      // dp/dA1 = gamma * exp(-s / c) / (2 s c)
      const double dp_darea = params.gamma * std::exp(-s / c) / (2.0 * s * c);
      d_p = d_area1 * dp_darea;
    }
    const double g = crit_value;
    if (g == 0.0) {
      if (id == CriterionId::SIoU) {
        return {};
      }
      if (p < 1.0) {
        throw NonDifferentiablePoint("GSIoU exponent below 1 at GIoU = 0");
      }
      return p == 1.0 ? d_crit * -1.0 : BoxGradient{};
    }
    const double mag = std::abs(g);
    const double log_mag = std::log(mag);
    const double pow_p = std::exp(p * log_mag);
    const double pow_pm1 = std::exp((p - 1.0) * log_mag);
    const double sign = g > 0.0 ? 1.0 : -1.0;
    // d[sign * |g|^p] = p |g|^(p-1) dg + sign |g|^p ln|g| dp
    const BoxGradient d_value = d_crit * (p * pow_pm1) + d_p * (sign * pow_p * log_mag);
    return d_value * -1.0;
  }
  case CriterionId::NWD:
    break;
  }
  return {};
}

/// Central differences (f(c + step) - f(c - step)) / (2 step) of loss_value on
/// each predicted-box coordinate. In Detached mode p is frozen at the base pair.
inline BoxGradient finite_difference_gradient(CriterionId id, const Box& pred, const Box& truth,
                                              const CriterionParams& params, double step,
                                              ExponentMode mode = ExponentMode::Coupled) {
  if (!(step > 0.0)) {
    throw InvalidArgument("finite-difference step must be > 0");
  }
  std::optional<double> fixed_p;
  if (mode == ExponentMode::Detached) {
    fixed_p = exponent_p(pred, truth, params);
  }
  auto central = [&](double dx, double dy, double dw, double dh) {
    const Box plus(pred.x() + dx, pred.y() + dy, pred.w() + dw, pred.h() + dh);
    const Box minus(pred.x() - dx, pred.y() - dy, pred.w() - dw, pred.h() - dh);
    return (loss_value(id, plus, truth, params, fixed_p) -
            loss_value(id, minus, truth, params, fixed_p)) /
           (2.0 * step);
  };
  return {central(step, 0, 0, 0), central(0, step, 0, 0), central(0, 0, step, 0),
          central(0, 0, 0, step)};
}

/// Ratio of SIoU to IoU losses at IoU = u: (1 - u^p) / (1 - u).
inline double reweight_loss_ratio(double iou_value, double p) {
  if (!(iou_value > 0.0 && iou_value < 1.0)) {
    throw DomainError("loss reweighting ratio needs 0 < IoU < 1");
  }
  if (!(p > 0.0)) {
    throw DomainError("exponent p must be > 0");
  }
  // expm1 keeps precision as u -> 1
  const double log_u = std::log(iou_value);
  return std::expm1(p * log_u) / std::expm1(log_u);
}

/// Ratio of SIoU to IoU loss-gradient magnitudes at IoU = u: p u^(p-1).
inline double reweight_gradient_ratio(double iou_value, double p) {
  if (!(iou_value > 0.0 && iou_value < 1.0)) {
    throw DomainError("gradient reweighting ratio needs 0 < IoU < 1");
  }
  if (!(p > 0.0)) {
    throw DomainError("exponent p must be > 0");
  }
  return p * std::exp((p - 1.0) * std::log(iou_value));
}

} // namespace siou
