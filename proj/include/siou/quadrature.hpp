#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <queue>
#include <vector>

#include "siou/error.hpp"

namespace siou::quad {

struct Options {
  double abs_tol = 1e-8;
  double rel_tol = 0.0;
  std::size_t max_subdivisions = 10000;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  std::size_t subdivisions = 0;
};

namespace detail {

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Segment& o) const noexcept { return error < o.error; }
};

// 7-point Gauss / 15-point Kronrod pair on [a, b]; the error estimate is the
// raw |K15 - G7| difference.
template <class F>
Segment gauss_kronrod_15(const F& f, double a, double b) {
  static constexpr double xgk[8] = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.0};
  static constexpr double wgk[8] = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr double wg[4] = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = wgk[7] * fc;
  double gauss = wg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = half * xgk[j];
    const double pair = f(center - dx) + f(center + dx);
    kronrod += wgk[j] * pair;
    if (j % 2 == 1) {
      gauss += wg[j / 2] * pair;
    }
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

} // namespace detail

/// Globally adaptive Gauss-Kronrod integration of f over the finite interval
/// [a, b]. The interval with the largest error estimate is bisected until the
/// summed estimate falls below max(abs_tol, rel_tol * |value|).
///
/// Throws QuadratureNonConvergence when the subdivision budget runs out.
template <class F>
Result integrate(const F& f, double a, double b, const Options& opts = {}) {
  if (a == b) {
    return {};
  }
  if (b < a) {
    Result r = integrate(f, b, a, opts);
    r.value = -r.value;
    return r;
  }

  std::priority_queue<detail::Segment> heap;
  const auto first = detail::gauss_kronrod_15(f, a, b);
  heap.push(first);
  double total = first.value;
  double total_err = first.error;
  std::size_t splits = 0;

  auto converged = [&] {
    return total_err <= std::max(opts.abs_tol, opts.rel_tol * std::abs(total));
  };

  while (!converged()) {
    if (splits >= opts.max_subdivisions) {
      throw QuadratureNonConvergence("quadrature did not reach tolerance within " +
                                         std::to_string(opts.max_subdivisions) + " subdivisions",
                                     total, total_err);
    }
    const detail::Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      throw QuadratureNonConvergence("quadrature interval collapsed below machine precision",
                                     total, total_err);
    }
    const auto left = detail::gauss_kronrod_15(f, worst.a, mid);
    const auto right = detail::gauss_kronrod_15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++splits;
  }

  // Re-sum to shed the drift accumulated by the incremental updates.
  double value = 0.0;
  double error = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  return {value, error, splits};
}

} // namespace siou::quad
