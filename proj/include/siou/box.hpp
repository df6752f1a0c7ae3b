#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <string_view>

#include "siou/error.hpp"

namespace siou {

/// Axis-aligned box in center form: (x, y) is the center, w and h the
/// extents. Width and height are strictly positive and every field is finite.
class Box {
public:
  Box(double x, double y, double w, double h) : x_(x), y_(y), w_(w), h_(h) {
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) || !std::isfinite(h)) {
      throw InvalidBox("box fields must be finite");
    }
    if (!(w > 0.0) || !(h > 0.0)) {
      throw InvalidBox("box width and height must be positive (got w=" + std::to_string(w) +
                       ", h=" + std::to_string(h) + ")");
    }
  }

  /// Builds a box from the corner form (x_min, y_min, w, h) used by dataset files.
  static Box from_corner(double x_min, double y_min, double w, double h) {
    return Box(x_min + 0.5 * w, y_min + 0.5 * h, w, h);
  }

  double x() const noexcept { return x_; }
  double y() const noexcept { return y_; }
  double w() const noexcept { return w_; }
  double h() const noexcept { return h_; }

  double left() const noexcept { return x_ - 0.5 * w_; }
  double right() const noexcept { return x_ + 0.5 * w_; }
  double bottom() const noexcept { return y_ - 0.5 * h_; }
  double top() const noexcept { return y_ + 0.5 * h_; }

  /// Uniform scaling of all four coordinates about the origin.
  Box scaled(double k) const { return Box(k * x_, k * y_, k * w_, k * h_); }
  Box translated(double dx, double dy) const { return Box(x_ + dx, y_ + dy, w_, h_); }

  friend bool operator==(const Box&, const Box&) = default;

private:
  double x_;
  double y_;
  double w_;
  double h_;
};

inline std::ostream& operator<<(std::ostream& os, const Box& b) {
  return os << "Box(" << b.x() << ", " << b.y() << ", " << b.w() << ", " << b.h() << ")";
}

enum class SizeClass { Small, Medium, Large };

inline double area(const Box& b) noexcept { return b.w() * b.h(); }

namespace detail {
// Nested intervals return the stored extent of the inner (or outer) one, so a
// box compared with itself gives exactly its own area.
inline double overlap_1d(double lo1, double hi1, double len1, double lo2, double hi2,
                         double len2) noexcept {
  if (lo2 <= lo1 && hi1 <= hi2) {
    return len1;
  }
  if (lo1 <= lo2 && hi2 <= hi1) {
    return len2;
  }
  return std::max(0.0, std::min(hi1, hi2) - std::max(lo1, lo2));
}
inline double span_1d(double lo1, double hi1, double len1, double lo2, double hi2,
                      double len2) noexcept {
  if (lo2 <= lo1 && hi1 <= hi2) {
    return len2;
  }
  if (lo1 <= lo2 && hi2 <= hi1) {
    return len1;
  }
  return std::max(hi1, hi2) - std::min(lo1, lo2);
}
} // namespace detail

inline double intersection_area(const Box& a, const Box& b) noexcept {
  return detail::overlap_1d(a.left(), a.right(), a.w(), b.left(), b.right(), b.w()) *
         detail::overlap_1d(a.bottom(), a.top(), a.h(), b.bottom(), b.top(), b.h());
}

inline double union_area(const Box& a, const Box& b) noexcept {
  return area(a) + area(b) - intersection_area(a, b);
}

// Smallest axis-aligned rectangle containing both boxes.
inline double enclosing_hull_area(const Box& a, const Box& b) noexcept {
  return detail::span_1d(a.left(), a.right(), a.w(), b.left(), b.right(), b.w()) *
         detail::span_1d(a.bottom(), a.top(), a.h(), b.bottom(), b.top(), b.h());
}

// COCO buckets on sqrt(w*h): small <= 32 < medium <= 96 < large.
inline SizeClass size_class(const Box& b) noexcept {
  const double s = std::sqrt(area(b));
  if (s <= 32.0) {
    return SizeClass::Small;
  }
  if (s <= 96.0) {
    return SizeClass::Medium;
  }
  return SizeClass::Large;
}

inline std::string_view to_string(SizeClass s) noexcept {
  switch (s) {
  case SizeClass::Small:
    return "small";
  case SizeClass::Medium:
    return "medium";
  case SizeClass::Large:
    return "large";
  }
  return "unknown";
}

inline SizeClass parse_size_class(std::string_view name) {
  if (name == "small" || name == "s" || name == "S") {
    return SizeClass::Small;
  }
  if (name == "medium" || name == "m" || name == "M") {
    return SizeClass::Medium;
  }
  if (name == "large" || name == "l" || name == "L") {
    return SizeClass::Large;
  }
  throw InvalidArgument("unknown size class '" + std::string(name) + "'");
}

} // namespace siou
