#pragma once

// Small geometric value types shared across modules.

#include <array>
#include <complex>
#include <limits>
#include <vector>

namespace sdfields {

using cplx = std::complex<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Maximum dimension of the parameter space S of a Lévy basis.
inline constexpr int kMaxControlDim = 4;

/// A point of S; only the first `dim` coordinates of the control are used.
using Point = std::array<double, kMaxControlDim>;

inline Point point1(double s) { return Point{s, 0.0, 0.0, 0.0}; }

struct Interval {
  double lo = -kInf;
  double hi = kInf;

  bool contains(double x) const { return x >= lo && x <= hi; }
  double length() const { return hi - lo; }
};

/// Axis-aligned box in R^n (infinite bounds allowed).
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dim() const { return lo.size(); }
  Box scaled(double q) const;
};

/// Finite union of boxes of a common dimension.
struct Region {
  std::vector<Box> boxes;

  std::size_t dim() const { return boxes.empty() ? 0 : boxes.front().dim(); }
  Region scaled(double q) const;
};

}  // namespace sdfields
