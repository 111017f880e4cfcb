#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "rbert/common.hpp"

namespace rbert {

// Dense row-major tensor. Most of the library works on 1-D and 2-D shapes.
struct Tensor {
  std::vector<int> shape;
  std::vector<Real> v;

  Tensor() = default;

  static Tensor zeros(std::vector<int> s) {
    Tensor t;
    std::int64_t n = 1;
    for (int d : s) n *= d;
    t.shape = std::move(s);
    t.v.assign(static_cast<std::size_t>(n), Real{0});
    return t;
  }

  std::int64_t size() const { return static_cast<std::int64_t>(v.size()); }

  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  Real* data() { return v.data(); }
  const Real* data() const { return v.data(); }

  Real& at(int i, int j) { return v[static_cast<std::size_t>(i) * cols() + j]; }
  Real at(int i, int j) const {
    return v[static_cast<std::size_t>(i) * cols() + j];
  }

  Real* row(int i) { return v.data() + static_cast<std::size_t>(i) * cols(); }
  const Real* row(int i) const {
    return v.data() + static_cast<std::size_t>(i) * cols();
  }

  void fill(Real x) { std::fill(v.begin(), v.end(), x); }
};

inline bool all_finite(const Tensor& t) {
  for (Real x : t.v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline void check_finite(const Tensor& t, const char* what) {
  if (!all_finite(t)) {
    throw numeric_error(std::string("non-finite values in ") + what);
  }
}

}  // namespace rbert
