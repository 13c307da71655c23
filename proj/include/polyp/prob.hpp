#pragma once

#include <array>
#include <utility>

#include "polyp/labels.hpp"

namespace polyp {

// Six nonnegative reals summing to 1, indexed by ClassLabel.
struct ProbVector {
  std::array<double, kNumClasses> p{};

  double operator[](ClassLabel c) const { return p[label_index(c)]; }
  double& operator[](ClassLabel c) { return p[label_index(c)]; }

  static ProbVector one_hot(ClassLabel c) {
    ProbVector v;
    v.p[label_index(c)] = 1.0;
    return v;
  }

  static ProbVector uniform() {
    ProbVector v;
    v.p.fill(1.0 / kNumClasses);
    return v;
  }
};

// Throws ShapeError unless entries are in [0,1] and sum to 1 within tol.
void validate(const ProbVector& v, double tol = 1e-6);

// Label with the maximal probability plus that probability. Ties break to
// the earliest label in canonical order, so the result is independent of
// how the vector was produced.
std::pair<ClassLabel, double> argmax_class(const ProbVector& v);

}  // namespace polyp
