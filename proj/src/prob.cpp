#include "polyp/prob.hpp"

#include <cmath>
#include <string>

#include "polyp/errors.hpp"

namespace polyp {

void validate(const ProbVector& v, double tol) {
  double sum = 0.0;
  for (double x : v.p) {
    if (!(x >= 0.0 && x <= 1.0) || !std::isfinite(x)) {
      throw ShapeError("probability entry out of [0,1]: " + std::to_string(x));
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > tol) {
    throw ShapeError("probabilities sum to " + std::to_string(sum) +
                     ", expected 1");
  }
}

std::pair<ClassLabel, double> argmax_class(const ProbVector& v) {
  ClassLabel best = ClassLabel::HP;
  double best_p = v.p[0];
  for (int i = 1; i < kNumClasses; ++i) {
    if (v.p[i] > best_p) {
      best = static_cast<ClassLabel>(i);
      best_p = v.p[i];
    }
  }
  return {best, best_p};
}

}  // namespace polyp
