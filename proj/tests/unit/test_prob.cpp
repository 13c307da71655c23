#include <doctest.h>

#include "polyp/errors.hpp"
#include "polyp/prob.hpp"
#include "polyp/rng.hpp"

using namespace polyp;

TEST_CASE("argmax_class picks the unique maximum") {
  ProbVector v{{0.1, 0.6, 0.1, 0.1, 0.05, 0.05}};
  auto [label, confidence] = argmax_class(v);
  CHECK(label == ClassLabel::SSP);
  CHECK(confidence == doctest::Approx(0.6));
}

TEST_CASE("argmax_class breaks ties by canonical order") {
  auto [label, confidence] = argmax_class(ProbVector::uniform());
  CHECK(label == ClassLabel::HP);
  CHECK(confidence == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("argmax_class handles a degenerate distribution") {
  auto [label, confidence] = argmax_class(ProbVector::one_hot(ClassLabel::Normal));
  CHECK(label == ClassLabel::Normal);
  CHECK(confidence == doctest::Approx(1.0));
}

TEST_CASE("argmax is invariant under positive rescaling plus renormalization") {
  RandomStream rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    ProbVector v;
    double sum = 0.0;
    for (double& p : v.p) {
      p = rng.next_double() + 1e-9;
      sum += p;
    }
    for (double& p : v.p) p /= sum;

    double scale = rng.next_double() * 9.0 + 0.5;
    ProbVector scaled = v;
    double scaled_sum = 0.0;
    for (double& p : scaled.p) {
      p *= scale;
      scaled_sum += p;
    }
    for (double& p : scaled.p) p /= scaled_sum;

    CHECK(argmax_class(v).first == argmax_class(scaled).first);
  }
}

TEST_CASE("validate rejects broken probability vectors") {
  ProbVector negative{{-0.1, 0.5, 0.2, 0.2, 0.1, 0.1}};
  CHECK_THROWS_AS(validate(negative), ShapeError);
  ProbVector off_sum{{0.5, 0.5, 0.5, 0, 0, 0}};
  CHECK_THROWS_AS(validate(off_sum), ShapeError);
  CHECK_NOTHROW(validate(ProbVector::uniform()));
}
