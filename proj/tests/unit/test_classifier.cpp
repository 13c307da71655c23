#include <doctest.h>

#include <filesystem>

#include "polyp/classifier.hpp"
#include "polyp/errors.hpp"
#include "polyp/io_util.hpp"

using namespace polyp;
namespace fs = std::filesystem;

namespace {

RasterImage noise_image(int w, int h, RandomStream& rng) {
  RasterImage img = RasterImage::zeros(w, h);
  for (auto& px : img.pixels) px = static_cast<std::uint8_t>(rng.next_below(256));
  return img;
}

ClassifierHandle tiny_network(std::uint64_t seed = 1) {
  RandomStream rng(seed);
  nnet::TinyResNet model = nnet::make_tiny_resnet({2}, rng);
  NormalizationStats stats{{128, 128, 128}, {64, 64, 64}};
  return ClassifierHandle::network(std::move(model), stats, {12, 12});
}

}  // namespace

TEST_CASE("constant handle returns its vector for every patch") {
  auto handle = ClassifierHandle::constant(ProbVector::one_hot(ClassLabel::TA));
  RandomStream rng(1);
  for (int i = 0; i < 3; ++i) {
    RasterImage patch = noise_image(6, 6, rng);
    auto pred = handle.classify(patch, "p" + std::to_string(i));
    CHECK(pred.probabilities[ClassLabel::TA] == doctest::Approx(1.0));
    CHECK(pred.patch_id == "p" + std::to_string(i));
  }
}

TEST_CASE("recorded handle replays its table and flags unknown ids") {
  std::unordered_map<std::string, ProbVector> table;
  table["p1"] = ProbVector{{0.2, 0.2, 0.2, 0.2, 0.1, 0.1}};
  auto handle = ClassifierHandle::recorded(std::move(table));

  RasterImage patch = RasterImage::zeros(4, 4);
  auto pred = handle.classify(patch, "p1");
  CHECK(pred.probabilities[ClassLabel::HP] == doctest::Approx(0.2));
  CHECK(pred.probabilities[ClassLabel::Normal] == doctest::Approx(0.1));

  CHECK_THROWS_AS(handle.classify(patch, "p2"), MissingPredictionError);
  try {
    handle.classify(patch, "p2");
  } catch (const MissingPredictionError& e) {
    CHECK(e.patch_id == "p2");
  }
}

TEST_CASE("network handle is deterministic and emits valid probabilities") {
  auto handle = tiny_network();
  RandomStream rng(2);
  RasterImage patch = noise_image(10, 12, rng);  // conform handles resizing
  auto a = handle.classify(patch, "x");
  auto b = handle.classify(patch, "x");
  CHECK(a.probabilities.p == b.probabilities.p);  // bitwise repeatable
  CHECK_NOTHROW(validate(a.probabilities));
}

TEST_CASE("classify_batch equals mapped classify and keeps order") {
  auto handle = tiny_network(7);
  RandomStream rng(3);
  std::vector<Patch> patches;
  for (int i = 0; i < 9; ++i) {
    patches.push_back({"p" + std::to_string(i), noise_image(8, 8, rng)});
  }
  auto batch = handle.classify_batch(patches);
  REQUIRE(batch.size() == patches.size());
  for (std::size_t i = 0; i < patches.size(); ++i) {
    auto single = handle.classify(patches[i].image, patches[i].id);
    CHECK(batch[i].patch_id == patches[i].id);
    CHECK(batch[i].probabilities.p == single.probabilities.p);
  }
}

TEST_CASE("parallel and sequential batches agree bitwise") {
  auto handle = tiny_network(8);
  RandomStream rng(4);
  std::vector<Patch> patches;
  for (int i = 0; i < 17; ++i) {
    patches.push_back({"p" + std::to_string(i), noise_image(8, 8, rng)});
  }
  auto sequential = handle.classify_batch(patches, 1);
  auto parallel = handle.classify_batch(patches, 4);
  REQUIRE(sequential.size() == parallel.size());
  for (std::size_t i = 0; i < sequential.size(); ++i) {
    CHECK(sequential[i].patch_id == parallel[i].patch_id);
    CHECK(sequential[i].probabilities.p == parallel[i].probabilities.p);
  }
}

TEST_CASE("empty batch gives empty output") {
  auto handle = ClassifierHandle::constant(ProbVector::uniform());
  CHECK(handle.classify_batch({}).empty());
}

TEST_CASE("batch failure reports the earliest failing patch") {
  std::unordered_map<std::string, ProbVector> table;
  table["good"] = ProbVector::uniform();
  auto handle = ClassifierHandle::recorded(std::move(table));
  std::vector<Patch> patches{{"good", RasterImage::zeros(2, 2)},
                             {"bad1", RasterImage::zeros(2, 2)},
                             {"bad2", RasterImage::zeros(2, 2)}};
  try {
    handle.classify_batch(patches, 3);
    FAIL("expected MissingPredictionError");
  } catch (const MissingPredictionError& e) {
    CHECK(e.patch_id == "bad1");
  }
}

TEST_CASE("recorded predictions TSV loads, renormalizes and rejects junk") {
  fs::path dir = fs::temp_directory_path() / "polyp_classifier_tests";
  fs::create_directories(dir);

  fs::path good = dir / "good.tsv";
  write_file_atomic(good,
                    "patch_id\tp_hp\tp_ssp\tp_tsa\tp_ta\tp_tvv\tp_normal\n"
                    "a\t0.2\t0.2\t0.2\t0.2\t0.1\t0.1\n"
                    "b\t0.201\t0.2\t0.2\t0.2\t0.1\t0.105\n");  // sum 1.006
  auto table = load_recorded_predictions(good);
  REQUIRE(table.size() == 2);
  double sum = 0.0;
  for (double v : table.at("b").p) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));  // renormalized

  fs::path off = dir / "off.tsv";
  write_file_atomic(off, "a\t0.5\t0.5\t0.5\t0.2\t0.1\t0.1\n");  // sum 1.9
  CHECK_THROWS_AS(load_recorded_predictions(off), ParseError);

  fs::path dup = dir / "dup.tsv";
  write_file_atomic(dup,
                    "a\t0.2\t0.2\t0.2\t0.2\t0.1\t0.1\n"
                    "a\t0.2\t0.2\t0.2\t0.2\t0.1\t0.1\n");
  CHECK_THROWS_AS(load_recorded_predictions(dup), DuplicateIdError);
}

TEST_CASE("recorded predictions round-trip through save") {
  fs::path dir = fs::temp_directory_path() / "polyp_classifier_tests";
  fs::create_directories(dir);
  std::vector<PatchPrediction> preds{
      {"p0", ProbVector::one_hot(ClassLabel::SSP)},
      {"p1", ProbVector{{0.25, 0.25, 0.125, 0.125, 0.125, 0.125}}},
  };
  fs::path path = dir / "roundtrip.tsv";
  save_recorded_predictions(preds, path);
  auto table = load_recorded_predictions(path);
  REQUIRE(table.size() == 2);
  CHECK(table.at("p0").p == preds[0].probabilities.p);
  CHECK(table.at("p1").p == preds[1].probabilities.p);
}
