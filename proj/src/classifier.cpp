#include "polyp/classifier.hpp"

#include <cmath>
#include <future>
#include <sstream>
#include <variant>

#include "polyp/errors.hpp"
#include "polyp/io_util.hpp"

namespace polyp {

namespace {

// Interleaved TensorImage -> planar {3,H,W} network input.
nnet::Tensor to_chw(const TensorImage& img) {
  nnet::Tensor t = nnet::Tensor::zeros({kChannels, img.height, img.width});
  auto plane = static_cast<std::size_t>(img.width) * img.height;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      auto pix = static_cast<std::size_t>(y) * img.width + x;
      for (int c = 0; c < kChannels; ++c) {
        t.values[c * plane + pix] = img.values[pix * kChannels + c];
      }
    }
  }
  return t;
}

ProbVector softmax(const std::array<double, kNumClasses>& logits) {
  double max_logit = *std::max_element(logits.begin(), logits.end());
  ProbVector out;
  double sum = 0.0;
  for (int i = 0; i < kNumClasses; ++i) {
    out.p[i] = std::exp(logits[i] - max_logit);
    sum += out.p[i];
  }
  for (double& v : out.p) v /= sum;
  return out;
}

}  // namespace

ClassifierHandle ClassifierHandle::constant(ProbVector probabilities) {
  validate(probabilities);
  ClassifierHandle h;
  h.kind_ = Kind::Constant;
  h.constant_ = probabilities;
  return h;
}

ClassifierHandle ClassifierHandle::recorded(
    std::unordered_map<std::string, ProbVector> table) {
  for (const auto& [id, prob] : table) validate(prob, 1e-4);
  ClassifierHandle h;
  h.kind_ = Kind::Recorded;
  h.table_ = std::move(table);
  return h;
}

ClassifierHandle ClassifierHandle::network(nnet::TinyResNet model,
                                           NormalizationStats stats,
                                           ConformTarget target) {
  if (target.width < 1 || target.height < 1) {
    throw RangeError("network classifier needs a valid conform target");
  }
  ClassifierHandle h;
  h.kind_ = Kind::Network;
  h.model_ = std::move(model);
  h.stats_ = stats;
  h.target_ = target;
  return h;
}

PatchPrediction ClassifierHandle::classify(const RasterImage& patch,
                                           std::string patch_id) const {
  switch (kind_) {
    case Kind::Constant:
      return {std::move(patch_id), constant_};
    case Kind::Recorded: {
      auto it = table_.find(patch_id);
      if (it == table_.end()) throw MissingPredictionError(patch_id);
      return {std::move(patch_id), it->second};
    }
    case Kind::Network: {
      RasterImage conformed = conform_size(patch, target_);
      TensorImage normalized = normalize(conformed, stats_);
      auto logits = nnet::forward_logits(model_, to_chw(normalized));
      return {std::move(patch_id), softmax(logits)};
    }
  }
  throw Error("unreachable classifier kind");
}

std::vector<PatchPrediction> ClassifierHandle::classify_batch(
    const std::vector<Patch>& patches, int jobs) const {
  std::vector<PatchPrediction> out(patches.size());
  std::vector<std::exception_ptr> errors(patches.size());
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      try {
        out[i] = classify(patches[i].image, patches[i].id);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs <= 1 || patches.size() <= 1) {
    work(0, patches.size());
  } else {
    std::size_t workers = std::min<std::size_t>(jobs, patches.size());
    std::size_t chunk = (patches.size() + workers - 1) / workers;
    std::vector<std::future<void>> futs;
    for (std::size_t w = 0; w < workers; ++w) {
      std::size_t lo = w * chunk;
      std::size_t hi = std::min(patches.size(), lo + chunk);
      if (lo >= hi) break;
      futs.push_back(std::async(std::launch::async, work, lo, hi));
    }
    for (auto& f : futs) f.get();
  }
  // First failing patch (by input order) wins, matching sequential runs.
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return out;
}

std::unordered_map<std::string, ProbVector> load_recorded_predictions(
    const std::filesystem::path& path) {
  std::unordered_map<std::string, ProbVector> table;
  std::istringstream in(read_file(path));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string id;
    if (!(row >> id)) throw ParseError("missing patch_id", line_no);
    if (id == "patch_id") continue;  // header
    ProbVector prob;
    double sum = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
      if (!(row >> prob.p[c])) {
        throw ParseError("expected 6 probabilities after patch_id", line_no);
      }
      if (!(prob.p[c] >= 0.0) || !std::isfinite(prob.p[c])) {
        throw ParseError("negative or non-finite probability", line_no);
      }
      sum += prob.p[c];
    }
    if (std::abs(sum - 1.0) > 1e-2) {
      throw ParseError("probabilities sum to " + std::to_string(sum) +
                           ", outside tolerance 1e-2",
                       line_no);
    }
    for (double& v : prob.p) v /= sum;  // renormalize small drift
    if (!table.emplace(id, prob).second) throw DuplicateIdError(id);
  }
  return table;
}

void save_recorded_predictions(const std::vector<PatchPrediction>& predictions,
                               const std::filesystem::path& path) {
  std::ostringstream out;
  out << "patch_id\tp_hp\tp_ssp\tp_tsa\tp_ta\tp_tvv\tp_normal\n";
  out.precision(17);
  for (const auto& pred : predictions) {
    out << pred.patch_id;
    for (double v : pred.probabilities.p) out << '\t' << v;
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

}  // namespace polyp
