#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>

#include "polyp/errors.hpp"
#include "polyp/nnet.hpp"

namespace polyp::nnet {

namespace {

int correct_count(const TinyResNet& model, const std::vector<Example>& set) {
  int correct = 0;
  for (const auto& ex : set) {
    auto logits = forward_logits(model, ex.input);
    auto best = static_cast<int>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (best == label_index(ex.label)) ++correct;
  }
  return correct;
}

}  // namespace

TrainResult train(std::vector<Example> dataset, const SGDConfig& config,
                  const RandomStream& rng,
                  const std::vector<Example>* validation,
                  const ArchConfig& arch, int jobs) {
  if (dataset.empty()) throw EmptyDatasetError("train: empty dataset");
  if (config.epochs < 1) throw RangeError("epochs must be >= 1");
  if (config.batch_size < 1) throw RangeError("batch_size must be >= 1");
  for (const auto& ex : dataset) {
    if (ex.input.shape != dataset.front().input.shape) {
      throw ShapeError("train: example \"" + ex.id +
                       "\" differs in shape from the first example");
    }
  }
  if (jobs < 1) jobs = 1;

  // Canonical order first: the shuffle below then depends only on the
  // seed, not on how the caller happened to store the examples.
  std::sort(dataset.begin(), dataset.end(),
            [](const Example& a, const Example& b) { return a.id < b.id; });

  TrainResult result;
  result.model = make_tiny_resnet(arch, rng.split("init"));

  std::vector<Tensor*> params = result.model.params();
  std::vector<Tensor> velocity;
  velocity.reserve(params.size());
  for (const Tensor* p : params) velocity.push_back(Tensor::zeros(p->shape));

  RandomStream shuffle_rng = rng.split("shuffle");
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  double best_val_accuracy = -1.0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    RandomStream epoch_rng = shuffle_rng.split(static_cast<std::uint64_t>(epoch));
    epoch_rng.shuffle(order);
    double rate = lr_at(epoch, config);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      std::size_t end = std::min(order.size(),
                                 start + static_cast<std::size_t>(config.batch_size));
      std::size_t batch_n = end - start;

      // Per-example gradients computed independently (possibly in
      // parallel), then reduced in example order: the result is bitwise
      // identical for any jobs value.
      std::vector<std::pair<double, Gradients>> per_example(batch_n);
      auto work = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
          const Example& ex = dataset[order[start + i]];
          Gradients g = zero_gradients(result.model);
          double loss = backward(result.model, ex.input, ex.label, g);
          per_example[i] = {loss, std::move(g)};
        }
      };
      if (jobs == 1 || batch_n == 1) {
        work(0, batch_n);
      } else {
        std::size_t workers = std::min<std::size_t>(jobs, batch_n);
        std::size_t chunk = (batch_n + workers - 1) / workers;
        std::vector<std::future<void>> futs;
        for (std::size_t w = 0; w < workers; ++w) {
          std::size_t lo = w * chunk;
          std::size_t hi = std::min(batch_n, lo + chunk);
          if (lo >= hi) break;
          futs.push_back(std::async(std::launch::async, work, lo, hi));
        }
        for (auto& f : futs) f.get();
      }

      Gradients batch_grads = zero_gradients(result.model);
      for (auto& [loss, g] : per_example) {
        epoch_loss += loss;
        batch_grads.add(g);
      }
      batch_grads.scale(1.0 / static_cast<double>(batch_n));

      for (std::size_t p = 0; p < params.size(); ++p) {
        sgd_step(*params[p], batch_grads.tensors[p], velocity[p], rate,
                 config.momentum);
      }
    }
    result.loss_history.push_back(epoch_loss /
                                  static_cast<double>(dataset.size()));

    if (validation && !validation->empty()) {
      double acc = static_cast<double>(correct_count(result.model, *validation)) /
                   static_cast<double>(validation->size());
      result.validation_accuracy.push_back(acc);
      if (acc > best_val_accuracy) {
        best_val_accuracy = acc;
        result.best_validation = result.model;
      }
    }
  }
  return result;
}

}  // namespace polyp::nnet
