#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "polyp/labels.hpp"
#include "polyp/rng.hpp"

namespace polyp::nnet {

// Dense row-major value block. Network activations use {channels, height,
// width}; conv weights use {out, in, k, k}.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> values;

  static Tensor zeros(std::vector<int> shape);

  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return values.size(); }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

// Cross-correlation with zero padding. 3x3 kernels pad by 1 (spatial size
// preserved at stride 1), 1x1 kernels pad by 0. Stride 2 halves spatial
// extents, rounding up.
struct ConvLayer {
  int kernel = 3;  // 1 or 3
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;  // 1 or 2
  Tensor weights;  // {out, in, kernel, kernel}
  Tensor bias;     // {out}
};

Tensor conv_forward(const ConvLayer& layer, const Tensor& input);

// Accumulates weight/bias gradients and returns the input gradient.
Tensor conv_backward(const ConvLayer& layer, const Tensor& input,
                     const Tensor& d_output, Tensor& d_weights,
                     Tensor& d_bias);

enum class ShortcutKind { Identity, Projection };

// y = relu(conv2(relu(conv1(x))) + shortcut(x)). conv1 carries any stride
// or channel change; identity shortcuts are only legal when input and
// output shapes match, otherwise the 1x1 projection is mandatory.
struct ResidualBlock {
  ConvLayer conv1;  // 3x3, in -> out, stride s
  ConvLayer conv2;  // 3x3, out -> out, stride 1
  ShortcutKind shortcut = ShortcutKind::Identity;
  ConvLayer projection;  // 1x1, in -> out, stride s; used when Projection
};

Tensor block_forward(const ResidualBlock& block, const Tensor& input);

// Stem conv + four residual blocks + global average pool + affine map to
// six logits. Fully convolutional, so one parameter set serves any input
// of at least 9x9 (below that the deepest block's 3x3 conv would see a
// sub-kernel extent).
struct TinyResNet {
  ConvLayer stem;  // 3x3, 3 -> c
  std::vector<ResidualBlock> blocks;
  Tensor fc_weights;  // {6, last_channels}
  Tensor fc_bias;     // {6}

  // Parameter tensors in fixed serialization order.
  std::vector<Tensor*> params();
  std::vector<const Tensor*> params() const;
};

struct ArchConfig {
  int base_channels = 8;  // channel widths are {c, c, 2c, 2c, 4c}
};

// Weights drawn uniform in [-sqrt(1/fan_in), sqrt(1/fan_in)], biases zero.
TinyResNet make_tiny_resnet(const ArchConfig& arch, RandomStream rng);

std::array<double, kNumClasses> forward_logits(const TinyResNet& model,
                                               const Tensor& input);

// Numerically stable softmax cross-entropy.
// Returns loss and d(loss)/d(logits) = softmax - onehot.
std::pair<double, std::array<double, kNumClasses>> softmax_xent(
    const std::array<double, kNumClasses>& logits, ClassLabel label);

// Gradient tensors parallel to TinyResNet::params().
struct Gradients {
  std::vector<Tensor> tensors;
  void add(const Gradients& other);
  void scale(double factor);
};

Gradients zero_gradients(const TinyResNet& model);

// Full forward + backward for one example; accumulates into `grads` and
// returns the loss.
double backward(const TinyResNet& model, const Tensor& input,
                ClassLabel label, Gradients& grads);

// The optimizer schedule of the training recipe.
struct SGDConfig {
  double initial_rate = 0.1;
  double decay_factor = 0.1;
  int decay_every = 50;  // epochs
  double momentum = 0.9;
  int epochs = 200;
  int batch_size = 32;
  std::uint64_t seed = 0;  // recorded run seed; train() draws from its stream
};

// rate = initial * decay^floor(epoch / decay_every); RangeError outside
// [0, epochs).
double lr_at(int epoch, const SGDConfig& config);

// velocity' = momentum * velocity - rate * grads; weights += velocity'.
void sgd_step(std::vector<double>& weights, const std::vector<double>& grads,
              std::vector<double>& velocity, double rate, double momentum);
void sgd_step(Tensor& weights, const Tensor& grads, Tensor& velocity,
              double rate, double momentum);

struct Example {
  std::string id;
  Tensor input;  // {3, H, W}, same H and W across the dataset
  ClassLabel label = ClassLabel::Normal;
};

struct TrainResult {
  TinyResNet model;                        // final epoch
  std::optional<TinyResNet> best_validation;
  std::vector<double> loss_history;        // mean loss per epoch
  std::vector<double> validation_accuracy; // per epoch; empty without val set
};

// Momentum SGD over shuffled mini-batches. Examples are ordered by id
// before the seeded shuffle, so results do not depend on storage order.
// Per-example gradients are reduced in a fixed order; `jobs` > 1 spreads
// the forward/backward work across threads without changing any bit of
// the result.
TrainResult train(std::vector<Example> dataset, const SGDConfig& config,
                  const RandomStream& rng,
                  const std::vector<Example>* validation = nullptr,
                  const ArchConfig& arch = {}, int jobs = 1);

// Checkpoint format: little-endian, magic "TRN1", architecture descriptor,
// then each parameter tensor as (ndim, dims..., float64 data) in params()
// order. The loader rejects a bad magic or any shape mismatch.
void save_model(const TinyResNet& model, const std::filesystem::path& path);
TinyResNet load_model(const std::filesystem::path& path);

}  // namespace polyp::nnet
