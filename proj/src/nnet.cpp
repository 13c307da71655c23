#include "polyp/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "polyp/errors.hpp"

namespace polyp::nnet {

namespace {

std::string shape_str(const Tensor& t) {
  std::string s = "{";
  for (std::size_t i = 0; i < t.shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(t.shape[i]);
  }
  return s + "}";
}

int out_extent(int in, int kernel, int pad, int stride) {
  return (in + 2 * pad - kernel) / stride + 1;
}

void check_conv_input(const ConvLayer& layer, const Tensor& input) {
  if (input.shape.size() != 3) {
    throw ShapeError("conv input must be {C,H,W}, got " + shape_str(input));
  }
  if (input.dim(0) != layer.in_channels) {
    throw ShapeError("conv expects " + std::to_string(layer.in_channels) +
                     " input channels, got " + std::to_string(input.dim(0)));
  }
  if (input.dim(1) < layer.kernel || input.dim(2) < layer.kernel) {
    throw ShapeError("conv input " + shape_str(input) +
                     " smaller than kernel " + std::to_string(layer.kernel));
  }
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values) v = std::max(0.0, v);
  return y;
}

// dL/dx = dL/dy where the pre-activation was positive, else 0.
Tensor relu_backward(const Tensor& pre, const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.values.size(); ++i) {
    if (pre.values[i] <= 0.0) dx.values[i] = 0.0;
  }
  return dx;
}

void add_inplace(Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("tensor add: " + shape_str(a) + " vs " + shape_str(b));
  }
  for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] += b.values[i];
}

ConvLayer make_conv(int kernel, int in_ch, int out_ch, int stride,
                    RandomStream& rng) {
  ConvLayer layer;
  layer.kernel = kernel;
  layer.in_channels = in_ch;
  layer.out_channels = out_ch;
  layer.stride = stride;
  layer.weights = Tensor::zeros({out_ch, in_ch, kernel, kernel});
  layer.bias = Tensor::zeros({out_ch});
  double bound = std::sqrt(1.0 / (in_ch * kernel * kernel));
  for (double& w : layer.weights.values) {
    w = (2.0 * rng.next_double() - 1.0) * bound;
  }
  return layer;
}

struct BlockTrace {
  Tensor a1;   // conv1 output (pre-relu)
  Tensor r1;   // relu(a1)
  Tensor sum;  // conv2(r1) + shortcut(x), pre final relu
  Tensor y;    // relu(sum)
};

BlockTrace block_forward_trace(const ResidualBlock& block, const Tensor& x) {
  BlockTrace t;
  t.a1 = conv_forward(block.conv1, x);
  t.r1 = relu(t.a1);
  t.sum = conv_forward(block.conv2, t.r1);
  if (block.shortcut == ShortcutKind::Projection) {
    add_inplace(t.sum, conv_forward(block.projection, x));
  } else {
    add_inplace(t.sum, x);  // shape mismatch surfaces here as ShapeError
  }
  t.y = relu(t.sum);
  return t;
}

struct ForwardTrace {
  Tensor stem_a;  // stem output pre-relu
  Tensor stem_y;
  std::vector<BlockTrace> blocks;
  std::vector<double> pooled;  // global average per channel
  std::array<double, kNumClasses> logits;
};

ForwardTrace forward_trace(const TinyResNet& model, const Tensor& input) {
  ForwardTrace t;
  t.stem_a = conv_forward(model.stem, input);
  t.stem_y = relu(t.stem_a);
  const Tensor* cur = &t.stem_y;
  t.blocks.reserve(model.blocks.size());
  for (const auto& block : model.blocks) {
    t.blocks.push_back(block_forward_trace(block, *cur));
    cur = &t.blocks.back().y;
  }
  int channels = cur->dim(0);
  auto spatial = static_cast<std::size_t>(cur->dim(1)) * cur->dim(2);
  t.pooled.assign(channels, 0.0);
  for (int c = 0; c < channels; ++c) {
    const double* base = cur->values.data() + c * spatial;
    t.pooled[c] = std::accumulate(base, base + spatial, 0.0) /
                  static_cast<double>(spatial);
  }
  if (model.fc_weights.dim(1) != channels) {
    throw ShapeError("fc expects " + std::to_string(model.fc_weights.dim(1)) +
                     " pooled channels, got " + std::to_string(channels));
  }
  for (int o = 0; o < kNumClasses; ++o) {
    double acc = model.fc_bias.values[o];
    const double* w = model.fc_weights.values.data() + o * channels;
    for (int c = 0; c < channels; ++c) acc += w[c] * t.pooled[c];
    t.logits[o] = acc;
  }
  return t;
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape) {
  Tensor t;
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 1) throw ShapeError("tensor extent must be >= 1");
    n *= static_cast<std::size_t>(d);
  }
  t.shape = std::move(shape);
  t.values.assign(n, 0.0);
  return t;
}

Tensor conv_forward(const ConvLayer& layer, const Tensor& input) {
  check_conv_input(layer, input);
  const int k = layer.kernel;
  const int pad = (k == 3) ? 1 : 0;
  const int in_h = input.dim(1), in_w = input.dim(2);
  const int out_h = out_extent(in_h, k, pad, layer.stride);
  const int out_w = out_extent(in_w, k, pad, layer.stride);
  Tensor out = Tensor::zeros({layer.out_channels, out_h, out_w});

  for (int oc = 0; oc < layer.out_channels; ++oc) {
    double* out_plane = out.values.data() +
                        static_cast<std::size_t>(oc) * out_h * out_w;
    for (int i = 0; i < out_h * out_w; ++i) out_plane[i] = layer.bias.values[oc];
    for (int ic = 0; ic < layer.in_channels; ++ic) {
      const double* in_plane = input.values.data() +
                               static_cast<std::size_t>(ic) * in_h * in_w;
      const double* w = layer.weights.values.data() +
                        ((static_cast<std::size_t>(oc) * layer.in_channels +
                          ic) *
                         k * k);
      for (int oy = 0; oy < out_h; ++oy) {
        for (int ky = 0; ky < k; ++ky) {
          int iy = oy * layer.stride + ky - pad;
          if (iy < 0 || iy >= in_h) continue;
          const double* in_row = in_plane + static_cast<std::size_t>(iy) * in_w;
          double* out_row = out_plane + static_cast<std::size_t>(oy) * out_w;
          for (int kx = 0; kx < k; ++kx) {
            double wv = w[ky * k + kx];
            if (wv == 0.0) continue;
            int ix0 = kx - pad;
            for (int ox = 0; ox < out_w; ++ox) {
              int ix = ox * layer.stride + ix0;
              if (ix < 0 || ix >= in_w) continue;
              out_row[ox] += wv * in_row[ix];
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor conv_backward(const ConvLayer& layer, const Tensor& input,
                     const Tensor& d_output, Tensor& d_weights,
                     Tensor& d_bias) {
  check_conv_input(layer, input);
  if (!d_weights.same_shape(layer.weights) || !d_bias.same_shape(layer.bias)) {
    throw ShapeError("conv_backward: gradient buffers mismatch layer shapes");
  }
  const int k = layer.kernel;
  const int pad = (k == 3) ? 1 : 0;
  const int in_h = input.dim(1), in_w = input.dim(2);
  const int out_h = d_output.dim(1), out_w = d_output.dim(2);
  if (d_output.dim(0) != layer.out_channels ||
      out_h != out_extent(in_h, k, pad, layer.stride) ||
      out_w != out_extent(in_w, k, pad, layer.stride)) {
    throw ShapeError("conv_backward: d_output shape " + shape_str(d_output) +
                     " inconsistent with input " + shape_str(input));
  }
  Tensor d_input = Tensor::zeros(input.shape);

  for (int oc = 0; oc < layer.out_channels; ++oc) {
    const double* dy_plane = d_output.values.data() +
                             static_cast<std::size_t>(oc) * out_h * out_w;
    for (int i = 0; i < out_h * out_w; ++i) d_bias.values[oc] += dy_plane[i];
    for (int ic = 0; ic < layer.in_channels; ++ic) {
      const double* in_plane = input.values.data() +
                               static_cast<std::size_t>(ic) * in_h * in_w;
      double* dx_plane = d_input.values.data() +
                         static_cast<std::size_t>(ic) * in_h * in_w;
      const double* w = layer.weights.values.data() +
                        ((static_cast<std::size_t>(oc) * layer.in_channels +
                          ic) *
                         k * k);
      double* dw = d_weights.values.data() +
                   ((static_cast<std::size_t>(oc) * layer.in_channels + ic) *
                    k * k);
      for (int oy = 0; oy < out_h; ++oy) {
        const double* dy_row = dy_plane + static_cast<std::size_t>(oy) * out_w;
        for (int ky = 0; ky < k; ++ky) {
          int iy = oy * layer.stride + ky - pad;
          if (iy < 0 || iy >= in_h) continue;
          const double* in_row = in_plane + static_cast<std::size_t>(iy) * in_w;
          double* dx_row = dx_plane + static_cast<std::size_t>(iy) * in_w;
          for (int kx = 0; kx < k; ++kx) {
            int ix0 = kx - pad;
            double wv = w[ky * k + kx];
            double dw_acc = 0.0;
            for (int ox = 0; ox < out_w; ++ox) {
              int ix = ox * layer.stride + ix0;
              if (ix < 0 || ix >= in_w) continue;
              double dy = dy_row[ox];
              dw_acc += dy * in_row[ix];
              dx_row[ix] += dy * wv;
            }
            dw[ky * k + kx] += dw_acc;
          }
        }
      }
    }
  }
  return d_input;
}

Tensor block_forward(const ResidualBlock& block, const Tensor& input) {
  return block_forward_trace(block, input).y;
}

std::vector<Tensor*> TinyResNet::params() {
  std::vector<Tensor*> out = {&stem.weights, &stem.bias};
  for (auto& b : blocks) {
    out.push_back(&b.conv1.weights);
    out.push_back(&b.conv1.bias);
    out.push_back(&b.conv2.weights);
    out.push_back(&b.conv2.bias);
    if (b.shortcut == ShortcutKind::Projection) {
      out.push_back(&b.projection.weights);
      out.push_back(&b.projection.bias);
    }
  }
  out.push_back(&fc_weights);
  out.push_back(&fc_bias);
  return out;
}

std::vector<const Tensor*> TinyResNet::params() const {
  auto mut = const_cast<TinyResNet*>(this)->params();
  return {mut.begin(), mut.end()};
}

TinyResNet make_tiny_resnet(const ArchConfig& arch, RandomStream rng) {
  if (arch.base_channels < 1) throw RangeError("base_channels must be >= 1");
  const int c = arch.base_channels;
  TinyResNet model;
  model.stem = make_conv(3, 3, c, 1, rng);  // RGB in

  auto identity_block = [&](int ch) {
    ResidualBlock b;
    b.conv1 = make_conv(3, ch, ch, 1, rng);
    b.conv2 = make_conv(3, ch, ch, 1, rng);
    b.shortcut = ShortcutKind::Identity;
    return b;
  };
  auto projection_block = [&](int in_ch, int out_ch, int stride) {
    ResidualBlock b;
    b.conv1 = make_conv(3, in_ch, out_ch, stride, rng);
    b.conv2 = make_conv(3, out_ch, out_ch, 1, rng);
    b.shortcut = ShortcutKind::Projection;
    b.projection = make_conv(1, in_ch, out_ch, stride, rng);
    return b;
  };

  model.blocks.push_back(identity_block(c));
  model.blocks.push_back(projection_block(c, 2 * c, 2));
  model.blocks.push_back(identity_block(2 * c));
  model.blocks.push_back(projection_block(2 * c, 4 * c, 2));

  model.fc_weights = Tensor::zeros({kNumClasses, 4 * c});
  model.fc_bias = Tensor::zeros({kNumClasses});
  double bound = std::sqrt(1.0 / (4 * c));
  for (double& w : model.fc_weights.values) {
    w = (2.0 * rng.next_double() - 1.0) * bound;
  }
  return model;
}

std::array<double, kNumClasses> forward_logits(const TinyResNet& model,
                                               const Tensor& input) {
  return forward_trace(model, input).logits;
}

std::pair<double, std::array<double, kNumClasses>> softmax_xent(
    const std::array<double, kNumClasses>& logits, ClassLabel label) {
  double max_logit = *std::max_element(logits.begin(), logits.end());
  std::array<double, kNumClasses> expd;
  double sum = 0.0;
  for (int i = 0; i < kNumClasses; ++i) {
    expd[i] = std::exp(logits[i] - max_logit);
    sum += expd[i];
  }
  int target = label_index(label);
  double log_prob = logits[target] - max_logit - std::log(sum);
  std::array<double, kNumClasses> grad;
  for (int i = 0; i < kNumClasses; ++i) {
    grad[i] = expd[i] / sum - (i == target ? 1.0 : 0.0);
  }
  return {-log_prob, grad};
}

void Gradients::add(const Gradients& other) {
  if (tensors.size() != other.tensors.size()) {
    throw ShapeError("gradient lists differ in length");
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    add_inplace(tensors[i], other.tensors[i]);
  }
}

void Gradients::scale(double factor) {
  for (auto& t : tensors) {
    for (double& v : t.values) v *= factor;
  }
}

Gradients zero_gradients(const TinyResNet& model) {
  Gradients g;
  for (const Tensor* p : model.params()) g.tensors.push_back(Tensor::zeros(p->shape));
  return g;
}

double backward(const TinyResNet& model, const Tensor& input,
                ClassLabel label, Gradients& grads) {
  ForwardTrace t = forward_trace(model, input);
  auto [loss, dlogits] = softmax_xent(t.logits, label);

  // Gradient buffers line up with params() order; walk an index through it.
  std::size_t gi = grads.tensors.size();
  Tensor& g_fc_b = grads.tensors[--gi];
  Tensor& g_fc_w = grads.tensors[gi - 1];
  --gi;

  const int channels = model.fc_weights.dim(1);
  std::vector<double> d_pooled(channels, 0.0);
  for (int o = 0; o < kNumClasses; ++o) {
    g_fc_b.values[o] += dlogits[o];
    double* gw = g_fc_w.values.data() + o * channels;
    const double* w = model.fc_weights.values.data() + o * channels;
    for (int c = 0; c < channels; ++c) {
      gw[c] += dlogits[o] * t.pooled[c];
      d_pooled[c] += dlogits[o] * w[c];
    }
  }

  // Global average pool spreads each channel gradient evenly.
  const Tensor& last = t.blocks.empty() ? t.stem_y : t.blocks.back().y;
  auto spatial = static_cast<std::size_t>(last.dim(1)) * last.dim(2);
  Tensor d_cur = Tensor::zeros(last.shape);
  for (int c = 0; c < channels; ++c) {
    double v = d_pooled[c] / static_cast<double>(spatial);
    double* base = d_cur.values.data() + c * spatial;
    for (std::size_t i = 0; i < spatial; ++i) base[i] = v;
  }

  // Blocks in reverse. Gradient tensors were pushed in forward order, so
  // compute each block's slot start from its parameter count.
  std::vector<std::size_t> block_slot(model.blocks.size());
  {
    std::size_t slot = 2;  // stem weights + bias
    for (std::size_t b = 0; b < model.blocks.size(); ++b) {
      block_slot[b] = slot;
      slot += model.blocks[b].shortcut == ShortcutKind::Projection ? 6 : 4;
    }
  }
  for (std::size_t bi = model.blocks.size(); bi-- > 0;) {
    const ResidualBlock& block = model.blocks[bi];
    const BlockTrace& bt = t.blocks[bi];
    const Tensor& x = bi == 0 ? t.stem_y : t.blocks[bi - 1].y;
    std::size_t slot = block_slot[bi];

    Tensor d_sum = relu_backward(bt.sum, d_cur);
    Tensor d_r1 = conv_backward(block.conv2, bt.r1, d_sum,
                                grads.tensors[slot + 2],
                                grads.tensors[slot + 3]);
    Tensor d_a1 = relu_backward(bt.a1, d_r1);
    Tensor d_x = conv_backward(block.conv1, x, d_a1, grads.tensors[slot],
                               grads.tensors[slot + 1]);
    if (block.shortcut == ShortcutKind::Projection) {
      Tensor d_x_sc = conv_backward(block.projection, x, d_sum,
                                    grads.tensors[slot + 4],
                                    grads.tensors[slot + 5]);
      add_inplace(d_x, d_x_sc);
    } else {
      add_inplace(d_x, d_sum);
    }
    d_cur = std::move(d_x);
  }

  Tensor d_stem = relu_backward(t.stem_a, d_cur);
  conv_backward(model.stem, input, d_stem, grads.tensors[0], grads.tensors[1]);
  return loss;
}

double lr_at(int epoch, const SGDConfig& config) {
  if (epoch < 0 || epoch >= config.epochs) {
    throw RangeError("epoch " + std::to_string(epoch) + " outside [0, " +
                     std::to_string(config.epochs) + ")");
  }
  return config.initial_rate *
         std::pow(config.decay_factor, epoch / config.decay_every);
}

void sgd_step(std::vector<double>& weights, const std::vector<double>& grads,
              std::vector<double>& velocity, double rate, double momentum) {
  if (weights.size() != grads.size() || weights.size() != velocity.size()) {
    throw ShapeError("sgd_step: weights/grads/velocity sizes differ");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    velocity[i] = momentum * velocity[i] - rate * grads[i];
    weights[i] += velocity[i];
  }
}

void sgd_step(Tensor& weights, const Tensor& grads, Tensor& velocity,
              double rate, double momentum) {
  if (!weights.same_shape(grads) || !weights.same_shape(velocity)) {
    throw ShapeError("sgd_step: tensor shapes differ");
  }
  sgd_step(weights.values, grads.values, velocity.values, rate, momentum);
}

}  // namespace polyp::nnet
