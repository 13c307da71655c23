#include <bit>
#include <cstring>
#include <string>

#include "polyp/errors.hpp"
#include "polyp/io_util.hpp"
#include "polyp/nnet.hpp"

namespace polyp::nnet {

namespace {

constexpr char kMagic[4] = {'T', 'R', 'N', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (buf.size() - pos < n) throw IoError("checkpoint truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i]))
           << (8 * i);
    }
    pos += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i]))
              << (8 * i);
    }
    pos += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
};

void put_tensor(std::string& out, const Tensor& t) {
  put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
  for (int d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
  for (double v : t.values) put_f64(out, v);
}

void read_tensor_into(Reader& r, Tensor& t) {
  std::uint32_t ndim = r.u32();
  if (ndim != t.shape.size()) {
    throw ShapeError("checkpoint tensor rank mismatch");
  }
  for (int expected : t.shape) {
    if (r.u32() != static_cast<std::uint32_t>(expected)) {
      throw ShapeError("checkpoint tensor extent mismatch");
    }
  }
  for (double& v : t.values) v = r.f64();
}

ConvLayer shaped_conv(int kernel, int in_ch, int out_ch, int stride) {
  ConvLayer c;
  c.kernel = kernel;
  c.in_channels = in_ch;
  c.out_channels = out_ch;
  c.stride = stride;
  c.weights = Tensor::zeros({out_ch, in_ch, kernel, kernel});
  c.bias = Tensor::zeros({out_ch});
  return c;
}

}  // namespace

void save_model(const TinyResNet& model, const std::filesystem::path& path) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(model.stem.out_channels));
  put_u32(out, static_cast<std::uint32_t>(model.blocks.size()));
  for (const auto& b : model.blocks) {
    put_u32(out, static_cast<std::uint32_t>(b.conv1.in_channels));
    put_u32(out, static_cast<std::uint32_t>(b.conv1.out_channels));
    put_u32(out, static_cast<std::uint32_t>(b.conv1.stride));
    put_u32(out, b.shortcut == ShortcutKind::Projection ? 1u : 0u);
  }
  for (const Tensor* t : model.params()) put_tensor(out, *t);
  write_file_atomic(path, out);
}

TinyResNet load_model(const std::filesystem::path& path) {
  std::string buf = read_file(path);
  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw IoError("not a model checkpoint (bad magic): " +
                            path.string());
  }
  Reader r{buf, 4};
  auto stem_out = static_cast<int>(r.u32());
  auto num_blocks = static_cast<int>(r.u32());
  if (stem_out < 1 || stem_out > 4096 || num_blocks < 0 || num_blocks > 64) {
    throw ShapeError("checkpoint architecture out of range");
  }
  TinyResNet model;
  model.stem = shaped_conv(3, 3, stem_out, 1);
  int last = stem_out;
  for (int i = 0; i < num_blocks; ++i) {
    auto in_ch = static_cast<int>(r.u32());
    auto out_ch = static_cast<int>(r.u32());
    auto stride = static_cast<int>(r.u32());
    bool proj = r.u32() != 0;
    if (in_ch != last || out_ch < 1 || out_ch > 4096 ||
        (stride != 1 && stride != 2)) {
      throw ShapeError("checkpoint block descriptor inconsistent");
    }
    if (!proj && (in_ch != out_ch || stride != 1)) {
      throw ShapeError("identity shortcut requires matching shapes");
    }
    ResidualBlock b;
    b.conv1 = shaped_conv(3, in_ch, out_ch, stride);
    b.conv2 = shaped_conv(3, out_ch, out_ch, 1);
    b.shortcut = proj ? ShortcutKind::Projection : ShortcutKind::Identity;
    if (proj) b.projection = shaped_conv(1, in_ch, out_ch, stride);
    model.blocks.push_back(std::move(b));
    last = out_ch;
  }
  model.fc_weights = Tensor::zeros({kNumClasses, last});
  model.fc_bias = Tensor::zeros({kNumClasses});
  for (Tensor* t : model.params()) read_tensor_into(r, *t);
  if (r.pos != buf.size()) {
    throw IoError("checkpoint has trailing bytes");
  }
  return model;
}

}  // namespace polyp::nnet
