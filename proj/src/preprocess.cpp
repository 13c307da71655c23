#include "polyp/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <json.hpp>

#include "polyp/errors.hpp"
#include "polyp/io_util.hpp"

namespace polyp {

namespace {

int lower_median(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

std::uint8_t clamp_byte(double v) {
  long r = std::lround(v);
  if (r < 0) r = 0;
  if (r > 255) r = 255;
  return static_cast<std::uint8_t>(r);
}

RasterImage bilinear_resize(const RasterImage& src, int new_w, int new_h) {
  RasterImage dst = RasterImage::zeros(new_w, new_h);
  double sx = static_cast<double>(src.width) / new_w;
  double sy = static_cast<double>(src.height) / new_h;
  for (int yo = 0; yo < new_h; ++yo) {
    double fy = (yo + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int y1 = y0 + 1;
    y0 = std::clamp(y0, 0, src.height - 1);
    y1 = std::clamp(y1, 0, src.height - 1);
    for (int xo = 0; xo < new_w; ++xo) {
      double fx = (xo + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int x1 = x0 + 1;
      x0 = std::clamp(x0, 0, src.width - 1);
      x1 = std::clamp(x1, 0, src.width - 1);
      for (int c = 0; c < kChannels; ++c) {
        double top = (1.0 - wx) * src.at(x0, y0, c) + wx * src.at(x1, y0, c);
        double bot = (1.0 - wx) * src.at(x0, y1, c) + wx * src.at(x1, y1, c);
        dst.at(xo, yo, c) = clamp_byte((1.0 - wy) * top + wy * bot);
      }
    }
  }
  return dst;
}

// Cyclic Jacobi eigendecomposition of a symmetric 3x3 matrix.
// Returns eigenvalues (descending, clamped at 0 by the caller) and the
// matching orthonormal eigenvector columns.
void jacobi_eigen3(std::array<std::array<double, 3>, 3> a,
                   std::array<double, 3>& eigenvalues,
                   std::array<std::array<double, 3>, 3>& eigenvectors) {
  std::array<std::array<double, 3>, 3> v = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
    if (off < 1e-15) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        std::array<std::array<double, 3>, 3> an = a;
        an[p][p] = a[p][p] - t * a[p][q];
        an[q][q] = a[q][q] + t * a[p][q];
        an[p][q] = an[q][p] = 0.0;
        for (int k = 0; k < 3; ++k) {
          if (k == p || k == q) continue;
          an[k][p] = an[p][k] = c * a[k][p] - s * a[k][q];
          an[k][q] = an[q][k] = s * a[k][p] + c * a[k][q];
        }
        a = an;
        for (int k = 0; k < 3; ++k) {
          double vp = v[k][p], vq = v[k][q];
          v[k][p] = c * vp - s * vq;
          v[k][q] = s * vp + c * vq;
        }
      }
    }
  }
  // Sort descending, carrying eigenvector columns along.
  std::array<int, 3> order = {0, 1, 2};
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return a[i][i] > a[j][j]; });
  for (int j = 0; j < 3; ++j) {
    eigenvalues[j] = a[order[j]][order[j]];
    for (int r = 0; r < 3; ++r) eigenvectors[r][j] = v[r][order[j]];
  }
}

int checked_rotation_count(int k) {
  if (k < 0 || k > 3) throw RangeError("rotation count must be in {0,1,2,3}");
  return k;
}

template <typename Img>
Img rotate_cw_once(const Img& in) {
  Img out = Img::zeros(in.height, in.width);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (int c = 0; c < kChannels; ++c) {
        out.at(x, y, c) = in.at(y, in.height - 1 - x, c);
      }
    }
  }
  return out;
}

template <typename Img>
Img rotate_impl(const Img& image, int k) {
  Img out = image;
  for (int i = 0; i < checked_rotation_count(k); ++i) out = rotate_cw_once(out);
  return out;
}

template <typename Img>
Img hflip_impl(const Img& in) {
  Img out = Img::zeros(in.width, in.height);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      for (int c = 0; c < kChannels; ++c) {
        out.at(x, y, c) = in.at(in.width - 1 - x, y, c);
      }
    }
  }
  return out;
}

}  // namespace

ConformTarget compute_conform_target(
    const std::vector<std::pair<int, int>>& dims, double subset_fraction,
    RandomStream& rng) {
  if (dims.empty()) throw EmptyDatasetError("compute_conform_target: no dims");
  if (!(subset_fraction > 0.0 && subset_fraction <= 1.0)) {
    throw RangeError("subset_fraction must be in (0, 1]");
  }
  auto count = static_cast<std::size_t>(
      std::ceil(static_cast<double>(dims.size()) * subset_fraction));
  auto picks = rng.sample_without_replacement(dims.size(), count);
  std::vector<int> widths, heights;
  for (std::size_t i : picks) {
    widths.push_back(dims[i].first);
    heights.push_back(dims[i].second);
  }
  return {lower_median(std::move(widths)), lower_median(std::move(heights))};
}

RasterImage conform_size(const RasterImage& image, ConformTarget target) {
  const RasterImage* content = &image;
  RasterImage scaled;
  if (image.width > target.width || image.height > target.height) {
    double f = std::min(static_cast<double>(target.width) / image.width,
                        static_cast<double>(target.height) / image.height);
    int new_w = std::clamp(static_cast<int>(std::lround(image.width * f)), 1,
                           target.width);
    int new_h = std::clamp(static_cast<int>(std::lround(image.height * f)), 1,
                           target.height);
    scaled = bilinear_resize(image, new_w, new_h);
    content = &scaled;
  }
  if (content->width == target.width && content->height == target.height) {
    return *content;
  }
  RasterImage out = RasterImage::zeros(target.width, target.height);
  for (int y = 0; y < content->height; ++y) {
    for (int x = 0; x < content->width; ++x) {
      for (int c = 0; c < kChannels; ++c) {
        out.at(x, y, c) = content->at(x, y, c);
      }
    }
  }
  return out;
}

void StatsAccumulator::add(const RasterImage& image) {
  for (std::size_t i = 0; i < image.pixels.size(); i += kChannels) {
    for (int c = 0; c < kChannels; ++c) {
      double v = image.pixels[i + c];
      sum_[c] += v;
      sum_sq_[c] += v * v;
    }
  }
  count_ += static_cast<std::size_t>(image.width) * image.height;
}

NormalizationStats StatsAccumulator::finish() const {
  if (count_ == 0) throw EmptyDatasetError("compute_stats: no pixels");
  NormalizationStats stats;
  auto n = static_cast<double>(count_);
  for (int c = 0; c < kChannels; ++c) {
    stats.mean[c] = sum_[c] / n;
    double var = sum_sq_[c] / n - stats.mean[c] * stats.mean[c];
    stats.stddev[c] = std::sqrt(std::max(0.0, var));
  }
  return stats;
}

void ColorPCAAccumulator::add(const RasterImage& image) {
  for (std::size_t i = 0; i < image.pixels.size(); i += kChannels) {
    std::array<double, kChannels> x;
    for (int c = 0; c < kChannels; ++c) x[c] = image.pixels[i + c] / 255.0;
    for (int a = 0; a < kChannels; ++a) {
      sum_[a] += x[a];
      for (int b = 0; b < kChannels; ++b) prod_[a][b] += x[a] * x[b];
    }
  }
  count_ += static_cast<std::size_t>(image.width) * image.height;
}

ColorPCA ColorPCAAccumulator::finish() const {
  if (count_ < 2) {
    throw InsufficientDataError("fit_color_pca: need at least 2 pixels, have " +
                                std::to_string(count_));
  }
  auto n = static_cast<double>(count_);
  std::array<double, 3> mean;
  for (int c = 0; c < 3; ++c) mean[c] = sum_[c] / n;
  std::array<std::array<double, 3>, 3> cov;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      cov[a][b] = prod_[a][b] / n - mean[a] * mean[b];
    }
  }
  ColorPCA pca;
  jacobi_eigen3(cov, pca.eigenvalues, pca.eigenvectors);
  for (double& ev : pca.eigenvalues) ev = std::max(0.0, ev);
  return pca;
}

NormalizationStats compute_stats(std::span<const RasterImage> images) {
  StatsAccumulator acc;
  for (const auto& img : images) acc.add(img);
  return acc.finish();
}

ColorPCA fit_color_pca(std::span<const RasterImage> images) {
  ColorPCAAccumulator acc;
  for (const auto& img : images) acc.add(img);
  return acc.finish();
}

TensorImage normalize(const RasterImage& image,
                      const NormalizationStats& stats) {
  TensorImage out = TensorImage::zeros(image.width, image.height);
  std::array<double, kChannels> inv_std;
  for (int c = 0; c < kChannels; ++c) {
    inv_std[c] = 1.0 / std::max(stats.stddev[c], kStdEpsilon);
  }
  for (std::size_t i = 0; i < image.pixels.size(); i += kChannels) {
    for (int c = 0; c < kChannels; ++c) {
      out.values[i + c] = (image.pixels[i + c] - stats.mean[c]) * inv_std[c];
    }
  }
  return out;
}

TensorImage jitter(const TensorImage& image, const ColorPCA& pca,
                   RandomStream& rng, double sigma) {
  std::array<double, 3> alpha;
  for (double& a : alpha) a = rng.next_normal() * sigma;
  std::array<double, 3> offset{};
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 3; ++i) {
      offset[c] += alpha[i] * pca.eigenvalues[i] * pca.eigenvectors[c][i];
    }
  }
  TensorImage out = image;
  for (std::size_t i = 0; i < out.values.size(); i += kChannels) {
    for (int c = 0; c < kChannels; ++c) out.values[i + c] += offset[c];
  }
  return out;
}

RasterImage rotate90(const RasterImage& image, int k) {
  return rotate_impl(image, k);
}
TensorImage rotate90(const TensorImage& image, int k) {
  return rotate_impl(image, k);
}
RasterImage hflip(const RasterImage& image) { return hflip_impl(image); }
TensorImage hflip(const TensorImage& image) { return hflip_impl(image); }

TensorImage augment(const TensorImage& image, const ColorPCA& pca,
                    const AugmentConfig& config, RandomStream& rng) {
  TensorImage out = jitter(image, pca, rng, config.jitter_sigma);
  int k = 0;
  if (config.rotation_mode != RotationMode::None) {
    k = static_cast<int>(rng.next_below(4));
  }
  out = rotate90(out, k);
  if (rng.next_double() < config.flip_probability) out = hflip(out);
  return out;
}

std::vector<TensorImage> augment_expand(const TensorImage& image,
                                        const ColorPCA& pca,
                                        const AugmentConfig& config,
                                        RandomStream& rng) {
  if (config.rotation_mode != RotationMode::AllFour) {
    std::vector<TensorImage> out;
    out.push_back(augment(image, pca, config, rng));
    return out;
  }
  TensorImage jittered = jitter(image, pca, rng, config.jitter_sigma);
  std::vector<TensorImage> out;
  out.reserve(4);
  for (int k = 0; k < 4; ++k) {
    TensorImage rotated = rotate90(jittered, k);
    if (rng.next_double() < config.flip_probability) rotated = hflip(rotated);
    out.push_back(std::move(rotated));
  }
  return out;
}

void save_pipeline_stats(const PipelineStats& stats,
                         const std::filesystem::path& path) {
  nlohmann::json j;
  j["mean"] = stats.norm.mean;
  j["std"] = stats.norm.stddev;
  j["eigenvalues"] = stats.pca.eigenvalues;
  std::array<double, 9> vecs;  // row-major
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) vecs[r * 3 + c] = stats.pca.eigenvectors[r][c];
  }
  j["eigenvectors"] = vecs;
  j["seed"] = stats.seed;
  j["target_width"] = stats.target.width;
  j["target_height"] = stats.target.height;
  write_file_atomic(path, j.dump(2) + "\n");
}

PipelineStats load_pipeline_stats(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("bad stats JSON in " + path.string() + ": " + e.what());
  }
  PipelineStats stats;
  try {
    stats.norm.mean = j.at("mean").get<std::array<double, 3>>();
    stats.norm.stddev = j.at("std").get<std::array<double, 3>>();
    stats.pca.eigenvalues = j.at("eigenvalues").get<std::array<double, 3>>();
    auto vecs = j.at("eigenvectors").get<std::array<double, 9>>();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) stats.pca.eigenvectors[r][c] = vecs[r * 3 + c];
    }
    stats.seed = j.at("seed").get<std::uint64_t>();
    stats.target.width = j.value("target_width", 0);
    stats.target.height = j.value("target_height", 0);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad stats JSON in " + path.string() + ": " + e.what());
  }
  return stats;
}

}  // namespace polyp
