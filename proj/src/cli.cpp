#include "polyp/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "polyp/errors.hpp"
#include "polyp/evaluation.hpp"
#include "polyp/inference.hpp"
#include "polyp/io_util.hpp"
#include "polyp/nnet.hpp"
#include "polyp/pnm.hpp"
#include "polyp/split.hpp"

namespace polyp::cli {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------
// Config file support: defaults < config JSON < flags. Implemented by
// injecting config entries as flags in front of the user's arguments,
// skipping any flag the user passed explicitly.
std::vector<std::string> apply_config_file(std::vector<std::string> args) {
  std::optional<fs::path> config_path;
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--config") config_path = args[i + 1];
  }
  if (!config_path) return args;

  nlohmann::json config;
  try {
    config = nlohmann::json::parse(read_file(*config_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("bad config JSON " + config_path->string() + ": " + e.what());
  }
  if (!config.is_object()) {
    throw IoError("config file must hold a JSON object");
  }

  auto has_flag = [&](const std::string& flag) {
    return std::find(args.begin(), args.end(), flag) != args.end();
  };

  // Insert after the subcommand name (args[0]) so CLI11 scopes them right.
  std::vector<std::string> injected;
  for (auto& [key, value] : config.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (has_flag(flag)) continue;
    injected.push_back(flag);
    if (value.is_string()) {
      injected.push_back(value.get<std::string>());
    } else if (value.is_boolean()) {
      if (!value.get<bool>()) injected.pop_back();  // flags are presence-only
    } else {
      injected.push_back(value.dump());
    }
  }
  std::size_t insert_at = args.empty() ? 0 : 1;
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(insert_at),
              injected.begin(), injected.end());
  return args;
}

// ---------------------------------------------------------------------
// Shared option bundles.

struct PatchFlags {
  int patch_width = 0;
  int patch_height = 0;
  double overlap = 1.0 / 3.0;

  void attach(CLI::App* app, bool require_size) {
    auto* w = app->add_option("--patch-width", patch_width, "Patch width in pixels");
    auto* h = app->add_option("--patch-height", patch_height, "Patch height in pixels");
    if (require_size) {
      w->required();
      h->required();
    }
    app->add_option("--overlap", overlap,
                    "Minimum fractional overlap between adjacent patches")
        ->capture_default_str();
  }

  PatchSpec spec() const {
    if (patch_width < 1 || patch_height < 1) {
      throw RangeError("patch dimensions must be >= 1");
    }
    if (!(overlap >= 0.0 && overlap < 1.0)) {
      throw RangeError("overlap must be in [0, 1)");
    }
    return {patch_width, patch_height, overlap};
  }
};

RasterImage load_slide_image(const fs::path& image_root,
                             const SlideRecord& record) {
  fs::path p = record.image_path;
  if (p.is_relative()) p = image_root / p;
  return read_image(p);
}

// Crop pixels from the parent slide; bounds must sit inside the image.
RasterImage materialize_crop(const RasterImage& parent, const CropRecord& crop) {
  if (crop.x + crop.width > parent.width ||
      crop.y + crop.height > parent.height) {
    throw OutOfBoundsError("crop \"" + crop.id + "\" exceeds its parent image");
  }
  RasterImage out = RasterImage::zeros(crop.width, crop.height);
  for (int y = 0; y < crop.height; ++y) {
    for (int x = 0; x < crop.width; ++x) {
      for (int c = 0; c < kChannels; ++c) {
        out.at(x, y, c) = parent.at(crop.x + x, crop.y + y, c);
      }
    }
  }
  return out;
}

RotationMode parse_rotation_mode(const std::string& text) {
  if (text == "none") return RotationMode::None;
  if (text == "random_quarter") return RotationMode::RandomQuarter;
  if (text == "all_four") return RotationMode::AllFour;
  throw RangeError("rotation mode must be none, random_quarter or all_four");
}

nnet::Tensor to_chw(const TensorImage& img) {
  nnet::Tensor t = nnet::Tensor::zeros({kChannels, img.height, img.width});
  auto plane = static_cast<std::size_t>(img.width) * img.height;
  for (std::size_t pix = 0; pix < plane; ++pix) {
    for (int c = 0; c < kChannels; ++c) {
      t.values[c * plane + pix] = img.values[pix * kChannels + c];
    }
  }
  return t;
}

// ---------------------------------------------------------------------
// split

struct SplitCmd {
  std::string manifest;
  std::string out;
  double fraction = 0.15;
  std::uint64_t seed = 0;

  int execute() {
    auto records = load_manifest(manifest);
    std::vector<SlideRecord> splittable;
    for (const auto& r : records) {
      if (r.split_tag != SplitTag::Test) splittable.push_back(r);
    }
    RandomStream rng(seed);
    auto [train_set, val_set] = split_dataset(splittable, fraction, rng);

    std::unordered_map<std::string, SplitTag> tag;
    for (const auto& r : train_set) tag[r.id] = SplitTag::Train;
    for (const auto& r : val_set) tag[r.id] = SplitTag::Validation;
    for (auto& r : records) {
      if (auto it = tag.find(r.id); it != tag.end()) r.split_tag = it->second;
    }
    save_manifest(records, out);

    std::array<std::array<int, 3>, kNumClasses> counts{};
    for (const auto& r : records) {
      int bucket = r.split_tag == SplitTag::Train        ? 0
                   : r.split_tag == SplitTag::Validation ? 1
                                                         : 2;
      counts[label_index(r.reference_label)][bucket] += 1;
    }
    for (ClassLabel c : kAllLabels) {
      const auto& row = counts[label_index(c)];
      std::cout << label_code(c) << "\ttrain=" << row[0]
                << "\tvalidation=" << row[1] << "\ttest=" << row[2] << "\n";
    }
    return 0;
  }
};

// ---------------------------------------------------------------------
// stats

struct StatsCmd {
  std::string manifest;
  std::string images;
  std::string out;
  double subset_fraction = 0.15;
  double pca_fraction = 0.15;
  std::uint64_t seed = 0;

  int execute() {
    auto records = load_manifest(manifest);
    std::vector<SlideRecord> train_records;
    for (const auto& r : records) {
      if (r.split_tag == SplitTag::Train) train_records.push_back(r);
    }
    if (train_records.empty()) {
      for (const auto& r : records) {
        if (r.split_tag != SplitTag::Test) train_records.push_back(r);
      }
    }
    if (train_records.empty()) throw EmptyDatasetError("no training records");

    RandomStream rng(seed);
    StatsAccumulator stat_acc;
    std::vector<std::pair<int, int>> dims;
    std::vector<RasterImage> loaded;
    loaded.reserve(train_records.size());
    for (const auto& r : train_records) {
      RasterImage img = load_slide_image(images, r);
      dims.emplace_back(img.width, img.height);
      stat_acc.add(img);
      loaded.push_back(std::move(img));
    }

    RandomStream conform_rng = rng.split("conform");
    ConformTarget target =
        compute_conform_target(dims, subset_fraction, conform_rng);

    RandomStream pca_rng = rng.split("pca");
    auto picks = pca_rng.sample_without_replacement(
        loaded.size(),
        static_cast<std::size_t>(
            std::ceil(static_cast<double>(loaded.size()) * pca_fraction)));
    ColorPCAAccumulator pca_acc;
    for (std::size_t i : picks) pca_acc.add(loaded[i]);

    PipelineStats stats;
    stats.norm = stat_acc.finish();
    stats.pca = pca_acc.finish();
    stats.target = target;
    stats.seed = seed;
    save_pipeline_stats(stats, out);
    std::cout << "stats written to " << out << " (target " << target.width
              << "x" << target.height << ", " << train_records.size()
              << " images)\n";
    return 0;
  }
};

// ---------------------------------------------------------------------
// tile

struct TileCmd {
  std::string image;
  int width = 0;
  int height = 0;
  PatchFlags patch;
  std::string out;

  int execute() {
    if (!image.empty()) {
      RasterImage img = read_image(image);
      width = img.width;
      height = img.height;
    }
    if (width < 1 || height < 1) {
      throw RangeError("provide --image or positive --width/--height");
    }
    PatchSpec spec = patch.spec();
    std::ostringstream body;
    body << "patch_id\tx\ty\twidth\theight\n";
    for (PatchOrigin o : tile(width, height, spec)) {
      body << o.x << "_" << o.y << '\t' << o.x << '\t' << o.y << '\t'
           << spec.patch_width << '\t' << spec.patch_height << '\n';
    }
    if (out.empty()) {
      std::cout << body.str();
    } else {
      write_file_atomic(out, body.str());
    }
    return 0;
  }
};

// ---------------------------------------------------------------------
// train

struct TrainCmd {
  std::string manifest;
  std::string crops;
  std::string images;
  std::string out;
  std::string stats_out;
  std::string loss_out;
  nnet::SGDConfig sgd;
  int base_channels = 8;
  int augment_copies = 1;
  double jitter_sigma = 0.1;
  double flip_probability = 0.5;
  std::string rotation_mode = "random_quarter";
  double subset_fraction = 0.15;
  double pca_fraction = 0.15;
  std::uint64_t seed = 0;
  int jobs = 1;

  int execute() {
    auto slide_records = load_manifest(manifest);
    auto crop_records = load_crop_manifest(crops);
    if (crop_records.empty()) throw EmptyDatasetError("no crops to train on");

    std::unordered_map<std::string, const SlideRecord*> slides;
    for (const auto& r : slide_records) slides[r.id] = &r;

    // Parent images loaded once each.
    std::unordered_map<std::string, RasterImage> parent_cache;
    auto parent_image = [&](const std::string& slide_id) -> const RasterImage& {
      auto it = parent_cache.find(slide_id);
      if (it == parent_cache.end()) {
        auto rec = slides.find(slide_id);
        if (rec == slides.end()) {
          throw Error("crop references unknown slide \"" + slide_id + "\"");
        }
        it = parent_cache.emplace(slide_id,
                                  load_slide_image(images, *rec->second))
                 .first;
      }
      return it->second;
    };

    struct RawCrop {
      const CropRecord* record;
      RasterImage pixels;
      SplitTag tag;
    };
    std::vector<RawCrop> raw;
    raw.reserve(crop_records.size());
    for (const auto& crop : crop_records) {
      const RasterImage& parent = parent_image(crop.parent_slide_id);
      SplitTag tag = slides.at(crop.parent_slide_id)->split_tag;
      raw.push_back({&crop, materialize_crop(parent, crop), tag});
    }
    parent_cache.clear();

    std::vector<const RawCrop*> train_crops, val_crops;
    for (const auto& rc : raw) {
      if (rc.tag == SplitTag::Validation) {
        val_crops.push_back(&rc);
      } else if (rc.tag != SplitTag::Test) {
        train_crops.push_back(&rc);
      }
    }
    if (train_crops.empty()) throw EmptyDatasetError("no training crops");

    RandomStream rng(seed);
    std::vector<std::pair<int, int>> dims;
    for (const auto* rc : train_crops) {
      dims.emplace_back(rc->pixels.width, rc->pixels.height);
    }
    RandomStream conform_rng = rng.split("conform");
    ConformTarget target =
        compute_conform_target(dims, subset_fraction, conform_rng);

    // Stats and PCA over the conformed training crops: exactly what the
    // network will see at inference time.
    std::vector<RasterImage> conformed_train;
    conformed_train.reserve(train_crops.size());
    StatsAccumulator stat_acc;
    for (const auto* rc : train_crops) {
      RasterImage conformed = conform_size(rc->pixels, target);
      stat_acc.add(conformed);
      conformed_train.push_back(std::move(conformed));
    }
    NormalizationStats norm = stat_acc.finish();

    RandomStream pca_rng = rng.split("pca");
    auto picks = pca_rng.sample_without_replacement(
        conformed_train.size(),
        static_cast<std::size_t>(std::ceil(
            static_cast<double>(conformed_train.size()) * pca_fraction)));
    ColorPCAAccumulator pca_acc;
    for (std::size_t i : picks) pca_acc.add(conformed_train[i]);
    ColorPCA pca = pca_acc.finish();

    AugmentConfig aug;
    aug.jitter_sigma = jitter_sigma;
    aug.flip_probability = flip_probability;
    aug.rotation_mode = parse_rotation_mode(rotation_mode);
    if (target.width != target.height &&
        aug.rotation_mode != RotationMode::None) {
      // Odd quarter-turns would swap the network input dimensions.
      std::cerr << "note: non-square conform target, disabling rotations\n";
      aug.rotation_mode = RotationMode::None;
    }

    RandomStream augment_rng = rng.split("augment");
    std::vector<nnet::Example> train_examples;
    for (std::size_t i = 0; i < train_crops.size(); ++i) {
      const auto* rc = train_crops[i];
      TensorImage base = normalize(conformed_train[i], norm);
      train_examples.push_back(
          {rc->record->id, to_chw(base), rc->record->reference_label});
      RandomStream crop_rng = augment_rng.split(rc->record->id);
      for (int copy = 0; copy < augment_copies; ++copy) {
        auto variants = augment_expand(base, pca, aug, crop_rng);
        for (std::size_t v = 0; v < variants.size(); ++v) {
          train_examples.push_back(
              {rc->record->id + "#a" + std::to_string(copy) + "_" +
                   std::to_string(v),
               to_chw(variants[v]), rc->record->reference_label});
        }
      }
    }

    std::vector<nnet::Example> val_examples;
    for (const auto* rc : val_crops) {
      TensorImage t = normalize(conform_size(rc->pixels, target), norm);
      val_examples.push_back(
          {rc->record->id, to_chw(t), rc->record->reference_label});
    }

    sgd.seed = seed;
    nnet::ArchConfig arch{base_channels};
    RandomStream train_rng = rng.split("train");
    auto result =
        nnet::train(std::move(train_examples), sgd, train_rng,
                    val_examples.empty() ? nullptr : &val_examples, arch, jobs);

    nnet::save_model(result.model, out);
    if (result.best_validation) {
      nnet::save_model(*result.best_validation, out + ".best");
    }

    PipelineStats stats{norm, pca, target, seed};
    std::string stats_path = stats_out.empty() ? out + ".stats.json" : stats_out;
    save_pipeline_stats(stats, stats_path);

    std::ostringstream loss;
    loss << "epoch\tloss";
    if (!result.validation_accuracy.empty()) loss << "\tval_accuracy";
    loss << '\n';
    loss.precision(17);
    for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
      loss << e << '\t' << result.loss_history[e];
      if (e < result.validation_accuracy.size()) {
        loss << '\t' << result.validation_accuracy[e];
      }
      loss << '\n';
    }
    std::string loss_path = loss_out.empty() ? out + ".loss.tsv" : loss_out;
    write_file_atomic(loss_path, loss.str());

    std::cout << "trained " << sgd.epochs << " epochs on "
              << train_crops.size() << " crops (target " << target.width << "x"
              << target.height << "), final loss "
              << result.loss_history.back() << ", model " << out << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------------
// infer

struct InferCmd {
  std::string manifest;
  std::string images;
  std::string out_dir;
  std::string model_path;
  std::string stats_path;
  std::string predictions_path;
  std::string constant_label;
  PatchFlags patch;
  int min_patches = 5;
  double min_confidence = 0.70;
  int jobs = 1;

  int execute() {
    int sources = (!model_path.empty() ? 1 : 0) +
                  (!predictions_path.empty() ? 1 : 0) +
                  (!constant_label.empty() ? 1 : 0);
    if (sources != 1) {
      throw RangeError(
          "choose exactly one of --model/--stats, --predictions, --constant");
    }

    std::optional<ClassifierHandle> handle;
    if (!model_path.empty()) {
      if (stats_path.empty()) {
        throw RangeError("--model requires --stats");
      }
      PipelineStats stats = load_pipeline_stats(stats_path);
      if (stats.target.width < 1 || stats.target.height < 1) {
        throw RangeError("stats file lacks a conform target");
      }
      if (patch.patch_width == 0) patch.patch_width = stats.target.width;
      if (patch.patch_height == 0) patch.patch_height = stats.target.height;
      handle = ClassifierHandle::network(nnet::load_model(model_path),
                                         stats.norm, stats.target);
    } else if (!predictions_path.empty()) {
      handle = ClassifierHandle::recorded(
          load_recorded_predictions(predictions_path));
    } else {
      handle = ClassifierHandle::constant(
          ProbVector::one_hot(parse_label(constant_label)));
    }

    PatchSpec spec = patch.spec();
    DecisionThresholds thresholds{min_patches, min_confidence};
    if (thresholds.min_patches < 1) {
      throw RangeError("--min-patches must be >= 1");
    }
    if (!(thresholds.min_mean_confidence > 0.0 &&
          thresholds.min_mean_confidence <= 1.0)) {
      throw RangeError("--min-confidence must be in (0, 1]");
    }

    auto records = load_manifest(manifest);
    if (records.empty()) throw EmptyDatasetError("empty manifest");
    fs::create_directories(out_dir);

    // Slides are independent; farm them out and keep reporting order.
    std::vector<std::string> lines(records.size());
    auto work = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        const auto& rec = records[i];
        RasterImage img = load_slide_image(images, rec);
        SlideDecision d = classify_slide(img, *handle, spec, thresholds);
        write_file_atomic(fs::path(out_dir) / (rec.id + ".json"),
                          decision_to_json(rec.id, d));
        std::ostringstream line;
        line << rec.id << '\t' << label_code(d.predicted) << '\t'
             << d.total_patches << " patches";
        lines[i] = line.str();
      }
    };
    if (jobs <= 1 || records.size() <= 1) {
      work(0, records.size());
    } else {
      std::size_t workers = std::min<std::size_t>(jobs, records.size());
      std::size_t chunk = (records.size() + workers - 1) / workers;
      std::vector<std::future<void>> futs;
      for (std::size_t w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk;
        std::size_t hi = std::min(records.size(), lo + chunk);
        if (lo >= hi) break;
        futs.push_back(std::async(std::launch::async, work, lo, hi));
      }
      for (auto& f : futs) f.get();
    }
    for (const auto& line : lines) std::cout << line << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------------
// evaluate

struct EvaluateCmd {
  std::string confusion_path;
  std::string manifest;
  std::string decisions_dir;
  std::string out;
  bool json_stdout = false;
  bool exact_denominators = false;
  long n_total_override = 0;

  int execute() {
    ConfusionMatrix m;
    if (!confusion_path.empty()) {
      m = load_confusion_tsv(confusion_path);
    } else if (!manifest.empty() && !decisions_dir.empty()) {
      auto records = load_manifest(manifest);
      std::vector<std::pair<ClassLabel, ClassLabel>> pairs;
      for (const auto& rec : records) {
        fs::path p = fs::path(decisions_dir) / (rec.id + ".json");
        nlohmann::json j = nlohmann::json::parse(read_file(p));
        ClassLabel predicted = parse_label(j.at("predicted").get<std::string>());
        pairs.emplace_back(predicted, rec.reference_label);
      }
      m = confusion(pairs);
    } else {
      throw RangeError("provide --confusion or --manifest with --decisions");
    }

    auto convention = exact_denominators
                          ? IntervalConvention::ExactDenominator
                          : IntervalConvention::PooledTotal;
    std::optional<long> n_override;
    if (n_total_override > 0) n_override = n_total_override;
    MetricReport rep = report(m, convention, n_override);

    if (json_stdout) {
      std::cout << report_to_json(rep);
    } else {
      std::cout << report_to_text(rep);
    }
    if (!out.empty()) write_file_atomic(out, report_to_json(rep));
    return 0;
  }
};

}  // namespace

int run(std::vector<std::string> args) {
  try {
    args = apply_config_file(std::move(args));

    CLI::App app{"Whole-slide colorectal polyp classification pipeline"};
    app.require_subcommand(1);

    // split
    SplitCmd split_cmd;
    auto* split_app = app.add_subcommand(
        "split", "Assign train/validation tags to a manifest, stratified by class");
    split_app->add_option("--manifest", split_cmd.manifest, "Input manifest TSV")
        ->required();
    split_app->add_option("--out", split_cmd.out, "Output manifest TSV")
        ->required();
    split_app->add_option("--fraction", split_cmd.fraction,
                          "Validation fraction per class")
        ->capture_default_str();
    split_app->add_option("--seed", split_cmd.seed, "Random seed")
        ->capture_default_str();

    // stats
    StatsCmd stats_cmd;
    auto* stats_app = app.add_subcommand(
        "stats", "Compute normalization stats, color PCA and conform target");
    stats_app->add_option("--manifest", stats_cmd.manifest, "Manifest TSV")
        ->required();
    stats_app->add_option("--images", stats_cmd.images, "Image root directory")
        ->required();
    stats_app->add_option("--out", stats_cmd.out, "Output stats JSON")
        ->required();
    stats_app
        ->add_option("--subset-fraction", stats_cmd.subset_fraction,
                     "Fraction of images for the conform-target median")
        ->capture_default_str();
    stats_app
        ->add_option("--pca-fraction", stats_cmd.pca_fraction,
                     "Fraction of images for the color PCA")
        ->capture_default_str();
    stats_app->add_option("--seed", stats_cmd.seed, "Random seed")
        ->capture_default_str();

    // tile
    TileCmd tile_cmd;
    auto* tile_app =
        app.add_subcommand("tile", "Emit patch origins for one image as TSV");
    tile_app->add_option("--image", tile_cmd.image, "Slide image (P6 pixmap)");
    tile_app->add_option("--width", tile_cmd.width, "Image width if no --image");
    tile_app->add_option("--height", tile_cmd.height,
                         "Image height if no --image");
    tile_cmd.patch.attach(tile_app, /*require_size=*/true);
    tile_app->add_option("--out", tile_cmd.out, "Output TSV (default stdout)");

    // train
    TrainCmd train_cmd;
    auto* train_app = app.add_subcommand(
        "train", "Train the tiny residual network on crop images");
    train_app->add_option("--manifest", train_cmd.manifest, "Slide manifest TSV")
        ->required();
    train_app->add_option("--crops", train_cmd.crops, "Crop manifest TSV")
        ->required();
    train_app->add_option("--images", train_cmd.images, "Image root directory")
        ->required();
    train_app->add_option("--out", train_cmd.out, "Output model checkpoint")
        ->required();
    train_app->add_option("--stats-out", train_cmd.stats_out,
                          "Stats JSON path (default <out>.stats.json)");
    train_app->add_option("--loss-out", train_cmd.loss_out,
                          "Loss history TSV (default <out>.loss.tsv)");
    train_app->add_option("--epochs", train_cmd.sgd.epochs, "Training epochs")
        ->capture_default_str();
    train_app->add_option("--lr", train_cmd.sgd.initial_rate,
                          "Initial learning rate")
        ->capture_default_str();
    train_app
        ->add_option("--decay-factor", train_cmd.sgd.decay_factor,
                     "Learning-rate decay factor")
        ->capture_default_str();
    train_app
        ->add_option("--decay-every", train_cmd.sgd.decay_every,
                     "Epochs between learning-rate decays")
        ->capture_default_str();
    train_app->add_option("--momentum", train_cmd.sgd.momentum, "SGD momentum")
        ->capture_default_str();
    train_app->add_option("--batch-size", train_cmd.sgd.batch_size,
                          "Mini-batch size")
        ->capture_default_str();
    train_app
        ->add_option("--base-channels", train_cmd.base_channels,
                     "Stem channel width of the network")
        ->capture_default_str();
    train_app
        ->add_option("--augment-copies", train_cmd.augment_copies,
                     "Augmented copies added per crop")
        ->capture_default_str();
    train_app
        ->add_option("--jitter-sigma", train_cmd.jitter_sigma,
                     "Stddev of the PCA color jitter")
        ->capture_default_str();
    train_app
        ->add_option("--flip-probability", train_cmd.flip_probability,
                     "Probability of a horizontal flip per augmented copy")
        ->capture_default_str();
    train_app
        ->add_option("--rotation-mode", train_cmd.rotation_mode,
                     "none, random_quarter or all_four")
        ->capture_default_str();
    train_app
        ->add_option("--subset-fraction", train_cmd.subset_fraction,
                     "Fraction of crops for the conform-target median")
        ->capture_default_str();
    train_app
        ->add_option("--pca-fraction", train_cmd.pca_fraction,
                     "Fraction of crops for the color PCA")
        ->capture_default_str();
    train_app->add_option("--seed", train_cmd.seed, "Random seed")
        ->capture_default_str();
    train_app->add_option("--jobs", train_cmd.jobs, "Worker threads")
        ->capture_default_str();

    // infer
    InferCmd infer_cmd;
    auto* infer_app = app.add_subcommand(
        "infer", "Classify whole slides by tiling, patch inference and voting");
    infer_app->add_option("--manifest", infer_cmd.manifest, "Slide manifest TSV")
        ->required();
    infer_app->add_option("--images", infer_cmd.images, "Image root directory")
        ->required();
    infer_app->add_option("--out", infer_cmd.out_dir,
                          "Output directory for per-slide JSON decisions")
        ->required();
    infer_app->add_option("--model", infer_cmd.model_path,
                          "Model checkpoint (network classifier)");
    infer_app->add_option("--stats", infer_cmd.stats_path,
                          "Stats JSON accompanying --model");
    infer_app->add_option("--predictions", infer_cmd.predictions_path,
                          "Recorded per-patch predictions TSV");
    infer_app->add_option("--constant", infer_cmd.constant_label,
                          "Constant one-hot classifier for the given label");
    infer_cmd.patch.attach(infer_app, /*require_size=*/false);
    infer_app
        ->add_option("--min-patches", infer_cmd.min_patches,
                     "Minimum supporting patches for a polyp call")
        ->capture_default_str();
    infer_app
        ->add_option("--min-confidence", infer_cmd.min_confidence,
                     "Minimum mean confidence for a polyp call")
        ->capture_default_str();
    infer_app->add_option("--jobs", infer_cmd.jobs, "Worker threads")
        ->capture_default_str();

    // evaluate
    EvaluateCmd eval_cmd;
    auto* eval_app = app.add_subcommand(
        "evaluate", "Metric report with exact binomial confidence intervals");
    eval_app->add_option("--confusion", eval_cmd.confusion_path,
                         "Confusion matrix TSV");
    eval_app->add_option("--manifest", eval_cmd.manifest,
                         "Manifest with reference labels");
    eval_app->add_option("--decisions", eval_cmd.decisions_dir,
                         "Directory of per-slide decision JSON from infer");
    eval_app->add_option("--out", eval_cmd.out, "Write the JSON report here");
    eval_app->add_flag("--json", eval_cmd.json_stdout,
                       "Print JSON instead of the text table");
    eval_app->add_flag("--exact-denominators", eval_cmd.exact_denominators,
                       "Per-metric interval denominators where they exist");
    eval_app->add_option("--n-total", eval_cmd.n_total_override,
                         "Override the interval denominator N");

    // Accepted everywhere; consumed before parsing.
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file with defaults");
    for (auto* sub : app.get_subcommands({})) {
      sub->add_option("--config", config_path, "JSON config file with defaults");
    }

    std::vector<const char*> argv;
    argv.push_back("polyp");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);  // prints help, returns 0
    } catch (const CLI::ParseError& e) {
      app.exit(e);
      return 2;
    }

    if (split_app->parsed()) return split_cmd.execute();
    if (stats_app->parsed()) return stats_cmd.execute();
    if (tile_app->parsed()) return tile_cmd.execute();
    if (train_app->parsed()) return train_cmd.execute();
    if (infer_app->parsed()) return infer_cmd.execute();
    if (eval_app->parsed()) return eval_cmd.execute();
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace polyp::cli
