#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "wconv/experiment.hpp"
#include "wconv/loss.hpp"
#include "wconv/optim.hpp"

namespace wconv {

namespace {

// Independent random streams derived from the experiment seed.
enum Stream : std::uint64_t { kInit = 1, kShuffle = 2, kFlip = 3 };

std::uint64_t data_seed(const ExperimentConfig& cfg) { return cfg.data.seed.value_or(cfg.seed); }
std::uint64_t noise_seed(const ExperimentConfig& cfg) { return cfg.noise.seed.value_or(cfg.seed); }

std::vector<std::size_t> first_per_class(const LabeledImageSet& set, std::size_t classes, std::size_t per_class) {
  std::vector<std::size_t> taken(classes, 0), keep;
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto& t = taken[static_cast<std::size_t>(set.fine_labels[i])];
    if (t < per_class) {
      ++t;
      keep.push_back(i);
    }
  }
  return keep;
}

void prepare_classification(const ExperimentConfig& cfg, Dataset& ds) {
  const auto& d = cfg.data;
  const std::uint64_t seed = data_seed(cfg);
  LabeledImageSet pool, test;
  if (d.source == "synthetic") {
    const LabeledImageSet all = make_synthetic_classification(d.train_per_class + d.test_per_class, d.classes, seed);
    const std::size_t n_train = d.train_per_class * d.classes;
    std::vector<std::size_t> a(n_train), b(all.size() - n_train);
    std::iota(a.begin(), a.end(), std::size_t{0});
    std::iota(b.begin(), b.end(), n_train);
    pool = subset(all, a);
    test = subset(all, b);
  } else {
    for (const auto& f : {d.train_file, d.test_file}) {
      if (!std::filesystem::exists(f)) throw TrainingError("data file not found: " + f.string());
    }
    std::vector<int> ids = d.class_ids;
    if (ids.empty()) {
      ids.resize(d.classes);
      std::iota(ids.begin(), ids.end(), 0);
    }
    const auto train_all = select_classes(load_cifar100(d.train_file), ids);
    const auto test_all = select_classes(load_cifar100(d.test_file), ids);
    pool = subset(train_all, first_per_class(train_all, ids.size(), d.train_per_class));
    test = subset(test_all, first_per_class(test_all, ids.size(), d.test_per_class));
  }
  const auto parts = split(pool.size(), {1.0 - d.val_fraction, d.val_fraction, 0.0}, seed);
  if (parts.train.empty() || parts.val.empty()) throw TrainingError("too few items for a train/validation split");
  const auto train = subset(pool, parts.train);
  const auto val = subset(pool, parts.val);

  ds.classes = d.classes;
  ds.channels = 3;
  ds.train_x = train.images;
  ds.train_labels = train.fine_labels;
  ds.val_x = val.images;
  ds.val_labels = val.fine_labels;
  ds.test_x = test.images;
  ds.test_labels = test.fine_labels;
}

std::vector<Tensor> load_corpus(const ExperimentConfig& cfg) {
  const auto& d = cfg.data;
  std::vector<Tensor> images;
  if (d.source == "synthetic") {
    const Rng root(data_seed(cfg));
    for (std::size_t i = 0; i < d.images; ++i) {
      Rng rng = root.split(i);
      images.push_back(make_synthetic_scene(d.image_size, d.image_size, rng));
    }
    return images;
  }
  if (!std::filesystem::is_directory(d.image_dir)) throw TrainingError("image directory not found: " + d.image_dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(d.image_dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".ppm" || ext == ".pgm")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) images.push_back(load_ppm(f));
  if (images.size() < 3) throw TrainingError("need at least 3 images in " + d.image_dir.string());
  return images;
}

Tensor patches_from(const std::vector<Tensor>& images, std::span<const std::size_t> which, const ExperimentConfig& cfg,
                    std::uint64_t seed) {
  std::vector<Tensor> parts;
  for (std::size_t i : which) {
    Rng rng = Rng(seed).split(i);
    parts.push_back(extract_random_patches(images[i], cfg.data.patch_size, cfg.data.patches_per_image, rng));
  }
  std::size_t total = 0;
  for (const auto& p : parts) total += p.extent(0);
  Shape shape = parts.front().shape();
  shape[0] = total;
  Tensor out(shape);
  std::size_t row = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < p.extent(0); ++i, ++row) {
      auto src = p.slice_data(i);
      std::copy(src.begin(), src.end(), out.slice_data(row).begin());
    }
  }
  return out;
}

void prepare_denoising(const ExperimentConfig& cfg, Dataset& ds) {
  const auto images = load_corpus(cfg);
  const std::size_t channels = images.front().extent(0);
  for (const auto& img : images) {
    if (img.extent(0) != channels) throw TrainingError("corpus mixes grayscale and colour images");
    if (img.extent(1) < cfg.data.patch_size || img.extent(2) < cfg.data.patch_size) {
      throw TrainingError("corpus image smaller than the patch size");
    }
  }
  const auto& f = cfg.data.split;
  const std::uint64_t seed = data_seed(cfg);
  const auto parts = split(images.size(), {f[0], f[1], f[2]}, seed);
  if (parts.train.empty() || parts.val.empty() || parts.test.empty()) {
    throw TrainingError("corpus too small for a train/validation/test split");
  }
  ds.channels = channels;
  ds.train_y = patches_from(images, parts.train, cfg, seed);
  ds.val_y = patches_from(images, parts.val, cfg, seed);
  ds.test_y = patches_from(images, parts.test, cfg, seed);

  const std::uint64_t ns = noise_seed(cfg);
  auto noisy = [&](const Tensor& clean, std::uint64_t stream) {
    return add_gaussian_noise(clean, NoiseConfig{cfg.noise.mu, cfg.noise.sigma, splitmix64(ns + stream)});
  };
  ds.train_x = noisy(ds.train_y, 0);
  ds.val_x = noisy(ds.val_y, 1);
  ds.test_x = noisy(ds.test_y, 2);
}

std::unique_ptr<Optimizer> make_optimizer(const OptimizerSpec& o) {
  if (o.kind == "adam") return std::make_unique<Adam>(AdamConfig{o.lr, o.beta1, o.beta2, o.eps, o.weight_decay});
  return std::make_unique<Sgd>(SgdConfig{o.lr, o.momentum, o.weight_decay});
}

std::vector<int> take_labels(std::span<const int> labels, std::span<const std::size_t> idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(labels[i]);
  return out;
}

double batch_loss(Model& model, const ExperimentConfig& cfg, const Tensor& x, const Tensor& y,
                  std::span<const int> labels, Mode mode, bool backward) {
  const Tensor out = model.forward(x, mode);
  const LossResult r = cfg.task == TaskKind::classification
                           ? cross_entropy_label_smoothing(out, labels, cfg.loss.label_smoothing)
                           : mse_loss(out, y);
  if (backward) model.backward(r.grad);
  return r.value;
}

std::vector<std::size_t> range_indices(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> idx(end - begin);
  std::iota(idx.begin(), idx.end(), begin);
  return idx;
}

Tensor predict(Model& model, const Tensor& x, std::size_t batch_size) {
  const std::size_t n = x.extent(0);
  std::vector<Tensor> outs;
  for (std::size_t b = 0; b < n; b += batch_size) {
    const auto idx = range_indices(b, std::min(n, b + batch_size));
    outs.push_back(model.forward(gather(x, idx), Mode::eval));
  }
  std::size_t total = 0;
  for (const auto& o : outs) total += o.extent(0);
  Shape shape = outs.front().shape();
  shape[0] = total;
  Tensor out(shape);
  std::size_t offset = 0;
  for (const auto& o : outs) {
    std::copy(o.data().begin(), o.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(offset));
    offset += o.size();
  }
  return out;
}

ImageMetrics mean_image_metrics(const Tensor& pred, const Tensor& truth) {
  ImageMetrics acc;
  const std::size_t n = pred.extent(0);
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor p = pred.slice(i), t = truth.slice(i);
    const ImageMetrics m = evaluate_image_metrics(ImagePair{p, t, 1.0});
    acc.nrmse += m.nrmse;
    acc.psnr += m.psnr;
    acc.ssim += m.ssim;
    acc.fsim += m.fsim;
    acc.uiq += m.uiq;
  }
  const double inv = 1.0 / static_cast<double>(n);
  acc.nrmse *= inv;
  acc.psnr *= inv;
  acc.ssim *= inv;
  acc.fsim *= inv;
  acc.uiq *= inv;
  return acc;
}

}  // namespace

Dataset prepare_dataset(const ExperimentConfig& cfg) {
  Dataset ds;
  ds.task = cfg.task;
  if (cfg.task == TaskKind::classification) {
    prepare_classification(cfg, ds);
  } else {
    prepare_denoising(cfg, ds);
  }
  return ds;
}

Model build_model(const ExperimentConfig& cfg, std::size_t classes, std::size_t channels,
                  const std::optional<DensityFunction>& density) {
  Rng rng = Rng(cfg.seed).split(kInit);
  const auto& m = cfg.model;
  const std::optional<DensityFunction> d = m.variant == ConvVariant::weighted ? density : std::nullopt;
  if (cfg.task == TaskKind::classification) {
    VggOptions opts;
    opts.in_channels = channels;
    opts.widths = m.widths;
    opts.kernel = m.kernel;
    return build_mini_vgg(classes, m.variant, d, rng, opts);
  }
  DncnnOptions opts;
  opts.kernel = m.kernel;
  opts.channels = channels;
  return build_mini_dncnn(m.depth, m.width, m.variant, d, rng, opts);
}

double evaluate_loss(Model& model, const ExperimentConfig& cfg, const Tensor& x, const Tensor& y,
                     std::span<const int> labels) {
  const std::size_t n = x.extent(0), bs = cfg.schedule.batch_size;
  double total = 0.0;
  for (std::size_t b = 0; b < n; b += bs) {
    const auto idx = range_indices(b, std::min(n, b + bs));
    const Tensor yb = cfg.task == TaskKind::denoising ? gather(y, idx) : Tensor{};
    const auto lb = cfg.task == TaskKind::classification ? take_labels(labels, idx) : std::vector<int>{};
    total += batch_loss(model, cfg, gather(x, idx), yb, lb, Mode::eval, false) * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(n);
}

TrainingResult run_training(const ExperimentConfig& cfg, const Dataset& data,
                            const std::optional<DensityFunction>& density, const ProgressFn& progress) {
  using clock = std::chrono::steady_clock;
  const bool classify = cfg.task == TaskKind::classification;
  std::optional<DensityFunction> dens = density;
  if (cfg.model.variant == ConvVariant::weighted && !dens) {
    throw ConfigError("weighted training needs a density");
  }

  Model model = build_model(cfg, data.classes, data.channels, dens);

  auto optimizer = make_optimizer(cfg.optimizer);
  EarlyStopping stopper(cfg.schedule.patience);
  TrainingResult result{model, {}, {}, std::nullopt, std::nullopt};
  Model best = model;
  double seconds = 0.0;
  const std::size_t n = data.train_x.extent(0), bs = cfg.schedule.batch_size;
  const Rng shuffle_root = Rng(cfg.seed).split(kShuffle);
  const Rng flip_root = Rng(cfg.seed).split(kFlip);

  for (std::size_t epoch = 0; epoch < cfg.schedule.epochs; ++epoch) {
    const double lr = cfg.schedule.cosine
                          ? cosine_lr(epoch, CosineSchedule{cfg.optimizer.lr, cfg.schedule.epochs, cfg.schedule.min_lr})
                          : cfg.optimizer.lr;
    optimizer->set_learning_rate(lr);

    std::vector<std::size_t> order = range_indices(0, n);
    Rng shuffle = shuffle_root.split(epoch);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    Rng flip = flip_root.split(epoch);

    const auto start = clock::now();
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < n; b += bs) {
      const std::span<const std::size_t> idx(order.data() + b, std::min(n, b + bs) - b);
      Tensor xb = gather(data.train_x, idx);
      double loss = 0.0;
      if (classify) {
        if (cfg.data.hflip) xb = random_hflip(xb, 0.5, flip);
        loss = batch_loss(model, cfg, xb, {}, take_labels(data.train_labels, idx), Mode::train, true);
      } else {
        loss = batch_loss(model, cfg, xb, gather(data.train_y, idx), {}, Mode::train, true);
      }
      if (!std::isfinite(loss)) {
        throw TrainingError(fmt::format("non-finite training loss at epoch {}, batch {} (lr {})", epoch, b / bs, lr));
      }
      optimizer->step(model.parameters());
      loss_sum += loss * static_cast<double>(idx.size());
    }
    const double epoch_seconds = std::chrono::duration<double>(clock::now() - start).count();
    seconds += epoch_seconds;

    const double val = evaluate_loss(model, cfg, data.val_x, data.val_y, data.val_labels);
    if (!std::isfinite(val)) throw TrainingError(fmt::format("non-finite validation loss at epoch {}", epoch));
    result.history.push_back({epoch, lr, loss_sum / static_cast<double>(n), val, epoch_seconds});
    if (stopper.update(val)) best = model;
    if (progress) {
      progress(fmt::format("epoch {:>3}  lr {:.3e}  train {:.6g}  val {:.6g}  {:.2f}s", epoch, lr,
                           loss_sum / static_cast<double>(n), val, epoch_seconds));
    }
    if (stopper.should_stop()) break;
  }

  ReportRow& row = result.row;
  row.method = to_string(cfg.model.variant);
  row.kernel = cfg.model.kernel;
  if (cfg.model.variant == ConvVariant::weighted) row.alpha = dens->free_coeffs();
  row.seed = cfg.seed;
  row.epochs = result.history.size();
  if (result.history.empty()) {
    row.val_loss = evaluate_loss(model, cfg, data.val_x, data.val_y, data.val_labels);
  } else {
    model = std::move(best);
    row.val_loss = stopper.best();
    row.sec_per_epoch = seconds / static_cast<double>(result.history.size());
  }
  row.timestamp = utc_timestamp();

  const Tensor out = predict(model, data.test_x, bs);
  if (classify) {
    ConfusionMatrix cm(data.classes);
    for (std::size_t i = 0; i < out.extent(0); ++i) {
      auto logits = out.slice_data(i);
      const auto best_class = std::max_element(logits.begin(), logits.end()) - logits.begin();
      cm.add(data.test_labels[i], static_cast<int>(best_class));
    }
    row.accuracy = accuracy(cm);
    row.f1 = f1_score(cm);
    result.confusion = cm;
  } else {
    const ImageMetrics m = mean_image_metrics(out, data.test_y);
    row.nrmse = m.nrmse;
    row.psnr = m.psnr;
    row.ssim = m.ssim;
    row.fsim = m.fsim;
    row.uiq = m.uiq;
    result.noisy_metrics = mean_image_metrics(data.test_x, data.test_y);
  }
  result.model = std::move(model);
  return result;
}

TrainingResult run_training(const ExperimentConfig& cfg, const ProgressFn& progress) {
  return run_training(cfg, prepare_dataset(cfg), cfg.fixed_density(), progress);
}

void write_history(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,lr,train_loss,val_loss,seconds\n";
  for (const auto& h : history) {
    out << fmt::format("{},{},{},{},{}\n", h.epoch, h.lr, h.train_loss, h.val_loss, h.seconds);
  }
}

}  // namespace wconv
