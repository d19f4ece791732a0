#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "wconv/config.hpp"

namespace wconv {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"", {"format", "task", "name", "seed", "output"}},
      {"model", {"recipe", "variant", "kernel", "depth", "width", "widths"}},
      {"density", {"central", "coeffs"}},
      {"sweep", {"central", "alpha1", "alpha2", "alpha3", "alpha4", "alpha5", "alpha6", "alpha7",
                 "include_standard"}},
      {"optimizer", {"kind", "lr", "momentum", "weight_decay", "beta1", "beta2", "eps"}},
      {"schedule", {"epochs", "cosine", "min_lr", "patience", "batch_size"}},
      {"loss", {"kind", "label_smoothing"}},
      {"data", {"source", "train_file", "test_file", "image_dir", "class_ids", "classes",
                "train_per_class", "test_per_class", "val_fraction", "hflip", "images", "image_size",
                "patch_size", "patches_per_image", "split", "seed"}},
      {"noise", {"mu", "sigma", "seed"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("'{}': '{}' is not a number", key, v));
  }
  if (used != v.size() || !std::isfinite(d)) throw ConfigError(fmt::format("'{}': '{}' is not a finite number", key, v));
  return d;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& v) {
  if (v.empty() || !std::all_of(v.begin(), v.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw ConfigError(fmt::format("'{}': '{}' is not a non-negative integer", key, v));
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("'{}': '{}' is out of range", key, v));
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(fmt::format("'{}': '{}' is not a boolean", key, v));
}

class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  bool present() const { return tree_ != nullptr; }
  std::optional<std::string> raw(const std::string& key) const {
    if (tree_ == nullptr) return std::nullopt;
    auto v = tree_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return trim(*v);
  }
  std::string qualified(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  void read(const std::string& key, std::string& out) const {
    if (auto v = raw(key)) out = *v;
  }
  void read(const std::string& key, double& out) const {
    if (auto v = raw(key)) out = to_real(qualified(key), *v);
  }
  void read(const std::string& key, std::size_t& out) const {
    if (auto v = raw(key)) out = static_cast<std::size_t>(to_unsigned(qualified(key), *v));
  }
  void read(const std::string& key, bool& out) const {
    if (auto v = raw(key)) out = to_bool(qualified(key), *v);
  }
  void read(const std::string& key, std::optional<std::uint64_t>& out) const {
    if (auto v = raw(key)) out = to_unsigned(qualified(key), *v);
  }
  void read(const std::string& key, std::filesystem::path& out, const std::filesystem::path& base) const {
    if (auto v = raw(key)) {
      std::filesystem::path p(*v);
      out = (p.is_relative() && !base.empty()) ? base / p : p;
    }
  }
  void read_reals(const std::string& key, std::vector<double>& out) const {
    if (auto v = raw(key)) {
      out.clear();
      for (const auto& item : split_list(*v)) out.push_back(to_real(qualified(key), item));
    }
  }
  void read_sizes(const std::string& key, std::vector<std::size_t>& out) const {
    if (auto v = raw(key)) {
      out.clear();
      for (const auto& item : split_list(*v)) out.push_back(static_cast<std::size_t>(to_unsigned(qualified(key), item)));
    }
  }

 private:
  const pt::ptree* tree_;
  std::string name_;
};

void check_known_keys(const pt::ptree& root) {
  const auto& known = known_keys();
  for (const auto& [key, child] : root) {
    if (child.empty() && !(child.data().empty() && known.count(key) && !key.empty())) {
      if (!known.at("").count(key)) throw ConfigError("unknown top-level key '" + key + "'");
      continue;
    }
    auto it = known.find(key);
    if (it == known.end() || key.empty()) throw ConfigError("unknown section [" + key + "]");
    for (const auto& [sub, leaf] : child) {
      if (!leaf.empty()) throw ConfigError("nested keys are not supported in [" + key + "]");
      if (!it->second.count(sub)) throw ConfigError("unknown key '" + sub + "' in [" + key + "]");
    }
  }
}

double round_grid(double v) { return std::round(v * 1e9) / 1e9; }

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) throw ConfigError("empty grid");
  std::vector<double> values;
  if (t.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(t);
    std::string part;
    while (std::getline(ss, part, ':')) parts.push_back(trim(part));
    if (parts.size() != 3) throw ConfigError("grid lattice must be lo:hi:step, got '" + t + "'");
    const double lo = to_real("grid lo", parts[0]);
    const double hi = to_real("grid hi", parts[1]);
    const double step = to_real("grid step", parts[2]);
    if (!(step > 0.0)) throw ConfigError("grid step must be positive");
    if (hi < lo) throw ConfigError("grid hi is below lo");
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    if (n > 10000) throw ConfigError("grid has too many points");
    for (std::size_t i = 0; i <= n; ++i) values.push_back(round_grid(lo + static_cast<double>(i) * step));
    if (lo <= 1.0 && 1.0 <= hi) values.push_back(1.0);
  } else {
    for (const auto& item : split_list(t)) values.push_back(round_grid(to_real("grid value", item)));
    if (values.empty()) throw ConfigError("empty grid");
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

std::vector<std::vector<double>> SweepSpec::points() const {
  std::vector<std::vector<double>> out{{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<double>> next;
    for (const auto& prefix : out) {
      for (double v : axis) {
        auto p = prefix;
        p.push_back(v);
        next.push_back(std::move(p));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::optional<DensityFunction> ExperimentConfig::fixed_density() const {
  if (model.variant != ConvVariant::weighted) return std::nullopt;
  if (!density) return std::nullopt;
  return density->build();
}

void validate_config(const ExperimentConfig& cfg) {
  const auto& m = cfg.model;
  if (m.recipe != "mini_vgg" && m.recipe != "mini_dncnn") {
    throw ConfigError("model.recipe must be mini_vgg or mini_dncnn, got '" + m.recipe + "'");
  }
  if (m.kernel % 2 == 0 || m.kernel == 0) throw ConfigError("model.kernel must be odd");
  if (cfg.task == TaskKind::classification && m.recipe != "mini_vgg") {
    throw ConfigError("classification uses the mini_vgg recipe");
  }
  if (cfg.task == TaskKind::denoising && m.recipe != "mini_dncnn") {
    throw ConfigError("denoising uses the mini_dncnn recipe");
  }
  if (m.recipe == "mini_dncnn" && (m.depth < 2 || m.width == 0)) {
    throw ConfigError("mini_dncnn needs depth >= 2 and width >= 1");
  }
  if (m.recipe == "mini_vgg" && (m.widths.empty() || std::count(m.widths.begin(), m.widths.end(), 0U) > 0)) {
    throw ConfigError("model.widths must list positive block widths");
  }

  if (cfg.density && cfg.sweep) throw ConfigError("give either [density] or [sweep], not both");
  if (m.variant == ConvVariant::weighted && !cfg.density && !cfg.sweep) {
    throw ConfigError("a weighted model needs a [density] or [sweep] section");
  }
  if (cfg.sweep && m.variant != ConvVariant::weighted) throw ConfigError("[sweep] requires variant = weighted");
  if (cfg.density) {
    try {
      (void)cfg.density->build();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("[density]: ") + e.what());
    }
  }
  if (cfg.sweep) {
    const auto& s = *cfg.sweep;
    const std::size_t free = (s.k - 1) / 2;
    if (s.axes.size() != free) {
      throw ConfigError(fmt::format("[sweep] needs alpha1..alpha{} for a {}x{} kernel, got {} axes", free, s.k,
                                    s.k, s.axes.size()));
    }
    for (std::size_t a = 0; a < s.axes.size(); ++a) {
      const auto& axis = s.axes[a];
      if (axis.empty()) throw ConfigError(fmt::format("[sweep] alpha{} is empty", a + 1));
      if (std::find(axis.begin(), axis.end(), 1.0) == axis.end()) {
        throw ConfigError(fmt::format("[sweep] alpha{} must contain the uniform point 1.0", a + 1));
      }
      double lo = 0.0, hi = std::numeric_limits<double>::infinity();
      if (s.k == 3) {
        lo = 0.5, hi = 1.5;
      } else if (s.k == 5) {
        lo = a == 0 ? 0.05 : 0.5;
        hi = a == 0 ? 1.0 : 1.5;
      }
      for (double v : axis) {
        if (!(v > 0.0) || v < lo - 1e-12 || v > hi + 1e-12) {
          throw ConfigError(fmt::format("[sweep] alpha{} value {} outside [{}, {}]", a + 1, v, lo, hi));
        }
      }
    }
    if (!(s.central > 0.0)) throw ConfigError("[sweep] central must be positive");
  }

  const auto& o = cfg.optimizer;
  if (o.kind != "sgd" && o.kind != "adam") throw ConfigError("optimizer.kind must be sgd or adam");
  if (!(o.lr > 0.0)) throw ConfigError("optimizer.lr must be positive");
  if (o.momentum < 0.0 || o.momentum >= 1.0) throw ConfigError("optimizer.momentum must lie in [0, 1)");
  if (o.weight_decay < 0.0) throw ConfigError("optimizer.weight_decay must be non-negative");
  if (o.beta1 < 0.0 || o.beta1 >= 1.0 || o.beta2 < 0.0 || o.beta2 >= 1.0) {
    throw ConfigError("optimizer betas must lie in [0, 1)");
  }
  if (!(o.eps > 0.0)) throw ConfigError("optimizer.eps must be positive");

  const auto& s = cfg.schedule;
  if (s.batch_size == 0) throw ConfigError("schedule.batch_size must be positive");
  if (s.patience == 0) throw ConfigError("schedule.patience must be positive");
  if (s.min_lr < 0.0 || s.min_lr > o.lr) throw ConfigError("schedule.min_lr must lie in [0, lr]");

  const auto& l = cfg.loss;
  if (cfg.task == TaskKind::classification && l.kind != "cross_entropy") {
    throw ConfigError("classification uses loss.kind = cross_entropy");
  }
  if (cfg.task == TaskKind::denoising && l.kind != "mse") throw ConfigError("denoising uses loss.kind = mse");
  if (l.label_smoothing < 0.0 || l.label_smoothing >= 1.0) throw ConfigError("loss.label_smoothing must lie in [0, 1)");

  const auto& d = cfg.data;
  if (cfg.task == TaskKind::classification) {
    if (d.source != "synthetic" && d.source != "cifar100") throw ConfigError("classification data.source must be synthetic or cifar100");
    if (d.classes < 2) throw ConfigError("data.classes must be at least 2");
    if (d.source == "synthetic" && d.classes > 100) throw ConfigError("data.classes must not exceed 100");
    if (d.source == "cifar100" && (d.train_file.empty() || d.test_file.empty())) {
      throw ConfigError("cifar100 data needs train_file and test_file");
    }
    if (!d.class_ids.empty() && d.class_ids.size() != d.classes) {
      throw ConfigError("data.class_ids must list exactly data.classes ids");
    }
    if (d.train_per_class == 0 || d.test_per_class == 0) throw ConfigError("per-class counts must be positive");
    if (!(d.val_fraction > 0.0 && d.val_fraction < 1.0)) throw ConfigError("data.val_fraction must lie in (0, 1)");
  } else {
    if (d.source != "synthetic" && d.source != "ppm") throw ConfigError("denoising data.source must be synthetic or ppm");
    if (d.source == "ppm" && d.image_dir.empty()) throw ConfigError("ppm data needs image_dir");
    if (d.source == "synthetic" && (d.images < 3 || d.image_size < d.patch_size)) {
      throw ConfigError("synthetic scenes need images >= 3 and image_size >= patch_size");
    }
    if (d.patch_size < 11) throw ConfigError("data.patch_size must be at least 11 for SSIM");
    if (d.patches_per_image == 0) throw ConfigError("data.patches_per_image must be positive");
    if (d.split.size() != 3) throw ConfigError("data.split needs three fractions");
    double total = 0.0;
    for (double f : d.split) {
      if (!(f > 0.0)) throw ConfigError("data.split fractions must be positive");
      total += f;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("data.split fractions must sum to 1");
  }
  if (!(cfg.noise.sigma >= 0.0)) throw ConfigError("noise.sigma must be non-negative");
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree root;
  try {
    std::istringstream in(text);
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  check_known_keys(root);

  auto section = [&](const std::string& name) {
    auto child = root.get_child_optional(pt::ptree::path_type(name, '\0'));
    return Section(child ? &*child : nullptr, name);
  };
  const Section top(&root, "");

  const auto format = top.raw("format");
  if (!format) throw ConfigError("missing 'format = 1'");
  if (*format != "1") throw ConfigError("unsupported config format '" + *format + "'");

  ExperimentConfig cfg;
  const auto task = top.raw("task");
  if (!task) throw ConfigError("missing 'task'");
  try {
    cfg.task = parse_task_kind(*task);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  top.read("name", cfg.name);
  if (auto seed = top.raw("seed")) cfg.seed = to_unsigned("seed", *seed);
  top.read("output", cfg.output, {});

  // Task-dependent defaults before the sections override them.
  if (cfg.task == TaskKind::denoising) {
    cfg.model.recipe = "mini_dncnn";
    cfg.optimizer.kind = "adam";
    cfg.optimizer.lr = 1e-3;
    cfg.optimizer.weight_decay = 0.0;
    cfg.schedule.epochs = 20;
    cfg.schedule.batch_size = 16;
    cfg.loss.kind = "mse";
  } else {
    cfg.model.recipe = "mini_vgg";
  }

  const Section model = section("model");
  model.read("recipe", cfg.model.recipe);
  if (auto v = model.raw("variant")) {
    try {
      cfg.model.variant = parse_conv_variant(*v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  model.read("kernel", cfg.model.kernel);
  model.read("depth", cfg.model.depth);
  model.read("width", cfg.model.width);
  model.read_sizes("widths", cfg.model.widths);

  if (const Section dens = section("density"); dens.present()) {
    DensitySpec d;
    d.k = cfg.model.kernel;
    dens.read("central", d.central);
    dens.read_reals("coeffs", d.coeffs);
    cfg.density = d;
  }
  if (const Section sw = section("sweep"); sw.present()) {
    SweepSpec s;
    s.k = cfg.model.kernel;
    sw.read("central", s.central);
    sw.read("include_standard", s.include_standard);
    for (std::size_t a = 1; a <= 7; ++a) {
      auto v = sw.raw("alpha" + std::to_string(a));
      if (!v) break;
      s.axes.push_back(parse_grid(*v));
    }
    cfg.sweep = s;
  }

  const Section opt = section("optimizer");
  opt.read("kind", cfg.optimizer.kind);
  opt.read("lr", cfg.optimizer.lr);
  opt.read("momentum", cfg.optimizer.momentum);
  opt.read("weight_decay", cfg.optimizer.weight_decay);
  opt.read("beta1", cfg.optimizer.beta1);
  opt.read("beta2", cfg.optimizer.beta2);
  opt.read("eps", cfg.optimizer.eps);

  const Section sched = section("schedule");
  sched.read("epochs", cfg.schedule.epochs);
  sched.read("cosine", cfg.schedule.cosine);
  sched.read("min_lr", cfg.schedule.min_lr);
  sched.read("patience", cfg.schedule.patience);
  sched.read("batch_size", cfg.schedule.batch_size);

  const Section loss = section("loss");
  loss.read("kind", cfg.loss.kind);
  loss.read("label_smoothing", cfg.loss.label_smoothing);

  const Section data = section("data");
  data.read("source", cfg.data.source);
  data.read("train_file", cfg.data.train_file, base_dir);
  data.read("test_file", cfg.data.test_file, base_dir);
  data.read("image_dir", cfg.data.image_dir, base_dir);
  if (auto ids = data.raw("class_ids")) {
    for (const auto& item : split_list(*ids)) {
      const auto id = to_unsigned("data.class_ids", item);
      if (id >= 100) throw ConfigError("data.class_ids entries must be below 100");
      cfg.data.class_ids.push_back(static_cast<int>(id));
    }
  }
  data.read("classes", cfg.data.classes);
  if (!cfg.data.class_ids.empty() && !data.raw("classes")) cfg.data.classes = cfg.data.class_ids.size();
  data.read("train_per_class", cfg.data.train_per_class);
  data.read("test_per_class", cfg.data.test_per_class);
  data.read("val_fraction", cfg.data.val_fraction);
  data.read("hflip", cfg.data.hflip);
  data.read("images", cfg.data.images);
  data.read("image_size", cfg.data.image_size);
  data.read("patch_size", cfg.data.patch_size);
  data.read("patches_per_image", cfg.data.patches_per_image);
  data.read_reals("split", cfg.data.split);
  data.read("seed", cfg.data.seed);

  const Section noise = section("noise");
  noise.read("mu", cfg.noise.mu);
  noise.read("sigma", cfg.noise.sigma);
  noise.read("seed", cfg.noise.seed);

  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

}  // namespace wconv
