#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "wconv/cli.hpp"
#include "wconv/conv.hpp"
#include "wconv/experiment.hpp"
#include "wconv/tensor_io.hpp"

namespace wconv {

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

ExperimentConfig resolve_config(const CommonOptions& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.output = o.out;
  return cfg;
}

std::string metric_field(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

int cmd_train(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = resolve_config(o);
  if (cfg.sweep) throw ConfigError("config has a [sweep] section; use the sweep command");
  auto result = run_training(cfg, [&](const std::string& line) { err << line << '\n'; });
  fs::create_directories(cfg.output);
  emit_report({result.row}, cfg.output / "report.csv");
  write_history(result.history, cfg.output / "history.csv");
  save_checkpoint(result.model, cfg.output / "model");
  if (result.confusion) render_confusion(*result.confusion, cfg.output / "confusion.ppm");
  write_report(out, {result.row});
  if (result.noisy_metrics) {
    err << fmt::format("noisy input: psnr {} ssim {}\n", metric_field(result.noisy_metrics->psnr),
                       metric_field(result.noisy_metrics->ssim));
  }
  return kExitOk;
}

int cmd_sweep(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = resolve_config(o);
  if (!cfg.sweep) throw ConfigError("config has no [sweep] section");
  const MetricReport report = sweep_alpha(cfg, [&](const std::string& line) { err << line << '\n'; });
  emit_report(report, cfg.output / "sweep.csv");
  write_report(out, report);
  return kExitOk;
}

int cmd_bench(const std::vector<std::size_t>& sizes, std::size_t channels, std::size_t filters, std::size_t kernel,
              std::size_t reps, const std::string& out_dir, std::ostream& out) {
  std::ostringstream csv;
  csv << "n,channels,filters,kernel,reps,standard_seconds,weighted_seconds,density_seconds,ratio,component_ratio\n";
  for (std::size_t n : sizes) {
    const OverheadTiming t = overhead_benchmark(n, channels, filters, kernel, reps);
    csv << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", n, channels, filters, kernel, reps, t.standard_seconds,
                       t.weighted_seconds, t.density_seconds, t.ratio(), t.component_ratio());
  }
  out << csv.str();
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream f(fs::path(out_dir) / "bench.csv");
    f << csv.str();
  }
  return kExitOk;
}

std::vector<std::pair<fs::path, fs::path>> image_pairs(const fs::path& a, const fs::path& b) {
  if (fs::is_directory(a) != fs::is_directory(b)) throw ConfigError("metrics needs two files or two directories");
  if (!fs::is_directory(a)) return {{a, b}};
  std::vector<std::pair<fs::path, fs::path>> pairs;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto ext = entry.path().extension();
    if (!entry.is_regular_file() || (ext != ".ppm" && ext != ".pgm")) continue;
    const fs::path other = b / entry.path().filename();
    if (fs::exists(other)) pairs.emplace_back(entry.path(), other);
  }
  std::sort(pairs.begin(), pairs.end());
  if (pairs.empty()) throw ConfigError("no matching image files in " + a.string() + " and " + b.string());
  return pairs;
}

int cmd_metrics(const std::string& prediction, const std::string& truth, double range, const std::string& out_dir,
                std::ostream& out) {
  std::ostringstream csv;
  csv << "file,nrmse,psnr,ssim,fsim,uiq\n";
  for (const auto& [p, t] : image_pairs(prediction, truth)) {
    const Tensor a = load_ppm(p), b = load_ppm(t);
    const ImageMetrics m = evaluate_image_metrics({a, b, range});
    csv << fmt::format("{},{},{},{},{},{}\n", csv_escape(p.filename().string()), metric_field(m.nrmse),
                       metric_field(m.psnr), metric_field(m.ssim), metric_field(m.fsim), metric_field(m.uiq));
  }
  out << csv.str();
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream f(fs::path(out_dir) / "metrics.csv");
    f << csv.str();
  }
  return kExitOk;
}

int cmd_selftest(std::uint64_t seed, std::ostream& out) {
  bool ok = true;
  for (const auto& c : run_selftest(seed)) {
    out << (c.passed ? "PASS  " : "FAIL  ") << c.name;
    if (!c.passed) out << "  (" << c.detail << ")";
    out << '\n';
    ok = ok && c.passed;
  }
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Weighted convolution experiments: training, alpha sweeps, overhead benchmark and image metrics",
               "wconv"};
  app.require_subcommand(1);

  CommonOptions train_opts, sweep_opts;
  auto add_common = [](CLI::App* sub, CommonOptions& o) {
    sub->add_option("--config", o.config, "Experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Override the config seed");
    sub->add_option("--out", o.out, "Override the output directory");
  };
  CLI::App* train = app.add_subcommand("train", "Train one model from a config");
  add_common(train, train_opts);
  CLI::App* sweep = app.add_subcommand("sweep", "Train one model per alpha grid point");
  add_common(sweep, sweep_opts);

  std::vector<std::size_t> sizes{32, 256};
  std::size_t channels = 16, filters = 16, kernel = 3, reps = 50;
  std::string bench_out;
  std::optional<std::uint64_t> bench_seed;
  CLI::App* bench = app.add_subcommand("bench", "Time standard against weighted forward convolution");
  bench->add_option("--size", sizes, "Square input sizes")->capture_default_str();
  bench->add_option("--channels", channels)->capture_default_str();
  bench->add_option("--filters", filters)->capture_default_str();
  bench->add_option("--kernel", kernel)->capture_default_str();
  bench->add_option("--reps", reps, "Timed repetitions (at least 10)")->capture_default_str();
  bench->add_option("--seed", bench_seed);
  bench->add_option("--out", bench_out, "Also write bench.csv here");

  std::string pred_path, truth_path, metrics_out;
  double range = 1.0;
  std::optional<std::uint64_t> metrics_seed;
  CLI::App* metrics = app.add_subcommand("metrics", "Compare images (P5/P6 files or directories of them)");
  metrics->add_option("prediction", pred_path)->required()->check(CLI::ExistingPath);
  metrics->add_option("truth", truth_path)->required()->check(CLI::ExistingPath);
  metrics->add_option("--range", range, "Dynamic range of the pixel values")->capture_default_str();
  metrics->add_option("--seed", metrics_seed);
  metrics->add_option("--out", metrics_out, "Also write metrics.csv here");

  std::uint64_t selftest_seed = 0;
  std::string selftest_out;
  CLI::App* selftest = app.add_subcommand("selftest", "Run the built-in invariant checks");
  selftest->add_option("--seed", selftest_seed)->capture_default_str();
  selftest->add_option("--out", selftest_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    if (train->parsed()) return cmd_train(train_opts, out, err);
    if (sweep->parsed()) return cmd_sweep(sweep_opts, out, err);
    if (bench->parsed()) return cmd_bench(sizes, channels, filters, kernel, reps, bench_out, out);
    if (metrics->parsed()) return cmd_metrics(pred_path, truth_path, range, metrics_out, out);
    if (selftest->parsed()) return cmd_selftest(selftest_seed, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace wconv
