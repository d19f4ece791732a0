#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "wconv/cli.hpp"
#include "wconv/config.hpp"
#include "wconv/experiment.hpp"
#include "wconv/report.hpp"

using namespace wconv;
namespace fs = std::filesystem;

namespace {

const char* const kToy = R"(format = 1
task = denoising
seed = 3
output = out/test

[model]
recipe = mini_dncnn
variant = weighted
depth = 3
width = 4

[density]
coeffs = 0.8

[optimizer]
kind = adam
lr = 0.002

[schedule]
epochs = 2
batch_size = 4

[loss]
kind = mse

[data]
images = 5
image_size = 32
patch_size = 16
patches_per_image = 4
split = 0.6, 0.2, 0.2
)";

ExperimentConfig toy() { return parse_config(kToy); }

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  if (pos == std::string::npos) throw std::logic_error("fixture text not found: " + from);
  return text.replace(pos, from.size(), to);
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wconv_test_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "wconv");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST(Config, ParsesToyConfig) {
  const ExperimentConfig cfg = toy();
  EXPECT_EQ(cfg.task, TaskKind::denoising);
  EXPECT_EQ(cfg.model.recipe, "mini_dncnn");
  EXPECT_EQ(cfg.model.depth, 3U);
  ASSERT_TRUE(cfg.density.has_value());
  EXPECT_EQ(cfg.density->coeffs, (std::vector<double>{0.8}));
  EXPECT_EQ(cfg.optimizer.kind, "adam");
  EXPECT_EQ(cfg.data.split, (std::vector<double>{0.6, 0.2, 0.2}));
  EXPECT_EQ(cfg.fixed_density()->alpha(), (std::vector<double>{0.8, 1.0, 0.8}));
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_THROW(parse_config(replace(kToy, "format = 1", "format = 2")), ConfigError);
  EXPECT_THROW(parse_config(replace(kToy, "depth = 3", "depth = 3\ncolour = red")), ConfigError);
  EXPECT_THROW(parse_config(replace(kToy, "[loss]", "[losses]")), ConfigError);
  EXPECT_THROW(parse_config(replace(kToy, "depth = 3", "depth = three")), ConfigError);
  EXPECT_THROW(parse_config(replace(kToy, "coeffs = 0.8", "coeffs = 0.8, 0.9")), ConfigError);
  EXPECT_THROW(parse_config(replace(kToy, "[density]\ncoeffs = 0.8", "")), ConfigError);
  EXPECT_THROW(parse_config(replace(kToy, "[density]\ncoeffs = 0.8", "[density]\ncoeffs = 0.8\n[sweep]\nalpha1 = 1.0")),
               ConfigError);
  EXPECT_THROW(parse_config(replace(kToy, "split = 0.6, 0.2, 0.2", "split = 0.6, 0.2, 0.3")), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/wconv.ini"), ConfigError);
}

TEST(Config, SweepGridRules) {
  const std::string sweep = replace(kToy, "[density]\ncoeffs = 0.8", "[sweep]\nalpha1 = 0.5:1.5:0.25");
  const ExperimentConfig cfg = parse_config(sweep);
  ASSERT_TRUE(cfg.sweep.has_value());
  EXPECT_EQ(cfg.sweep->points().size(), 5U);
  EXPECT_THROW(parse_config(replace(sweep, "0.5:1.5:0.25", "0.5, 0.75")), ConfigError);
  EXPECT_THROW(parse_config(replace(sweep, "0.5:1.5:0.25", "0.4, 1.0")), ConfigError);
  EXPECT_THROW(parse_config(replace(sweep, "variant = weighted", "variant = standard")), ConfigError);
}

TEST(Config, GridSyntax) {
  EXPECT_EQ(parse_grid("0.5:1.5:0.25"), (std::vector<double>{0.5, 0.75, 1.0, 1.25, 1.5}));
  EXPECT_EQ(parse_grid("0.6:1.5:0.3"), (std::vector<double>{0.6, 0.9, 1.0, 1.2, 1.5}));
  EXPECT_EQ(parse_grid("1, 0.5, 1"), (std::vector<double>{0.5, 1.0}));
  EXPECT_EQ(parse_grid("0.5:1.5:0.05").size(), 21U);
  EXPECT_THROW(parse_grid("1.5:0.5:0.1"), ConfigError);
  EXPECT_THROW(parse_grid("0.5:1.5:0"), ConfigError);
  EXPECT_THROW(parse_grid(""), ConfigError);
}

TEST(Config, SweepPointsOrderFirstAxisSlowest) {
  SweepSpec s;
  s.k = 5;
  s.axes = {{0.1, 1.0}, {0.9, 1.0}};
  const auto pts = s.points();
  ASSERT_EQ(pts.size(), 4U);
  EXPECT_EQ(pts[0], (std::vector<double>{0.1, 0.9}));
  EXPECT_EQ(pts[1], (std::vector<double>{0.1, 1.0}));
  EXPECT_EQ(pts[2], (std::vector<double>{1.0, 0.9}));
}

TEST(Report, AlphaFormatting) {
  EXPECT_EQ(format_alpha({}), "");
  EXPECT_EQ(format_alpha({0.8}), "0.8");
  EXPECT_EQ(format_alpha({0.1, 0.9}), "(0.1, 0.9)");
  EXPECT_EQ(parse_alpha("(0.1, 0.9)"), (std::vector<double>{0.1, 0.9}));
  EXPECT_EQ(parse_alpha("0.75"), (std::vector<double>{0.75}));
}

TEST(Report, CsvRoundTrip) {
  ReportRow a;
  a.method = "weighted";
  a.alpha = {0.5, 0.9};
  a.kernel = 5;
  a.seed = 42;
  a.epochs = 7;
  a.val_loss = 0.1 + 0.2;
  a.psnr = std::numeric_limits<double>::infinity();
  a.ssim = 0.987654321012345;
  a.selected = true;
  a.timestamp = "2026-01-01T00:00:00Z";
  ReportRow b;
  b.method = "standard";
  b.accuracy = 0.5;
  b.f1 = 1.0 / 3.0;
  const MetricReport report{a, b};
  const std::string csv = report_to_csv(report);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "method,kernel,alpha,seed,epochs,val_loss,accuracy,f1,nrmse,psnr,ssim,fsim,uiq,selected,sec_per_epoch,"
            "timestamp");
  EXPECT_NE(csv.find("\"(0.5, 0.9)\""), std::string::npos);
  EXPECT_NE(csv.find(",inf,"), std::string::npos);
  EXPECT_EQ(parse_report(csv), report);
}

TEST(Report, EmitWritesHeaderAndRows) {
  const fs::path dir = temp_dir("emit");
  ReportRow r;
  r.method = "standard";
  emit_report({r}, dir / "r.csv");
  std::ifstream f(dir / "r.csv");
  std::string line;
  int lines = 0;
  while (std::getline(f, line)) ++lines;
  EXPECT_EQ(lines, 2);
  EXPECT_THROW(emit_report({}, dir / "empty.csv"), std::invalid_argument);
  fs::remove_all(dir);
}

TEST(Report, CsvHelpers) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  const auto rows = parse_csv("x,\"a,b\",\"q\"\"q\"\n1,2,3\n");
  ASSERT_EQ(rows.size(), 2U);
  EXPECT_EQ(rows[0][1], "a,b");
  EXPECT_EQ(rows[0][2], "q\"q");
  EXPECT_EQ(drop_csv_columns("a,b,c\n1,2,3\n", {"b"}), "a,c\n1,3\n");
}

TEST(Report, ConfusionImageHasBrightDiagonalOnly) {
  const ConfusionMatrix cm(3, {5, 0, 0, 0, 7, 0, 0, 0, 2});
  const Tensor img = confusion_image(cm);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(img(i, j), i == j ? 1.0 : 0.0);
  }
}

TEST(Training, ZeroEpochsEvaluatesInitialModel) {
  ExperimentConfig cfg = toy();
  cfg.schedule.epochs = 0;
  const auto r = run_training(cfg);
  EXPECT_TRUE(r.history.empty());
  EXPECT_EQ(r.row.epochs, 0U);
  EXPECT_TRUE(std::isfinite(r.row.val_loss));
  ASSERT_TRUE(r.noisy_metrics.has_value());
  // Untrained residual model is the identity, so it scores exactly like the noisy input.
  EXPECT_EQ(r.row.psnr, r.noisy_metrics->psnr);
}

TEST(Training, UniformDensityMatchesStandardLosses) {
  ExperimentConfig w = toy();
  w.density = DensitySpec{3, 1.0, {1.0}};
  ExperimentConfig s = toy();
  s.model.variant = ConvVariant::standard;
  s.density.reset();
  const Dataset data = prepare_dataset(w);
  const auto a = run_training(w, data, w.fixed_density());
  const auto b = run_training(s, data, s.fixed_density());
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
    EXPECT_EQ(a.history[i].val_loss, b.history[i].val_loss);
  }
  EXPECT_EQ(a.row.psnr, b.row.psnr);
}

TEST(Training, OverfitsTenSamples) {
  ExperimentConfig cfg = toy();
  cfg.data.images = 5;
  cfg.data.split = {0.4, 0.2, 0.4};
  cfg.data.patches_per_image = 5;
  cfg.noise.sigma = 0.2;
  cfg.schedule.epochs = 200;
  cfg.schedule.patience = 1000;
  cfg.schedule.batch_size = 10;
  cfg.schedule.cosine = false;
  cfg.optimizer.lr = 0.01;
  cfg.model.depth = 4;
  cfg.model.width = 16;
  const Dataset data = prepare_dataset(cfg);
  ASSERT_EQ(data.train_x.extent(0), 10U);
  const auto r = run_training(cfg, data, cfg.fixed_density());
  ASSERT_EQ(r.history.size(), 200U);
  EXPECT_GT(r.history.front().train_loss, 0.01);
  EXPECT_LT(r.history.back().train_loss, 0.01);
}

TEST(Training, ClassificationSmokeRun) {
  ExperimentConfig cfg = parse_config(R"(format = 1
task = classification
seed = 2
[model]
recipe = mini_vgg
variant = weighted
widths = 4, 4, 8
[density]
coeffs = 0.8
[schedule]
epochs = 1
batch_size = 16
[data]
classes = 3
train_per_class = 10
test_per_class = 5
)");
  const auto r = run_training(cfg);
  ASSERT_TRUE(r.confusion.has_value());
  EXPECT_EQ(r.confusion->total(), 15U);
  EXPECT_GE(r.row.accuracy, 0.0);
  EXPECT_LE(r.row.accuracy, 1.0);
  EXPECT_TRUE(std::isnan(r.row.psnr));
}

TEST(Sweep, SingleUniformPointEqualsStandardRun) {
  ExperimentConfig cfg = parse_config(replace(kToy, "[density]\ncoeffs = 0.8", "[sweep]\nalpha1 = 1.0"));
  const MetricReport rows = sweep_alpha(cfg);
  ASSERT_EQ(rows.size(), 1U);
  EXPECT_TRUE(rows[0].selected);
  ExperimentConfig s = toy();
  s.model.variant = ConvVariant::standard;
  s.density.reset();
  const auto std_run = run_training(s);
  EXPECT_EQ(rows[0].val_loss, std_run.row.val_loss);
  EXPECT_EQ(rows[0].psnr, std_run.row.psnr);
}

TEST(Sweep, SelectsMinimumValidationLoss) {
  ExperimentConfig cfg =
      parse_config(replace(kToy, "[density]\ncoeffs = 0.8", "[sweep]\nalpha1 = 0.5, 0.75, 1.0, 1.25, 1.5"));
  const MetricReport rows = sweep_alpha(cfg);
  ASSERT_EQ(rows.size(), 5U);
  std::size_t selected = 0, count = 0;
  double uniform_loss = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].selected) {
      selected = i;
      ++count;
    }
    if (rows[i].alpha == std::vector<double>{1.0}) uniform_loss = rows[i].val_loss;
  }
  ASSERT_EQ(count, 1U);
  for (const auto& r : rows) EXPECT_LE(rows[selected].val_loss, r.val_loss);
  EXPECT_LE(rows[selected].val_loss, uniform_loss);
}

TEST(Sweep, FiveByFiveRowsCarryTupleAlphas) {
  std::string text = replace(kToy, "[density]\ncoeffs = 0.8", "[sweep]\nalpha1 = 0.1, 1.0\nalpha2 = 0.9, 1.0");
  text = replace(text, "variant = weighted", "variant = weighted\nkernel = 5");
  text = replace(text, "epochs = 2", "epochs = 1");
  const MetricReport rows = sweep_alpha(parse_config(text));
  ASSERT_EQ(rows.size(), 4U);
  EXPECT_EQ(format_alpha(rows[0].alpha), "(0.1, 0.9)");
  EXPECT_EQ(rows[0].kernel, 5U);
  EXPECT_NE(report_to_csv(rows).find("\"(0.1, 0.9)\""), std::string::npos);
  EXPECT_THROW(parse_config(replace(text, "alpha1 = 0.1, 1.0", "alpha1 = 0.01, 1.0")), ConfigError);
}

TEST(Cli, ExitCodes) {
  std::string out, err;
  EXPECT_EQ(cli({}, &out, &err), kExitConfig);
  EXPECT_EQ(cli({"frobnicate"}, &out, &err), kExitConfig);
  EXPECT_EQ(cli({"train", "--config", "/nonexistent.ini"}, &out, &err), kExitConfig);
  EXPECT_EQ(cli({"--help"}, &out, &err), kExitOk);
  EXPECT_NE(out.find("sweep"), std::string::npos);

  const fs::path dir = temp_dir("cli");
  {
    std::ofstream f(dir / "bad.ini");
    f << replace(kToy, "depth = 3", "depth = 1");
  }
  EXPECT_EQ(cli({"train", "--config", (dir / "bad.ini").string()}, &out, &err), kExitConfig);
  EXPECT_NE(err.find("config error"), std::string::npos);
  {
    std::ofstream f(dir / "missing_data.ini");
    f << replace(kToy, "[data]\n", "[data]\nsource = ppm\nimage_dir = nowhere\n");
  }
  EXPECT_EQ(cli({"train", "--config", (dir / "missing_data.ini").string(), "--out", (dir / "o").string()}, &out, &err),
            kExitRuntime);
  fs::remove_all(dir);
}

TEST(Cli, SelftestPasses) {
  std::string out;
  EXPECT_EQ(cli({"selftest"}, &out), kExitOk);
  EXPECT_EQ(out.find("FAIL"), std::string::npos);
}

TEST(Cli, MetricsOnIdenticalImages) {
  const fs::path dir = temp_dir("metrics");
  Rng rng(1);
  Tensor img({3, 24, 24});
  for (double& v : img.data()) v = static_cast<double>(rng.below(256)) / 255.0;
  save_ppm(dir / "a.ppm", img);
  std::string out;
  ASSERT_EQ(cli({"metrics", (dir / "a.ppm").string(), (dir / "a.ppm").string()}, &out), kExitOk);
  const auto rows = parse_csv(out);
  ASSERT_EQ(rows.size(), 2U);
  EXPECT_EQ(rows[1][0], "a.ppm");
  EXPECT_EQ(rows[1][1], "0");
  EXPECT_EQ(rows[1][2], "inf");
  EXPECT_EQ(rows[1][3], "1");
  fs::remove_all(dir);
}

TEST(Cli, TrainAndSweepWriteOutputs) {
  const fs::path dir = temp_dir("run");
  {
    std::ofstream f(dir / "train.ini");
    f << kToy;
    std::ofstream g(dir / "sweep.ini");
    g << replace(kToy, "[density]\ncoeffs = 0.8", "[sweep]\nalpha1 = 0.5, 1.0, 1.5");
  }
  std::string out, err;
  ASSERT_EQ(cli({"train", "--config", (dir / "train.ini").string(), "--out", (dir / "t").string()}, &out, &err),
            kExitOk)
      << err;
  EXPECT_TRUE(fs::exists(dir / "t" / "report.csv"));
  EXPECT_TRUE(fs::exists(dir / "t" / "history.csv"));
  EXPECT_TRUE(fs::exists(dir / "t" / "model" / "model.manifest"));
  ASSERT_EQ(cli({"sweep", "--config", (dir / "sweep.ini").string(), "--out", (dir / "s").string()}, &out, &err),
            kExitOk)
      << err;
  EXPECT_EQ(load_report(dir / "s" / "sweep.csv").size(), 3U);
  EXPECT_EQ(cli({"sweep", "--config", (dir / "train.ini").string()}, &out, &err), kExitConfig);
  fs::remove_all(dir);
}
