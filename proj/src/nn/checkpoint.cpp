#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "wconv/model.hpp"
#include "wconv/tensor_io.hpp"

// Checkpoint layout:
//   model.manifest        "key = value" lines: format, task, residual, layers,
//                         and layer.<i> = <Layer::describe()>
//   layer<i>_<name>.wct   one tensor file per parameter and buffer

namespace wconv {

namespace {

constexpr const char* kManifest = "model.manifest";

std::string tensor_file(std::size_t layer, const std::string& name) {
  return fmt::format("layer{}_{}.wct", layer, name);
}

struct LayerSpec {
  std::string kind;
  std::map<std::string, std::string> args;

  const std::string& get(const std::string& key) const {
    auto it = args.find(key);
    if (it == args.end()) throw FormatError("checkpoint layer '" + kind + "' missing '" + key + "'");
    return it->second;
  }
  std::size_t size(const std::string& key) const { return std::stoul(get(key)); }
  double real(const std::string& key) const { return std::stod(get(key)); }
};

LayerSpec parse_layer_spec(const std::string& line) {
  std::istringstream is(line);
  LayerSpec spec;
  is >> spec.kind;
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw FormatError("malformed layer token '" + tok + "'");
    spec.args[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return spec;
}

std::unique_ptr<Layer> make_layer(const LayerSpec& s) {
  if (s.kind == "identity") return std::make_unique<Identity>();
  if (s.kind == "relu") return std::make_unique<Relu>();
  if (s.kind == "softmax") return std::make_unique<Softmax>();
  if (s.kind == "maxpool2d") return std::make_unique<MaxPool2d>(s.size("size"));
  if (s.kind == "dense") return std::make_unique<Dense>(s.size("in"), s.size("out"));
  if (s.kind == "batchnorm2d") {
    return std::make_unique<BatchNorm2d>(s.size("channels"), s.real("momentum"), s.real("eps"));
  }
  if (s.kind == "conv2d") {
    const std::size_t k = s.size("k");
    const ConvVariant variant = parse_conv_variant(s.get("variant"));
    std::optional<DensityFunction> density;
    if (variant == ConvVariant::weighted) {
      std::vector<double> coeffs;
      std::istringstream cs(s.args.count("coeffs") ? s.get("coeffs") : "");
      std::string c;
      while (std::getline(cs, c, ',')) {
        if (!c.empty()) coeffs.push_back(std::stod(c));
      }
      density = build_density(k, s.real("central"), coeffs);
    }
    return std::make_unique<Conv2d>(s.size("in"), s.size("out"), k, variant, density,
                                    ConvGeometry{s.size("pad"), s.size("stride")});
  }
  throw FormatError("unknown layer kind '" + s.kind + "' in checkpoint");
}

}  // namespace

void save_checkpoint(Model& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / kManifest);
  if (!manifest) throw std::runtime_error("cannot write " + (dir / kManifest).string());
  manifest << "format = 1\n";
  manifest << "task = " << to_string(model.task()) << "\n";
  manifest << "residual = " << (model.residual() ? 1 : 0) << "\n";
  manifest << "layers = " << model.size() << "\n";
  for (std::size_t i = 0; i < model.size(); ++i) {
    Layer& l = model.layer(i);
    manifest << "layer." << i << " = " << l.describe() << "\n";
    for (const auto& p : l.parameters()) save_tensor(dir / tensor_file(i, p.name), *p.value);
    for (const auto& b : l.buffers()) save_tensor(dir / tensor_file(i, b.name), *b.value);
  }
  if (!manifest) throw std::runtime_error("failed writing checkpoint manifest");
}

Model load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / kManifest);
  if (!in) throw std::runtime_error("cannot open " + (dir / kManifest).string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw FormatError("malformed manifest line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  auto need = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("checkpoint manifest missing '" + key + "'");
    return it->second;
  };
  if (need("format") != "1") throw FormatError("unsupported checkpoint format " + need("format"));

  Model model(parse_task_kind(need("task")), need("residual") == "1");
  const std::size_t n = std::stoul(need("layers"));
  for (std::size_t i = 0; i < n; ++i) {
    Layer& l = model.add(make_layer(parse_layer_spec(need("layer." + std::to_string(i)))));
    for (const auto& p : l.parameters()) {
      Tensor t = load_tensor(dir / tensor_file(i, p.name));
      require_same_shape(*p.value, t, "checkpoint parameter");
      *p.value = std::move(t);
    }
    for (const auto& b : l.buffers()) {
      Tensor t = load_tensor(dir / tensor_file(i, b.name));
      require_same_shape(*b.value, t, "checkpoint buffer");
      *b.value = std::move(t);
    }
  }
  return model;
}

}  // namespace wconv
