#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "wconv/data.hpp"
#include "wconv/report.hpp"

namespace wconv {

namespace {

bool same_real(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

std::string format_real(double v) {
  if (std::isnan(v)) return {};
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

double parse_real(const std::string& s) {
  if (s.empty()) return kMissing;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("malformed number '" + s + "' in report");
  return v;
}

std::string join_row(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += csv_escape(fields[i]);
  }
  return line;
}

}  // namespace

bool ReportRow::operator==(const ReportRow& o) const {
  return method == o.method && kernel == o.kernel && alpha == o.alpha && seed == o.seed && epochs == o.epochs &&
         same_real(val_loss, o.val_loss) && same_real(accuracy, o.accuracy) && same_real(f1, o.f1) &&
         same_real(nrmse, o.nrmse) && same_real(psnr, o.psnr) && same_real(ssim, o.ssim) &&
         same_real(fsim, o.fsim) && same_real(uiq, o.uiq) && selected == o.selected &&
         same_real(sec_per_epoch, o.sec_per_epoch) && timestamp == o.timestamp;
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols{"method", "kernel", "alpha",    "seed", "epochs", "val_loss",
                                             "accuracy", "f1",   "nrmse",    "psnr", "ssim",   "fsim",
                                             "uiq",    "selected", "sec_per_epoch", "timestamp"};
  return cols;
}

std::string format_alpha(const std::vector<double>& alpha) {
  if (alpha.empty()) return {};
  if (alpha.size() == 1) return format_real(alpha[0]);
  std::string s = "(";
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (i) s += ", ";
    s += format_real(alpha[i]);
  }
  return s + ")";
}

std::vector<double> parse_alpha(const std::string& text) {
  std::string t = text;
  if (t.empty()) return {};
  if (t.front() == '(') {
    if (t.back() != ')') throw std::invalid_argument("unbalanced alpha tuple '" + text + "'");
    t = t.substr(1, t.size() - 2);
  }
  std::vector<double> out;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b == std::string::npos) throw std::invalid_argument("empty alpha entry in '" + text + "'");
    out.push_back(parse_real(item.substr(b, e - b + 1)));
  }
  return out;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty()) throw std::invalid_argument("quote inside an unquoted CSV field");
        quoted = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        row.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(row));
        row.clear();
        field_started = false;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (quoted) throw std::invalid_argument("unterminated quoted CSV field");
  if (field_started || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_report(std::ostream& out, const MetricReport& report) {
  out << join_row(report_columns()) << '\n';
  for (const auto& r : report) {
    out << join_row({r.method, std::to_string(r.kernel), format_alpha(r.alpha), std::to_string(r.seed),
                     std::to_string(r.epochs), format_real(r.val_loss), format_real(r.accuracy), format_real(r.f1),
                     format_real(r.nrmse), format_real(r.psnr), format_real(r.ssim), format_real(r.fsim),
                     format_real(r.uiq), r.selected ? "1" : "0", format_real(r.sec_per_epoch), r.timestamp})
        << '\n';
  }
}

std::string report_to_csv(const MetricReport& report) {
  std::ostringstream os;
  write_report(os, report);
  return os.str();
}

void emit_report(const MetricReport& report, const std::filesystem::path& path) {
  if (report.empty()) throw std::invalid_argument("refusing to write an empty report");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_report(out, report);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

MetricReport parse_report(const std::string& csv) {
  const auto rows = parse_csv(csv);
  if (rows.empty() || rows[0] != report_columns()) throw std::invalid_argument("report header does not match");
  MetricReport report;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != report_columns().size()) {
      throw std::invalid_argument(fmt::format("report row {} has {} fields", i, f.size()));
    }
    ReportRow r;
    r.method = f[0];
    r.kernel = std::stoul(f[1]);
    r.alpha = parse_alpha(f[2]);
    r.seed = std::stoull(f[3]);
    r.epochs = std::stoul(f[4]);
    r.val_loss = parse_real(f[5]);
    r.accuracy = parse_real(f[6]);
    r.f1 = parse_real(f[7]);
    r.nrmse = parse_real(f[8]);
    r.psnr = parse_real(f[9]);
    r.ssim = parse_real(f[10]);
    r.fsim = parse_real(f[11]);
    r.uiq = parse_real(f[12]);
    if (f[13] != "0" && f[13] != "1") throw std::invalid_argument("selected must be 0 or 1");
    r.selected = f[13] == "1";
    r.sec_per_epoch = parse_real(f[14]);
    r.timestamp = f[15];
    report.push_back(std::move(r));
  }
  return report;
}

MetricReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_report(ss.str());
}

std::string drop_csv_columns(const std::string& csv, const std::vector<std::string>& columns) {
  const auto rows = parse_csv(csv);
  if (rows.empty()) return {};
  std::vector<bool> keep(rows[0].size(), true);
  for (std::size_t j = 0; j < rows[0].size(); ++j) {
    keep[j] = std::find(columns.begin(), columns.end(), rows[0][j]) == columns.end();
  }
  std::string out;
  for (const auto& row : rows) {
    std::vector<std::string> kept;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j >= keep.size() || keep[j]) kept.push_back(row[j]);
    }
    out += join_row(kept) + '\n';
  }
  return out;
}

Tensor confusion_image(const ConfusionMatrix& cm) {
  const std::size_t n = cm.classes();
  Tensor img({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t row_max = 0;
    for (std::size_t j = 0; j < n; ++j) row_max = std::max(row_max, cm(i, j));
    if (row_max == 0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      img(i, j) = static_cast<double>(cm(i, j)) / static_cast<double>(row_max);
    }
  }
  return img;
}

void render_confusion(const ConfusionMatrix& cm, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  save_ppm(path, confusion_image(cm));
}

std::string utc_timestamp() {
  const auto now = std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(now)));
}

}  // namespace wconv
