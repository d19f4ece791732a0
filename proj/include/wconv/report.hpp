#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "wconv/metrics.hpp"

namespace wconv {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/**
 * One result row. Metrics that do not apply to the task are NaN and written
 * as empty fields; an infinite PSNR is written as "inf".
 */
struct ReportRow {
  std::string method;          // "standard" or "weighted"
  std::size_t kernel = 3;
  std::vector<double> alpha;   // free coefficients, outermost first; empty for standard
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  double val_loss = kMissing;
  double accuracy = kMissing;
  double f1 = kMissing;
  double nrmse = kMissing;
  double psnr = kMissing;
  double ssim = kMissing;
  double fsim = kMissing;
  double uiq = kMissing;
  bool selected = false;
  double sec_per_epoch = kMissing;
  std::string timestamp;

  bool operator==(const ReportRow& other) const;
};

using MetricReport = std::vector<ReportRow>;

/// Column order of the CSV header.
const std::vector<std::string>& report_columns();

/// "0.8" for one coefficient, "(0.1, 0.9)" for several, "" for none.
std::string format_alpha(const std::vector<double>& alpha);
std::vector<double> parse_alpha(const std::string& text);

void write_report(std::ostream& out, const MetricReport& report);
std::string report_to_csv(const MetricReport& report);
/// Throws std::invalid_argument on an empty report.
void emit_report(const MetricReport& report, const std::filesystem::path& path);

MetricReport parse_report(const std::string& csv);
MetricReport load_report(const std::filesystem::path& path);

/// Minimal RFC 4180 helpers.
std::string csv_escape(const std::string& field);
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

/// Re-serializes CSV text without the named columns.
std::string drop_csv_columns(const std::string& csv, const std::vector<std::string>& columns);

/// n x n grayscale PPM (P5); pixel (i, j) = 255 * count(i, j) / max of row i.
void render_confusion(const ConfusionMatrix& cm, const std::filesystem::path& path);
Tensor confusion_image(const ConfusionMatrix& cm);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace wconv
