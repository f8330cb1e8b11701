#pragma once

// Run artifacts: metrics and ROC CSVs, graph stats, the run manifest and
// content hashes of inputs.

#include "config.hpp"
#include "hgraph.hpp"
#include "metrics.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace heterosgt::report {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// SHA-1 of "blob <size>\0" + content, as git computes object ids.
inline std::string git_blob_sha1(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), content.data(), content.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw ReportError("SHA-1 computation failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ReportError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string file_sha1(const std::filesystem::path& path) { return git_blob_sha1(read_file(path)); }

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return config::format_double(x);
}

inline std::string format_auc(const std::optional<double>& auc) { return auc ? format_number(*auc) : "nan"; }

struct MetricsRow {
  std::size_t round = 1;
  std::string split;
  metrics::Metrics metrics;
};

inline constexpr const char* kMetricsHeader = "round,split,acc,m_pre,m_rec,m_f1,auc";

inline void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  os << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    os << r.round << ',' << r.split << ',' << format_number(m.accuracy) << ',' << format_number(m.macro_precision)
       << ',' << format_number(m.macro_recall) << ',' << format_number(m.macro_f1) << ',' << format_auc(m.auc)
       << '\n';
  }
}

/// First row is threshold inf at (0, 0).
inline void write_roc_csv(std::ostream& os, const std::vector<metrics::RocPoint>& roc) {
  os << "threshold,fpr,tpr\n";
  for (const auto& p : roc)
    os << format_number(p.threshold) << ',' << format_number(p.fpr) << ',' << format_number(p.tpr) << '\n';
}

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for a single value
};

inline MeanSd mean_sd(const std::vector<double>& xs) {
  if (xs.empty()) return {std::nan(""), std::nan("")};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

/// Per-metric mean and sd over rounds.
struct Summary {
  std::size_t rounds = 0;
  MeanSd acc, m_pre, m_rec, m_f1, auc;
};

inline Summary summarize(const std::vector<metrics::Metrics>& runs) {
  std::vector<double> acc, pre, rec, f1, auc;
  for (const auto& m : runs) {
    acc.push_back(m.accuracy);
    pre.push_back(m.macro_precision);
    rec.push_back(m.macro_recall);
    f1.push_back(m.macro_f1);
    auc.push_back(m.auc.value_or(std::nan("")));
  }
  return {runs.size(), mean_sd(acc), mean_sd(pre), mean_sd(rec), mean_sd(f1), mean_sd(auc)};
}

inline std::string format_mean_sd(const MeanSd& v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << v.mean << " +- " << v.sd;
  return out.str();
}

inline constexpr const char* kSummaryColumns = "acc,acc_sd,m_pre,m_pre_sd,m_rec,m_rec_sd,m_f1,m_f1_sd,auc,auc_sd";

inline std::string summary_fields(const Summary& s) {
  std::string out;
  for (const MeanSd* v : {&s.acc, &s.m_pre, &s.m_rec, &s.m_f1, &s.auc}) {
    if (!out.empty()) out += ',';
    out += format_number(v->mean) + ',' + format_number(v->sd);
  }
  return out;
}

/// Resolved config followed by run keys; the result parses as a config file.
inline std::string manifest(const trainer::TrainConfig& cfg, const config::KeyValues& run) {
  std::string out = "# run manifest\n" + config::format(cfg);
  out += config::format(run);
  return out;
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ReportError("cannot write " + path.string());
  os << text;
  if (!os) throw ReportError("failed writing " + path.string());
}

inline std::string graph_stats(const hgraph::HeteroGraph& g) {
  std::ostringstream os;
  hgraph::write_stats(os, g);
  return os.str();
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw ReportError("cannot create output directory " + dir.string());
}

}  // namespace heterosgt::report
