#include "typei/metrics.hpp"

#include <cmath>

#include "typei/error.hpp"

namespace typei {

double rmsd(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvalidInput("rmsd: size mismatch (" + std::to_string(a.size()) + " vs " +
                       std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw InvalidInput("rmsd of empty arrays");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sum / static_cast<double>(a.size()));
}

double rmsd(const Image& a, const Image& b) {
  if (a.shape() != b.shape()) {
    throw InvalidInput("rmsd: image shapes differ (" + a.shape().str() + " vs " + b.shape().str() + ")");
  }
  return rmsd(a.pixels(), b.pixels());
}

namespace {

void require_same_shape(const StyleVector& w, const StyleVector& w_ori) {
  if (w.layers() != w_ori.layers() || w.style_dim() != w_ori.style_dim()) {
    throw InvalidInput("style vectors differ in shape");
  }
  if (w_ori.size() == 0) throw InvalidInput("empty style vector");
}

}  // namespace

double deviation(const StyleVector& w, const StyleVector& w_ori) {
  require_same_shape(w, w_ori);
  const auto a = w.values();
  const auto ref = w_ori.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    if (std::abs(ref[i]) < kDegenerateReference) {
      throw DegenerateReference("deviation undefined: reference style entry " + std::to_string(i) +
                                " is zero");
    }
    const double r = (a[i] - ref[i]) / ref[i];
    sum += r * r;
  }
  // sqrt(sum) / n written as an RMS over sqrt(n): a uniform relative change r
  // then yields exactly 100 * |r| / sqrt(n).
  const double n = static_cast<double>(ref.size());
  return 100.0 * std::sqrt(sum / n) / std::sqrt(n);
}

std::vector<double> dimension_change_rates(const StyleVector& w, const StyleVector& w_ori) {
  require_same_shape(w, w_ori);
  std::vector<double> rates(w_ori.layers());
  for (std::size_t l = 0; l < rates.size(); ++l) {
    const auto row = static_cast<Eigen::Index>(l);
    const double ref = w_ori.rows.row(row).norm();
    if (ref < kDegenerateReference) {
      throw DegenerateReference("change rate undefined: reference row " + std::to_string(l) +
                                " has zero norm");
    }
    rates[l] = (w.rows.row(row) - w_ori.rows.row(row)).norm() / ref * 100.0;
  }
  return rates;
}

SampleDigest digest(const AttackResult& r, std::size_t index) {
  return {index, r.input_distance, r.output_distance, r.deviation,
          r.success, r.iterations_used, r.final_lambda};
}

CampaignSummary aggregate(std::span<const SampleDigest> records, const std::string& dataset_name,
                          AttackMode mode, bool successes_only) {
  if (records.empty()) throw InvalidInput("cannot aggregate an empty result set");
  CampaignSummary s;
  s.dataset_name = dataset_name;
  s.mode = mode;
  s.num_samples = records.size();
  s.successes_only = successes_only;
  s.per_sample_records.assign(records.begin(), records.end());

  std::size_t successes = 0, counted = 0, dev_count = 0;
  double in = 0.0, out = 0.0, dev = 0.0;
  for (const auto& r : records) {
    if (r.success) ++successes;
    if (successes_only && !r.success) continue;
    ++counted;
    in += r.input_distance;
    out += r.output_distance;
    if (r.deviation) {
      dev += *r.deviation;
      ++dev_count;
    }
  }
  if (counted > 0) {
    s.mean_input_distance = in / static_cast<double>(counted);
    s.mean_output_distance = out / static_cast<double>(counted);
  }
  if (mode == AttackMode::style_space) s.mean_dev = dev_count ? dev / static_cast<double>(dev_count) : 0.0;
  s.success_rate = static_cast<double>(successes) / static_cast<double>(records.size());
  return s;
}

CampaignSummary aggregate(std::span<const AttackResult> results, const std::string& dataset_name,
                          AttackMode mode, bool successes_only) {
  std::vector<SampleDigest> records;
  records.reserve(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].mode != mode) throw InvalidInput("cannot aggregate results of mixed attack modes");
    records.push_back(digest(results[i], i));
  }
  return aggregate(records, dataset_name, mode, successes_only);
}

}  // namespace typei
