#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "typei/attack_types.hpp"
#include "typei/tensor.hpp"

namespace typei {

// Root-mean-squared per-element deviation.
double rmsd(std::span<const double> a, std::span<const double> b);
double rmsd(const Image& a, const Image& b);

// Percentage deviation (1/n) * ||(w - w_ori) / w_ori||_2 * 100 with
// elementwise division; n is the element count of w_ori.
double deviation(const StyleVector& w, const StyleVector& w_ori);

// Per layer row: ||w_l - w_ori,l||_2 / ||w_ori,l||_2 * 100.
std::vector<double> dimension_change_rates(const StyleVector& w, const StyleVector& w_ori);

// Smallest |w_ori| entry accepted as a relative-change reference.
inline constexpr double kDegenerateReference = 1e-12;

struct SampleDigest {
  std::size_t index = 0;
  double input_distance = 0.0;
  double output_distance = 0.0;
  std::optional<double> deviation;
  bool success = false;
  std::size_t iterations = 0;
  double final_lambda = 0.0;

  friend bool operator==(const SampleDigest&, const SampleDigest&) = default;
};

SampleDigest digest(const AttackResult& result, std::size_t index);

struct CampaignSummary {
  std::string dataset_name;
  AttackMode mode = AttackMode::image_space;
  std::size_t num_samples = 0;
  double mean_input_distance = 0.0;
  double mean_output_distance = 0.0;
  std::optional<double> mean_dev;
  double success_rate = 0.0;
  bool successes_only = false;
  std::vector<SampleDigest> per_sample_records;

  friend bool operator==(const CampaignSummary&, const CampaignSummary&) = default;
};

// Means run over every record unless `successes_only` is set (then over the
// successful ones; means are 0 when there are none). success_rate always
// counts all records.
CampaignSummary aggregate(std::span<const SampleDigest> records, const std::string& dataset_name,
                          AttackMode mode, bool successes_only = false);
CampaignSummary aggregate(std::span<const AttackResult> results, const std::string& dataset_name,
                          AttackMode mode, bool successes_only = false);

}  // namespace typei
