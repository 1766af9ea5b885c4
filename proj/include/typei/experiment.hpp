#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "typei/attack_types.hpp"
#include "typei/metrics.hpp"

namespace typei {

// One attack campaign: which model, which inputs, which knobs, where to write.
struct ExperimentConfig {
  std::string dataset = "mnist";    // ignored in style mode (inputs come from the mapping network)
  std::filesystem::path data_root;  // dataset lives under <data_root>/<dataset>
  std::filesystem::path checkpoint;
  AttackConfig attack;
  std::size_t num_samples = 64;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  std::size_t grids = 8;  // quad grids rendered for the first `grids` samples
  std::size_t jobs = 1;

  // Everything that can be checked without running an attack: field ranges,
  // checkpoint readability and kind vs. mode, dataset presence.
  void validate() const;
};

// Mode defaults adjusted for a dataset: the norm follows the dataset profile
// and the stopping threshold zeta is raised where the campaign is expected to
// push further than the minimal success threshold.
AttackConfig campaign_preset(AttackMode mode, const std::string& dataset);

// Per-attack seed derived from the campaign seed and the sample position.
std::uint64_t sample_seed(std::uint64_t campaign_seed, std::size_t index);

// Name recorded in reports for style-mode campaigns.
inline constexpr const char* kStyleDatasetName = "style-generator";

// Layout of a results directory.
struct ResultsLayout {
  std::filesystem::path root;
  std::filesystem::path summary_json() const { return root / "summary.json"; }
  std::filesystem::path summary_csv() const { return root / "summary.csv"; }
  std::filesystem::path config_json() const { return root / "config.json"; }
  std::filesystem::path samples_dir() const { return root / "samples"; }
  std::filesystem::path grids_dir() const { return root / "grids"; }
  std::filesystem::path sample_file(std::size_t index) const;
  std::filesystem::path grid_file(std::size_t index) const;
};

// Per-sample record written to samples/NNNN.json: the digest plus the
// trajectory and per-row change rates.
struct SampleRecord {
  SampleDigest digest;
  std::size_t source_index = 0;  // position in the dataset split (VAE modes)
  AttackMode mode = AttackMode::image_space;
  std::vector<TrajectoryPoint> trajectory;
  std::vector<double> dimension_change_rates;
};

nlohmann::json to_json(const SampleRecord& record);
SampleRecord sample_record_from_json(const nlohmann::json& j);
SampleRecord read_sample_record(const std::filesystem::path& path);

nlohmann::json to_json(const ExperimentConfig& config);

// Runs the campaign and writes config.json, summary.{json,csv}, samples/ and
// grids/ under config.output_dir. Failed attacks are data, not errors.
// `on_sample` is invoked once per finished attack (from worker threads).
CampaignSummary run_campaign(const ExperimentConfig& config,
                             const std::function<void(std::size_t done, std::size_t total)>& on_sample = {});

struct LoadedResults {
  CampaignSummary summary;  // re-aggregated from the sample records
  std::vector<SampleRecord> records;
};

// Reads every samples/*.json record and re-aggregates. Throws ReportError
// naming the offending file on corrupt input.
LoadedResults load_results(const std::filesystem::path& results_dir);

}  // namespace typei
