// typei: train targets, run Type I attack campaigns, and report on them.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "typei/checkpoint.hpp"
#include "typei/dataset.hpp"
#include "typei/error.hpp"
#include "typei/experiment.hpp"
#include "typei/image_io.hpp"
#include "typei/report.hpp"
#include "typei/style_generator.hpp"
#include "typei/vae.hpp"

namespace fs = std::filesystem;
using namespace typei;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

fs::path env_path(const char* name, const char* fallback) {
  const char* v = std::getenv(name);
  return (v && *v) ? fs::path(v) : fs::path(fallback);
}

struct TrainOptions {
  std::string dataset = "mnist";
  fs::path data_dir = env_path("TYPEI_DATA_DIR", "data");
  fs::path out;
  std::size_t epochs = 12;
  std::uint64_t seed = 0;
  std::string model = "vae";
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  std::size_t max_train = 0;
};

struct AttackOptions {
  std::string mode;
  std::string dataset = "mnist";
  fs::path data_dir = env_path("TYPEI_DATA_DIR", "data");
  fs::path ckpt;
  fs::path out;
  std::size_t num_samples = 64;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::size_t grids = 8;
  std::optional<double> lambda0, alpha, epsilon, zeta, xi, eta, l_hat_w;
  std::optional<std::size_t> max_iters;
  std::optional<std::string> norm, scheduler;
};

struct ReportOptions {
  fs::path dir;
  std::string format = "table";
  bool plots = true;
};

// A directory target (existing directory or trailing separator) gets a
// default file name.
fs::path checkpoint_target(const fs::path& out, const std::string& dataset, const std::string& model) {
  const std::string s = out.string();
  if (fs::is_directory(out) || (!s.empty() && (s.back() == '/' || s.back() == fs::path::preferred_separator))) {
    return out / (model == "style" ? std::string("style-generator.ckpt") : dataset + "-vae.ckpt");
  }
  return out;
}

int run_train(const TrainOptions& o) {
  if (o.model != "vae" && o.model != "style") throw ConfigError("unknown model '" + o.model + "'");
  if (o.out.empty()) throw ConfigError("--out is required");
  const fs::path target = checkpoint_target(o.out, o.dataset, o.model);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());

  if (o.model == "style") {
    // The toy generator is used at its seeded initialization.
    StyleGenerator gen(StyleGeneratorConfig{}, o.seed);
    save_checkpoint(gen, target);
    std::cout << "wrote style generator checkpoint " << target.string() << "\n";
    return 0;
  }

  auto profile = DatasetProfile::by_name(o.dataset, o.data_dir);
  profile.max_train = o.max_train;
  if (!fs::is_directory(profile.source_path)) {
    throw IngestionError("dataset directory " + profile.source_path.string() + " does not exist");
  }
  VaeConfig config = o.dataset == "mnist" ? VaeConfig::mnist() : VaeConfig::svhn();
  config.input_shape = profile.image_shape;
  VaeTrainConfig tc;
  tc.epochs = o.epochs;
  tc.batch_size = o.batch_size;
  tc.learning_rate = o.learning_rate;
  tc.seed = o.seed;

  const auto train = load_dataset(profile, Split::train);
  const auto test = load_dataset(profile, Split::test);
  std::cout << "training " << o.dataset << " VAE on " << train.size() << " images, " << test.size()
            << " held out\n";
  fs::path log_path = target;
  log_path += ".log";
  std::ofstream log(log_path, std::ios::trunc);
  const auto t0 = std::chrono::steady_clock::now();
  const auto on_epoch = [&](const EpochLog& e) {
    char line[128];
    std::snprintf(line, sizeof(line), "epoch %zu loss %.6f test_rmsd %.6f", e.epoch, e.train_loss, e.test_rmsd);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << line << "  (" << static_cast<int>(secs) << " s)" << std::endl;
    log << line << "\n";
  };
  const auto result = train_vae(train, test, config, tc, target, on_epoch);
  char final_line[64];
  std::snprintf(final_line, sizeof(final_line), "final test RMSD %.6f", result.test_rmsd);
  std::cout << final_line << "\nwrote " << target.string() << "\n";
  log << final_line << "\n";
  return 0;
}

ExperimentConfig experiment_from(const AttackOptions& o) {
  ExperimentConfig c;
  c.attack = campaign_preset(parse_attack_mode(o.mode), o.dataset);
  auto& a = c.attack;
  if (o.lambda0) a.lambda0 = *o.lambda0;
  if (o.alpha) a.alpha = *o.alpha;
  if (o.epsilon) a.epsilon = *o.epsilon;
  if (o.zeta) a.zeta = *o.zeta;
  if (o.xi) a.xi = *o.xi;
  if (o.eta) a.eta = *o.eta;
  if (o.l_hat_w) a.l_hat_w = *o.l_hat_w;
  if (o.max_iters) a.max_iters = *o.max_iters;
  if (o.norm) a.norm = parse_norm(*o.norm);
  if (o.scheduler) a.scheduler = parse_scheduler(*o.scheduler);
  c.dataset = o.dataset;
  c.data_root = o.data_dir;
  c.checkpoint = o.ckpt;
  c.num_samples = o.num_samples;
  c.seed = o.seed;
  c.jobs = o.jobs;
  c.grids = o.grids;
  const std::string label = a.mode == AttackMode::style_space ? std::string(kStyleDatasetName) : o.dataset;
  c.output_dir = o.out.empty() ? env_path("TYPEI_OUTPUT_ROOT", "runs") / (label + "-" + to_string(a.mode)) : o.out;
  return c;
}

std::string fmt(double v, const char* spec = "%.4f") {
  char buf[32];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

void print_summary(const CampaignSummary& s) {
  std::cout << "dataset " << s.dataset_name << "  mode " << to_string(s.mode) << "  samples " << s.num_samples
            << "\n  Dis_input " << fmt(s.mean_input_distance) << "  Dis_output " << fmt(s.mean_output_distance);
  if (s.mean_dev) std::cout << "  Dev " << fmt(*s.mean_dev, "%.2f") << "%";
  std::cout << "  success_rate " << fmt(s.success_rate * 100.0, "%.1f") << "%\n";
}

int run_attack(const AttackOptions& o) {
  const ExperimentConfig config = experiment_from(o);
  const auto t0 = std::chrono::steady_clock::now();
  const auto summary = run_campaign(config, [](std::size_t done, std::size_t total) {
    if (done == total || done % 8 == 0) std::cerr << "  attacked " << done << "/" << total << "\n";
  });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  print_summary(summary);
  std::cout << "  wall time " << fmt(secs, "%.1f") << " s (" << fmt(secs / config.num_samples, "%.3f")
            << " s per sample)\nresults in " << config.output_dir.string() << "\n";
  return 0;
}

int run_report(const ReportOptions& o) {
  const auto loaded = load_results(o.dir);
  const auto& s = loaded.summary;
  if (o.format == "json") {
    std::cout << to_json(s).dump(2) << "\n";
  } else if (o.format == "csv") {
    std::cout << to_csv(s);
  } else if (o.format == "table") {
    std::cout << "  idx   Dis_input  Dis_output       Dev  success  iters\n";
    for (const auto& d : s.per_sample_records) {
      char line[128];
      std::snprintf(line, sizeof(line), "%5zu  %10.4f  %10.4f  %8s  %7s  %5zu\n", d.index, d.input_distance,
                    d.output_distance, d.deviation ? fmt(*d.deviation, "%.2f").c_str() : "-",
                    d.success ? "yes" : "no", d.iterations);
      std::cout << line;
    }
    print_summary(s);
  } else {
    throw ConfigError("unknown report format '" + o.format + "'");
  }
  if (!o.plots) return 0;

  // Plots come from the first record that carries a trajectory.
  for (const auto& r : loaded.records) {
    if (r.trajectory.size() < 2) continue;
    const bool style = r.mode == AttackMode::style_space;
    render_trajectory_plot(r.trajectory, o.dir / "trajectory.png", style);
    std::cerr << "wrote " << (o.dir / "trajectory.png").string() << "\n";
    if (!r.dimension_change_rates.empty()) {
      render_bar_plot(r.dimension_change_rates, o.dir / "dimension_rates.png");
      std::cerr << "wrote " << (o.dir / "dimension_rates.png").string() << "\n";
    }
    break;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Type I attacks against generative models"};
  app.require_subcommand(1);
  app.set_config("--config", "", "experiment file of key = value lines ([attack] / [train] sections or "
                 "attack.<flag> keys); flags override it");

  TrainOptions train;
  auto* t = app.add_subcommand("train", "train a VAE, or write a seeded toy style generator");
  t->add_option("--dataset", train.dataset, "mnist | svhn | celeba")->capture_default_str();
  t->add_option("--data-dir", train.data_dir, "dataset root (env TYPEI_DATA_DIR)")->capture_default_str();
  t->add_option("--out", train.out, "checkpoint file, or directory to place it in")->required();
  t->add_option("--epochs", train.epochs)->capture_default_str();
  t->add_option("--seed", train.seed)->capture_default_str();
  t->add_option("--model", train.model, "vae | style")->capture_default_str();
  t->add_option("--batch-size", train.batch_size)->capture_default_str();
  t->add_option("--lr", train.learning_rate)->capture_default_str();
  t->add_option("--max-train", train.max_train, "cap on training images (0 = all)")->capture_default_str();
  t->fallthrough();

  AttackOptions attack;
  auto* a = app.add_subcommand("attack", "run an attack campaign");
  a->fallthrough();
  a->add_option("--mode", attack.mode, "image_space | latent_space | style_space")->required();
  a->add_option("--ckpt", attack.ckpt, "model checkpoint")->required();
  a->add_option("--dataset", attack.dataset)->capture_default_str();
  a->add_option("--data-dir", attack.data_dir, "dataset root (env TYPEI_DATA_DIR)")->capture_default_str();
  a->add_option("--out", attack.out, "results directory (default $TYPEI_OUTPUT_ROOT/<dataset>-<mode>)");
  a->add_option("-n,--num-samples", attack.num_samples)->capture_default_str();
  a->add_option("--seed", attack.seed)->capture_default_str();
  a->add_option("--jobs", attack.jobs, "worker threads")->capture_default_str();
  a->add_option("--grids", attack.grids, "quad grids for the first K samples")->capture_default_str();
  a->add_option("--lambda0", attack.lambda0);
  a->add_option("--alpha", attack.alpha);
  a->add_option("--epsilon", attack.epsilon);
  a->add_option("--zeta", attack.zeta);
  a->add_option("--xi", attack.xi);
  a->add_option("--eta", attack.eta);
  a->add_option("--l-hat-w", attack.l_hat_w);
  a->add_option("--max-iters", attack.max_iters);
  a->add_option("--norm", attack.norm, "l1 | l2");
  a->add_option("--scheduler", attack.scheduler, "constant | adaptive");

  ReportOptions report;
  auto* r = app.add_subcommand("report", "re-aggregate a results directory, print tables, draw plots");
  r->add_option("dir", report.dir, "results directory")->required();
  r->add_option("--format", report.format, "table | csv | json")->capture_default_str();
  r->add_flag("!--no-plots", report.plots, "skip the trajectory and per-row plots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    if (t->parsed()) return run_train(train);
    if (a->parsed()) return run_attack(attack);
    return run_report(report);
  } catch (const ConfigError& e) {
    std::cerr << "typei: configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "typei: error: " << e.what() << "\n";
    return kExitFailure;
  }
}
