// Acceptance checks. Each invocation runs one criterion and prints one
// PASS/FAIL line per check; the exit status is nonzero if any check failed.
//
//   typei_acceptance <criterion>
//
// Criteria: vae_mnist vae_svhn image_mnist image_svhn latent_mnist
// latent_svhn style gradients identities determinism

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "../unit/support.hpp"
#include "typei/attack.hpp"
#include "typei/experiment.hpp"
#include "typei/losses.hpp"
#include "typei/metrics.hpp"
#include "typei/scheduler.hpp"

using namespace typei;
using namespace typei::test;
namespace fs = std::filesystem;

namespace {

// Thresholds.
constexpr double kMnistReconstruction = 0.12;
constexpr double kSvhnReconstruction = 0.06;
constexpr double kTrainSeconds = 15 * 60;
constexpr double kZeta = 0.2;
constexpr double kXi = 0.1;
constexpr double kMinSuccessRate = 0.90;
constexpr double kSecondsPerImage = 10.0;
constexpr std::size_t kCampaignSamples = 64;
constexpr std::size_t kStyleSamples = 32;
constexpr double kStyleSuccessRate = 0.80;
constexpr double kGradientTolerance = 1e-3;
constexpr double kGradientSeconds = 60.0;
// Small enough that a stencil rarely straddles a kink of the piecewise-smooth
// losses (ReLU, l1 terms, hinge) while staying well above rounding noise.
constexpr double kFiniteStep = 1e-6;

int failures = 0;

void check(bool ok, const std::string& label, const std::string& detail) {
  std::cout << (ok ? "PASS  " : "FAIL  ") << label << ": " << detail << std::endl;
  if (!ok) ++failures;
}

std::string fmt(double v, const char* spec = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

fs::path data_root() {
  const char* v = std::getenv("TYPEI_DATA_DIR");
  return (v && *v) ? fs::path(v) : fs::path(TYPEI_SOURCE_DIR) / "data";
}

fs::path work_dir() { return fs::path(TYPEI_WORK_DIR); }

fs::path vae_checkpoint(const std::string& dataset) { return work_dir() / (dataset + "-vae.ckpt"); }

double timed_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(TYPEI_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const auto t0 = std::chrono::steady_clock::now();
  const int status = std::system(cmd.c_str());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (status != 0) {
    std::ifstream in(log);
    std::cout << in.rdbuf() << std::endl;
    throw std::runtime_error("command failed: typei " + args);
  }
  return secs;
}

bool dataset_present(const std::string& dataset, const std::string& label) {
  const fs::path dir = data_root() / dataset;
  if (fs::is_directory(dir)) return true;
  check(false, label, dataset + " data not found at " + dir.string());
  return false;
}

// Reads "final test RMSD <x>" from a training log.
double final_rmsd(const fs::path& log) {
  std::ifstream in(log);
  std::string line;
  double value = NAN;
  while (std::getline(in, line)) {
    const std::string key = "final test RMSD ";
    if (line.rfind(key, 0) == 0) value = std::stod(line.substr(key.size()));
  }
  return value;
}

void vae_reconstruction(const std::string& dataset, double bound) {
  const std::string label = "VAE reconstruction (" + dataset + ")";
  if (!dataset_present(dataset, label)) return;
  fs::create_directories(work_dir());
  const fs::path log = work_dir() / (dataset + "-train.log");
  const double secs = timed_cli("train --dataset " + dataset + " --data-dir " + data_root().string() + " --out " +
                                    vae_checkpoint(dataset).string() + " --seed 0",
                                log);
  const double rmsd = final_rmsd(log);
  check(rmsd <= bound, label, "test RMSD " + fmt(rmsd) + " (bound " + fmt(bound, "%.2f") + ")");
  check(secs <= kTrainSeconds, label + " runtime", fmt(secs, "%.0f") + " s (bound " + fmt(kTrainSeconds, "%.0f") + " s)");
}

LoadedResults campaign(const std::string& dataset, const std::string& mode, std::size_t n, double& secs_per_image,
                       const std::string& label) {
  const fs::path ckpt = mode == "style_space" ? work_dir() / "style-generator.ckpt" : vae_checkpoint(dataset);
  if (!fs::exists(ckpt)) throw std::runtime_error("missing checkpoint " + ckpt.string() + " (run the training criterion first)");
  const fs::path out = work_dir() / (label + "-results");
  const double secs = timed_cli("attack --mode " + mode + " --dataset " + dataset + " --data-dir " + data_root().string() +
                                    " --ckpt " + ckpt.string() + " --out " + out.string() + " -n " + std::to_string(n) +
                                    " --seed 0",
                                work_dir() / (label + ".log"));
  secs_per_image = secs / static_cast<double>(n);
  return load_results(out);
}

void image_space(const std::string& dataset, double min_in, double max_out) {
  const std::string label = "attack on X (" + dataset + ")";
  if (!dataset_present(dataset, label)) return;
  double per_image = 0;
  const auto r = campaign(dataset, "image_space", kCampaignSamples, per_image, "image-" + dataset);
  const auto& s = r.summary;
  std::size_t ok = 0;
  for (const auto& d : s.per_sample_records) ok += check_success(d.input_distance, d.output_distance, kZeta, kXi);
  const double rate = static_cast<double>(ok) / static_cast<double>(s.num_samples);
  check(s.num_samples >= kCampaignSamples, label + " sample count", std::to_string(s.num_samples));
  check(s.mean_input_distance >= min_in, label + " mean Dis_input",
        fmt(s.mean_input_distance) + " (bound >= " + fmt(min_in, "%.2f") + ")");
  check(s.mean_output_distance <= max_out, label + " mean Dis_output",
        fmt(s.mean_output_distance) + " (bound <= " + fmt(max_out, "%.2f") + ")");
  check(rate >= kMinSuccessRate, label + " success rate at (0.2, 0.1)",
        fmt(100 * rate, "%.1f") + "% (bound >= 90%)");
  check(per_image <= kSecondsPerImage, label + " runtime", fmt(per_image, "%.3f") + " s per image (bound 10 s)");
}

void latent_space(const std::string& dataset, double min_in, double max_out) {
  const std::string label = "attack on Z (" + dataset + ")";
  if (!dataset_present(dataset, label)) return;
  double per_image = 0;
  const auto r = campaign(dataset, "latent_space", kCampaignSamples, per_image, "latent-" + dataset);
  const auto& s = r.summary;
  check(s.mean_input_distance >= min_in, label + " mean Dis_input",
        fmt(s.mean_input_distance) + " (bound >= " + fmt(min_in, "%.2f") + ")");
  check(s.mean_output_distance <= max_out, label + " mean Dis_output",
        fmt(s.mean_output_distance) + " (bound <= " + fmt(max_out, "%.2f") + ")");
  std::cout << "      " << fmt(per_image, "%.3f") << " s per image" << std::endl;
}

void style() {
  const std::string label = "style-space attack";
  fs::create_directories(work_dir());
  timed_cli("train --model style --seed 0 --out " + (work_dir() / "style-generator.ckpt").string(),
            work_dir() / "style-train.log");
  double per_image = 0;
  const auto r = campaign("mnist", "style_space", kStyleSamples, per_image, "style");
  std::size_t success = 0, shape = 0, all_rows = 0;
  for (const auto& rec : r.records) {
    success += rec.digest.success;
    // Output loss rises to a peak after the start, then ends below half of it.
    std::size_t peak_at = 0;
    for (std::size_t k = 0; k < rec.trajectory.size(); ++k) {
      if (rec.trajectory[k].output_loss > rec.trajectory[peak_at].output_loss) peak_at = k;
    }
    const double peak = rec.trajectory[peak_at].output_loss;
    shape += peak_at > 0 && peak > rec.trajectory.front().output_loss &&
             rec.trajectory.back().output_loss < 0.5 * peak;
    bool nonzero = !rec.dimension_change_rates.empty();
    for (double v : rec.dimension_change_rates) nonzero &= v > 0.0;
    all_rows += nonzero;
  }
  const double n = static_cast<double>(r.records.size());
  check(r.records.size() == kStyleSamples, label + " sample count", std::to_string(r.records.size()));
  check(success / n >= kStyleSuccessRate, label + " success (hinge 0, RMSD <= xi)",
        std::to_string(success) + "/" + std::to_string(r.records.size()) + " (bound >= 80%)");
  check(shape / n >= kStyleSuccessRate, label + " output loss rises then falls below half its peak",
        std::to_string(shape) + "/" + std::to_string(r.records.size()) + " trajectories (bound >= 80%)");
  check(all_rows == r.records.size(), label + " change rate nonzero in every row",
        std::to_string(all_rows) + "/" + std::to_string(r.records.size()) + " samples");
  if (r.summary.mean_dev) std::cout << "      mean Dev " << fmt(*r.summary.mean_dev, "%.2f") << "%" << std::endl;
}

double worst_image_gradient(std::mt19937_64& rng) {
  const auto vae = tiny_vae();
  const auto shape = vae.input_shape();
  double worst = 0;
  for (int p = 0; p < 10; ++p) {
    const Norm norm = p % 2 ? Norm::l1 : Norm::l2;
    const Image x_ori = random_image(shape, rng), x = random_image(shape, rng, 0.05, 0.95);
    const double lambda = 0.5 + p;
    const auto g = loss_image_space_gradient(x, x_ori, vae, lambda, norm).gradient;
    const auto fd = central_difference(
        [&](std::span<const double> v) {
          return loss_image_space(Image(shape, std::vector<double>(v.begin(), v.end())), x_ori, vae, lambda, norm);
        },
        std::vector<double>(x.pixels().begin(), x.pixels().end()), kFiniteStep);
    worst = std::max(worst, relative_error(g.pixels(), fd));
  }
  return worst;
}

double worst_latent_gradient(std::mt19937_64& rng) {
  const auto vae = tiny_vae();
  const auto dim = vae.latent_dim();
  double worst = 0;
  for (int p = 0; p < 10; ++p) {
    const Norm norm = p % 2 ? Norm::l1 : Norm::l2;
    const Image x_ori = random_image(vae.input_shape(), rng);
    const auto ref = LatentReference::from(vae, x_ori);
    const auto z = random_latent(dim, rng);
    const double eps = p < 5 ? 10.0 : 1e-3, lambda = 1.0 + p;
    const auto g = loss_latent_space_gradient(z, ref, vae, lambda, eps, norm).gradient;
    const auto fd = central_difference(
        [&](std::span<const double> v) {
          return loss_latent_space(LatentVector{Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()))},
                                   x_ori, vae, lambda, eps, norm);
        },
        std::vector<double>(z.values.data(), z.values.data() + dim), kFiniteStep);
    worst = std::max(worst, relative_error(std::span<const double>(g.values.data(), dim), fd));
  }
  return worst;
}

double worst_style_gradient(std::mt19937_64& rng) {
  const auto gen = tiny_generator();
  std::normal_distribution<double> noise(0.0, 0.3);
  double worst = 0;
  for (int p = 0; p < 10; ++p) {
    const auto w_ori = gen.map_style(random_latent(gen.config().latent_dim, rng));
    StyleVector w = w_ori;
    for (auto& v : w.values()) v += noise(rng);
    const double eps = p < 5 ? 5.0 : 1e-3, lambda = 0.5 + p;
    const auto g = loss_style_space_gradient(w, w_ori, gen.synthesize(w_ori), gen, lambda, eps).gradient;
    const auto fd = central_difference(
        [&](std::span<const double> v) {
          StyleVector ww = w;
          std::copy(v.begin(), v.end(), ww.values().begin());
          return loss_style_space(ww, w_ori, gen, lambda, eps);
        },
        std::vector<double>(w.values().begin(), w.values().end()), kFiniteStep);
    worst = std::max(worst, relative_error(g.values(), fd));
  }
  return worst;
}

void gradients() {
  std::mt19937_64 rng(2024);
  const auto t0 = std::chrono::steady_clock::now();
  const double image = worst_image_gradient(rng);
  const double latent = worst_latent_gradient(rng);
  const double style = worst_style_gradient(rng);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  check(image <= kGradientTolerance, "image-space loss gradient vs finite differences",
        "worst relative error " + fmt(image, "%.2e") + " over 10 points");
  check(latent <= kGradientTolerance, "latent-space loss gradient vs finite differences",
        "worst relative error " + fmt(latent, "%.2e") + " over 10 points");
  check(style <= kGradientTolerance, "style-space loss gradient vs finite differences",
        "worst relative error " + fmt(style, "%.2e") + " over 10 points");
  check(secs <= kGradientSeconds, "gradient oracle runtime", fmt(secs, "%.2f") + " s (bound 60 s)");
}

void identities() {
  // Dev(2 w, w) = 100 / sqrt(n).
  bool dev_ok = true;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (Eigen::Index rows : {1, 3, 8}) {
    for (Eigen::Index cols : {1, 4, 64}) {
      StyleVector w_ori{RowMatrix(rows, cols)};
      for (auto& v : w_ori.values()) v = u(rng);
      const StyleVector w{2.0 * w_ori.rows};
      dev_ok &= deviation(w, w_ori) == 100.0 / std::sqrt(static_cast<double>(rows * cols));
    }
  }
  check(dev_ok, "deviation(2 w_ori, w_ori) = 100/sqrt(n)", "exact for 9 shapes");

  bool metric_ok = true;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> a(50), b(50), c(50);
    for (std::size_t i = 0; i < 50; ++i) a[i] = u(rng), b[i] = u(rng), c[i] = u(rng);
    metric_ok &= rmsd(a, a) == 0.0 && rmsd(a, b) > 0.0 && rmsd(a, b) == rmsd(b, a) &&
                 rmsd(a, c) <= rmsd(a, b) + rmsd(b, c) + 1e-15;
  }
  check(metric_ok, "rmsd metric axioms", "100 random triples");

  AttackConfig sc = AttackConfig::defaults(AttackMode::style_space);
  sc.alpha = 0.1;
  sc.l_hat_w = 0.05;
  const double worked = update_lambda({1.0, 2.0, 0}, 0.5, 0.0, sc).lambda;
  check(worked == 1.05, "lambda update worked example", fmt(worked, "%.17g"));
  check(init_beta(0.5, 0.25) == 2.0 && !init_beta(0.3, 0.0) && init_beta(0.0, 0.4) == 0.0, "beta initialization",
        "2.0 / deferred / 0");
  sc.alpha = 0.0;
  check(update_lambda({0.8, 3.0, 0}, 0.2, 0.07, sc).lambda == 0.8, "alpha = 0 above threshold keeps lambda", "exact");
  sc.alpha = 0.05;
  check(update_lambda({1.3, 2.0, 0}, 0.25, 0.5, sc).lambda == 1.3, "equilibrium is a fixed point", "exact");

  const auto vae = tiny_vae();
  std::mt19937_64 img_rng(3);
  const Image x = random_image(vae.input_shape(), img_rng);
  AttackConfig ic = AttackConfig::defaults(AttackMode::image_space);
  ic.max_iters = 0;
  const auto r0 = attack_image_space(x, vae, ic);
  check(r0.adversarial_image == x && r0.input_distance == 0.0 && !r0.success, "image space, zero iterations",
        "x' = x_ori, Dis_input 0, no success");
  ic.max_iters = 20;
  ic.eta = 0.0;
  const auto reta = attack_image_space(x, vae, ic);
  check(reta.adversarial_image == x && reta.input_distance == 0.0 && !reta.success && reta.iterations_used == 20,
        "image space, eta = 0", "x never moves; no success after max_iters");
  AttackConfig lc = AttackConfig::defaults(AttackMode::latent_space);
  lc.max_iters = 0;
  const auto rl = attack_latent_space(x, vae, lc);
  const Image recon = vae.reconstruct(x);
  check(rl.adversarial_image == recon && rl.input_distance == rmsd(recon, x), "latent space, zero iterations",
        "adversarial image = reconstruction; Dis_input = reconstruction error");
  const auto gen = tiny_generator();
  const auto w = gen.map_style(random_latent(gen.config().latent_dim, img_rng));
  AttackConfig stc = AttackConfig::defaults(AttackMode::style_space);
  stc.max_iters = 0;
  const auto rs = attack_style_space(w, gen, stc);
  check(rs.deviation && *rs.deviation == 0.0 && rs.output_distance == 0.0 && !rs.success,
        "style space, zero iterations", "Dev 0, output distance 0, no success");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism() {
  const fs::path ckpt = vae_checkpoint("mnist");
  if (!fs::exists(ckpt)) throw std::runtime_error("missing checkpoint " + ckpt.string());
  std::vector<fs::path> dirs{work_dir() / "determinism-a", work_dir() / "determinism-b"};
  for (const auto& d : dirs) {
    timed_cli("attack --mode latent_space --dataset mnist --data-dir " + data_root().string() + " --ckpt " + ckpt.string() +
                  " --out " + d.string() + " -n 8 --seed 11 --max-iters 100",
              d.string() + ".log");
  }
  bool same = true;
  std::size_t compared = 0;
  std::vector<fs::path> files{"summary.json", "summary.csv", "config.json"};
  for (const auto& e : fs::directory_iterator(dirs[0] / "samples")) files.push_back(fs::path("samples") / e.path().filename());
  for (const auto& f : files) {
    const bool eq = fs::exists(dirs[1] / f) && slurp(dirs[0] / f) == slurp(dirs[1] / f);
    if (!eq) std::cout << "      differs: " << f.string() << std::endl;
    same &= eq;
    ++compared;
  }
  check(same, "two seeded attack runs produce byte-identical reports", std::to_string(compared) + " files compared");
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<std::string, std::function<void()>> criteria{
      {"vae_mnist", [] { vae_reconstruction("mnist", kMnistReconstruction); }},
      {"vae_svhn", [] { vae_reconstruction("svhn", kSvhnReconstruction); }},
      {"image_mnist", [] { image_space("mnist", 0.4, 0.10); }},
      {"image_svhn", [] { image_space("svhn", 0.18, 0.05); }},
      {"latent_mnist", [] { latent_space("mnist", 0.15, 0.12); }},
      {"latent_svhn", [] { latent_space("svhn", 0.18, 0.06); }},
      {"style", style},
      {"gradients", gradients},
      {"identities", identities},
      {"determinism", determinism},
  };
  if (argc != 2 || !criteria.count(argv[1])) {
    std::cerr << "usage: typei_acceptance <criterion>\n";
    return 2;
  }
  try {
    criteria.at(argv[1])();
  } catch (const std::exception& e) {
    check(false, argv[1], e.what());
  }
  return failures == 0 ? 0 : 1;
}
