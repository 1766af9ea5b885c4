#include "typei/attack_types.hpp"

#include "typei/error.hpp"

namespace typei {

std::string to_string(AttackMode mode) {
  switch (mode) {
    case AttackMode::image_space: return "image_space";
    case AttackMode::latent_space: return "latent_space";
    case AttackMode::style_space: return "style_space";
  }
  return "?";
}

std::string to_string(Norm norm) { return norm == Norm::l1 ? "l1" : "l2"; }

std::string to_string(SchedulerKind kind) {
  return kind == SchedulerKind::constant ? "constant" : "adaptive";
}

AttackMode parse_attack_mode(const std::string& text) {
  if (text == "image_space") return AttackMode::image_space;
  if (text == "latent_space") return AttackMode::latent_space;
  if (text == "style_space") return AttackMode::style_space;
  throw ConfigError("unknown attack mode '" + text + "'");
}

Norm parse_norm(const std::string& text) {
  if (text == "l1") return Norm::l1;
  if (text == "l2") return Norm::l2;
  throw ConfigError("unknown norm '" + text + "'");
}

SchedulerKind parse_scheduler(const std::string& text) {
  if (text == "constant") return SchedulerKind::constant;
  if (text == "adaptive") return SchedulerKind::adaptive;
  throw ConfigError("unknown scheduler '" + text + "'");
}

AttackConfig AttackConfig::defaults(AttackMode mode) {
  AttackConfig c;
  c.mode = mode;
  switch (mode) {
    case AttackMode::image_space:
      // Distances are per-element normalized, so their gradients scale as
      // 1/n; the step size is sized accordingly.
      c.lambda0 = 3.0;
      c.eta = 2.0;
      break;
    case AttackMode::latent_space:
      c.lambda0 = 10.0;
      c.epsilon = 2.4;  // RMS distance in z; the VAE prior keeps |z| around 1
      c.eta = 1.0;
      break;
    case AttackMode::style_space:
      c.lambda0 = 1.0;
      c.alpha = 0.05;
      c.l_hat_w = 0.05;
      c.epsilon = 1.0;
      c.eta = 80.0;
      c.norm = Norm::l1;
      c.scheduler = SchedulerKind::adaptive;
      break;
  }
  return c;
}

void AttackConfig::validate() const {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be > 0");
  };
  const auto non_negative = [](double v, const char* name) {
    if (!(v >= 0.0)) throw ConfigError(std::string(name) + " must be >= 0");
  };
  positive(epsilon, "epsilon");
  positive(zeta, "zeta");
  positive(xi, "xi");
  non_negative(eta, "eta");
  non_negative(alpha, "alpha");
  non_negative(l_hat_w, "l_hat_w");
  non_negative(lambda0, "lambda0");
  if (scheduler == SchedulerKind::adaptive && !(alpha > 0.0)) {
    throw ConfigError("the adaptive scheduler requires alpha > 0");
  }
  if (mode == AttackMode::image_space && scheduler == SchedulerKind::adaptive) {
    throw ConfigError("image_space attacks use a constant lambda");
  }
  if (mode == AttackMode::style_space && scheduler != SchedulerKind::adaptive) {
    throw ConfigError("style_space attacks require the adaptive scheduler");
  }
  if (mode == AttackMode::style_space && norm != Norm::l1) {
    throw ConfigError("style_space attacks optimize the l1 norm");
  }
}

}  // namespace typei
