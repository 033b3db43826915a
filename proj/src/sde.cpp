#include "cgflow/sde.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "cgflow/flow.hpp"
#include "cgflow/rng.hpp"

namespace cgflow {
namespace {

constexpr double kDivergenceNorm = 1e6;

double proxy_from_velocity(const Latent& v_theta, double tau) {
  // -|z - x_hat|^2 with x_hat = z + tau v_theta.
  double s = 0.0;
  for (double v : v_theta.data) s += v * v;
  return -tau * tau * s;
}

}  // namespace

double SdeConfig::effective_beta() const {
  return beta.has_value() ? *beta : beta_for_tau(tau);
}

void SdeConfig::validate() const {
  if (!(gamma > 0.0))
    throw ConfigError(cat("gamma must be positive, got ", gamma));
  if (!(gamma < tau.value))
    throw ConfigError(cat("stability requires gamma < tau, got gamma = ", gamma,
                          ", tau = ", tau.value));
  if (n_steps < 0) throw ConfigError(cat("n_steps must be >= 0, got ", n_steps));
  if (beta.has_value() && !(*beta > 0.0))
    throw ConfigError(cat("beta must be positive, got ", *beta));
}

double beta_for_tau(TimePoint tau) { return (1.0 - tau.value) / tau.value; }

Latent consistency_bias(const Latent& v_theta, const Latent& v_eps) {
  require_same_shape(v_theta, v_eps, "consistency_bias");
  Latent out = like(v_theta);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data[i] = v_theta.data[i] - v_eps.data[i];
  return out;
}

Latent cf_sde_step(const Latent& z, const Latent& v_theta, TimePoint tau,
                   double gamma, const Latent& noise) {
  require_same_shape(z, v_theta, "cf_sde_step");
  require_same_shape(z, noise, "cf_sde_step noise");
  if (!(gamma > 0.0))
    throw ConfigError(cat("gamma must be positive, got ", gamma));
  const double t = tau.value;
  const double keep = 1.0 - gamma / t;
  const double drive = (1.0 - t) / t * gamma;
  const double diff = std::sqrt(2.0 * gamma);
  Latent out = like(z);
  for (std::size_t i = 0; i < z.size(); ++i)
    out.data[i] = keep * z.data[i] + drive * v_theta.data[i] + diff * noise.data[i];
  return out;
}

Latent general_sde_step(const Latent& z, const Latent& v_theta,
                        const Latent& v_eps, TimePoint tau, double gamma,
                        double beta, const Latent& noise) {
  require_same_shape(z, v_theta, "general_sde_step");
  require_same_shape(z, v_eps, "general_sde_step v_eps");
  require_same_shape(z, noise, "general_sde_step noise");
  if (!(gamma > 0.0))
    throw ConfigError(cat("gamma must be positive, got ", gamma));
  if (!(beta > 0.0)) throw ConfigError(cat("beta must be positive, got ", beta));
  const double t = tau.value;
  const double keep = 1.0 - gamma / t;
  const double drive = beta * gamma;
  const double eps_coeff = (beta - (1.0 - t) / t) * gamma;
  const double diff = std::sqrt(2.0 * gamma);
  Latent out = like(z);
  for (std::size_t i = 0; i < z.size(); ++i)
    out.data[i] = keep * z.data[i] + drive * v_theta.data[i] -
                  eps_coeff * v_eps.data[i] + diff * noise.data[i];
  return out;
}

Latent score_from_v_eps(const Latent& z, const Latent& v_eps, TimePoint tau) {
  require_same_shape(z, v_eps, "score_from_v_eps");
  const double t = tau.value;
  Latent out = like(z);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double x_hat = z.data[i] + t * v_eps.data[i];
    out.data[i] = -(z.data[i] - (1.0 - t) * x_hat) / (t * t);
  }
  return out;
}

std::vector<Latent> langevin_tilt_sample(
    const Latent& mu, TimePoint tau,
    const std::function<Latent(const Latent&)>& grad_c, double beta,
    double gamma, int burn_in, int n_samples, int thin, std::uint64_t seed) {
  require_finite(mu, "langevin mu");
  if (!(beta > 0.0)) throw ConfigError(cat("beta must be positive, got ", beta));
  const double t = tau.value;
  const double gamma_max = t * t * std::min(1.0, 1.0 / beta);
  if (!(gamma > 0.0 && gamma < gamma_max))
    throw ConfigError(cat("langevin step gamma = ", gamma,
                          " outside (0, ", gamma_max, ") for tau = ", t,
                          ", beta = ", beta));
  if (burn_in < 0 || n_samples <= 0 || thin <= 0)
    throw ConfigError("langevin needs burn_in >= 0, n_samples > 0, thin > 0");

  Rng rng(seed);
  Latent z = like(mu);
  for (std::size_t i = 0; i < z.size(); ++i) z.data[i] = (1.0 - t) * mu.data[i];
  const double diff = std::sqrt(2.0 * gamma);

  std::vector<Latent> out;
  out.reserve(n_samples);
  const long total = static_cast<long>(burn_in) +
                     static_cast<long>(n_samples) * thin;
  for (long step = 0; step < total; ++step) {
    const Latent g = grad_c(z);
    require_same_shape(z, g, "grad_c output");
    const Latent score = analytic_score_q(z, tau, mu);
    for (std::size_t i = 0; i < z.size(); ++i)
      z.data[i] += gamma * (beta * g.data[i] + score.data[i]) +
                   diff * rng.normal();
    if (!z.all_finite() || z.norm() > kDivergenceNorm)
      throw NumericError(cat("langevin chain diverged at step ", step));
    if (step >= burn_in && (step - burn_in) % thin == thin - 1)
      out.push_back(z);
  }
  return out;
}

NormTraceReport latent_norm_trace(const SdeTrace& trace) {
  if (trace.entries.empty()) throw ConfigError("empty SDE trace");
  NormTraceReport r;
  r.initial_norm = trace.entries.front().norm;
  if (!(r.initial_norm > 0.0))
    throw ConfigError("norm trace needs a nonzero initial state");
  bool finite = true;
  for (const auto& e : trace.entries) {
    if (!std::isfinite(e.norm)) {
      finite = false;
      break;
    }
    r.max_rel_deviation = std::max(
        r.max_rel_deviation, std::fabs(e.norm - r.initial_norm) / r.initial_norm);
  }
  // Divergence: the norm left the 10x band around the start and kept growing
  // over the final entries (or became non-finite).
  bool tail_growth = true;
  const std::size_t n = trace.entries.size();
  const std::size_t tail = std::min<std::size_t>(5, n - 1);
  for (std::size_t i = n - tail; i < n; ++i)
    tail_growth &= trace.entries[i].norm > trace.entries[i - 1].norm;
  r.diverged = !finite || (r.max_rel_deviation > 10.0 && tail_growth);
  return r;
}

void write_trace(const std::string& path, const SdeTrace& trace) {
  std::ofstream out(path);
  if (!out) throw ConfigError(cat("cannot write ", path));
  out << "# iteration norm proxy\n";
  out.precision(17);
  for (const auto& e : trace.entries)
    out << e.iteration << " " << e.norm << " " << e.proxy << "\n";
  const NormTraceReport r = latent_norm_trace(trace);
  out << "initial_norm = " << r.initial_norm << "\n";
  out << "max_rel_deviation = " << r.max_rel_deviation << "\n";
  out << "diverged = " << (r.diverged ? 1 : 0) << "\n";
}

SdeTrace run_sde_chain(const Latent& z0, const VelocityOracle& oracle,
                       const Condition* cond, TimePoint tau, double gamma,
                       int n_iters, std::uint64_t seed) {
  if (n_iters < 0) throw ConfigError("n_iters must be >= 0");
  Rng rng(seed);
  const Condition uncond{};
  const Condition& c = cond ? *cond : uncond;
  SdeTrace trace;
  Latent z = z0;
  for (int n = 0; n <= n_iters; ++n) {
    const Latent v = oracle.velocity(z, tau, c);
    trace.entries.push_back({n, z.norm(), proxy_from_velocity(v, tau.value)});
    if (n == n_iters) break;
    Latent noise = normal_latent(z.frames, z.height, z.width, z.channels, rng);
    z = cf_sde_step(z, v, tau, gamma, noise);
    if (!z.all_finite())
      throw NumericError(cat("SDE chain non-finite at iteration ", n + 1));
  }
  return trace;
}

PhiCfResult run_phi_cf(const Latent& input_video, const Condition& cond,
                       const std::optional<Latent>& background,
                       const VideoMask& mask, const VelocityOracle& oracle,
                       const TimeSchedule& schedule, const SdeConfig& cfg) {
  cfg.validate();
  schedule.validate();
  require_finite(input_video, "phi_cf input");
  if (!mask.compatible_with(input_video))
    throw ConfigError("phi_cf: mask incompatible with input video");
  if (std::fabs(schedule.tau() - cfg.tau.value) > 1e-12)
    throw ConfigError(cat("schedule tau ", schedule.tau(),
                          " does not match config tau ", cfg.tau.value));
  if (cfg.stage == Stage::two && !background.has_value())
    throw ConfigError("stage two requires a background latent");
  if (background.has_value())
    require_same_shape(input_video, *background, "phi_cf background");

  const double tau = cfg.tau.value;
  const double beta = cfg.effective_beta();
  const bool cancels = std::fabs(beta - beta_for_tau(cfg.tau)) < 1e-12;

  PhiCfResult res;
  res.z_inv = invert_to_tau(input_video, cond, schedule, oracle);

  Rng rng(cfg.seed);
  const Latent eps = normal_latent(input_video.frames, input_video.height,
                                   input_video.width, input_video.channels, rng);
  const Latent& noise_base =
      cfg.stage == Stage::one ? input_video : *background;
  const Latent z_noisy = forward_noise(noise_base, cfg.tau, eps);
  Latent z = mask_mix(res.z_inv, z_noisy, mask);
  res.z_tau_init = z;

  for (int n = 0; n < cfg.n_steps; ++n) {
    const Latent v_theta = oracle.velocity(z, cfg.tau, cond);
    res.trace.entries.push_back(
        {n, z.norm(), proxy_from_velocity(v_theta, tau)});
    Latent noise = normal_latent(z.frames, z.height, z.width, z.channels, rng);
    Latent z_hat;
    if (cancels) {
      z_hat = cf_sde_step(z, v_theta, cfg.tau, cfg.gamma, noise);
    } else {
      const Latent v_eps = oracle.velocity(z, cfg.tau);
      z_hat = general_sde_step(z, v_theta, v_eps, cfg.tau, cfg.gamma, beta, noise);
    }
    z = cfg.stage == Stage::one ? mask_mix(z, z_hat, mask)
                                : mask_mix(z_hat, z, mask);
    if (!z.all_finite())
      throw NumericError(cat("phi_cf latent non-finite after iteration ", n + 1));
  }
  {
    const Latent v_theta = oracle.velocity(z, cfg.tau, cond);
    res.trace.entries.push_back(
        {cfg.n_steps, z.norm(), proxy_from_velocity(v_theta, tau)});
  }
  res.z_tau_star = z;

  res.video = generate_to_data(z, cond, schedule, oracle);
  require_finite(res.video, "phi_cf output");
  return res;
}

}  // namespace cgflow
