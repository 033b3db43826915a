#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cgflow/latent.hpp"

namespace cgflow {

// Conditioning for velocity evaluation. `key` selects samples by exact match;
// `latent` additionally enables soft similarity weighting when the oracle was
// built with condition_sigma > 0.
struct Condition {
  std::string key;
  std::optional<Latent> latent;
};

struct OracleSample {
  Latent sample;
  std::string condition_key;
  std::optional<Latent> condition_latent;
};

// Closed-form flow-matching velocity for three exactly solvable data laws:
//   empirical: mixture of diracs on the dataset; the posterior over samples at
//     (z, t) has log-weights  log prior_k - |z - (1-t) x_k|^2 / (2 t^2),
//     normalized in the log domain, and v = (E[x | z] - z) / t.
//   dirac: single point mass mu, v = (mu - z) / t.
//   gaussian: x ~ N(mu, s^2 I) entrywise,
//     E[x | z] = mu + (1-t) s^2 / ((1-t)^2 s^2 + t^2) * (z - (1-t) mu).
class VelocityOracle {
 public:
  enum class Mode { empirical, dirac, gaussian };

  static VelocityOracle empirical(std::vector<OracleSample> samples,
                                  double condition_sigma = 0.0);
  static VelocityOracle dirac(Latent mu);
  static VelocityOracle gaussian(Latent mu, double data_std);

  // Unconditional velocity (uniform prior over samples); this is v_eps.
  Latent velocity(const Latent& z, TimePoint t) const;

  // Conditioned velocity v_theta. dirac/gaussian modes ignore the condition.
  Latent velocity(const Latent& z, TimePoint t, const Condition& cond) const;

  // Normalized posterior weights over dataset samples, for diagnostics and
  // tests. cond == nullptr means the uniform prior.
  std::vector<double> posterior_weights(const Latent& z, TimePoint t,
                                        const Condition* cond) const;

  Mode mode() const { return mode_; }
  const std::vector<OracleSample>& samples() const { return samples_; }
  double condition_sigma() const { return condition_sigma_; }

  // Index of the dataset sample nearest to z in Euclidean distance.
  int nearest_sample(const Latent& z) const;

 private:
  VelocityOracle() = default;

  Mode mode_ = Mode::dirac;
  std::vector<OracleSample> samples_;  // empirical
  Latent mu_;                          // dirac / gaussian
  double data_std_ = 1.0;              // gaussian
  double condition_sigma_ = 0.0;
};

Latent dirac_velocity(const Latent& z, TimePoint t, const Latent& mu);
Latent gaussian_velocity(const Latent& z, TimePoint t, const Latent& mu,
                         double data_std);

// Score of q = N((1-tau) mu, tau^2 I) at z: -(z - (1-tau) mu) / tau^2.
Latent analytic_score_q(const Latent& z, TimePoint tau, const Latent& mu);

// Dataset manifest: one "relative/path key" pair per line, '#' comments,
// sample files in the latent container format, paths relative to the manifest.
void save_dataset(const std::string& dir, const std::string& manifest_name,
                  const std::vector<OracleSample>& samples);
std::vector<OracleSample> load_dataset(const std::string& manifest_path);

}  // namespace cgflow
