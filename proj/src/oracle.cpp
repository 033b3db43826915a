#include "cgflow/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "cgflow/latent_io.hpp"

namespace cgflow {
namespace {

double sq_dist(const Latent& a, const Latent& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return s;
}

}  // namespace

VelocityOracle VelocityOracle::empirical(std::vector<OracleSample> samples,
                                         double condition_sigma) {
  if (samples.empty()) throw ConfigError("empirical oracle needs >= 1 sample");
  for (std::size_t k = 1; k < samples.size(); ++k)
    require_same_shape(samples[0].sample, samples[k].sample,
                       "empirical oracle samples");
  for (const auto& s : samples) require_finite(s.sample, "oracle sample");
  if (condition_sigma < 0.0)
    throw ConfigError("condition_sigma must be >= 0");
  VelocityOracle o;
  o.mode_ = Mode::empirical;
  o.samples_ = std::move(samples);
  o.condition_sigma_ = condition_sigma;
  return o;
}

VelocityOracle VelocityOracle::dirac(Latent mu) {
  require_finite(mu, "dirac oracle mean");
  VelocityOracle o;
  o.mode_ = Mode::dirac;
  o.mu_ = std::move(mu);
  return o;
}

VelocityOracle VelocityOracle::gaussian(Latent mu, double data_std) {
  require_finite(mu, "gaussian oracle mean");
  if (!(data_std > 0.0))
    throw ConfigError(cat("gaussian oracle needs data_std > 0, got ", data_std));
  VelocityOracle o;
  o.mode_ = Mode::gaussian;
  o.mu_ = std::move(mu);
  o.data_std_ = data_std;
  return o;
}

std::vector<double> VelocityOracle::posterior_weights(const Latent& z, TimePoint t,
                                                      const Condition* cond) const {
  if (mode_ != Mode::empirical)
    throw ConfigError("posterior weights only defined for the empirical mode");
  const double tv = t.value;
  const std::size_t n = samples_.size();

  // Log prior per sample. Direct exponentials of the quadratic terms underflow
  // for small t, so everything stays in the log domain until one shifted
  // normalization at the end.
  std::vector<double> lw(n, 0.0);
  if (cond != nullptr) {
    const bool soft = condition_sigma_ > 0.0 && cond->latent.has_value();
    if (soft) {
      for (std::size_t k = 0; k < n; ++k) {
        if (!samples_[k].condition_latent)
          throw ConfigError(cat("sample ", k, " lacks a condition latent for soft weighting"));
        lw[k] = -sq_dist(*cond->latent, *samples_[k].condition_latent) /
                (2.0 * condition_sigma_ * condition_sigma_);
      }
    } else {
      bool any = false;
      for (std::size_t k = 0; k < n; ++k) {
        if (samples_[k].condition_key == cond->key) {
          any = true;
        } else {
          lw[k] = -std::numeric_limits<double>::infinity();
        }
      }
      if (!any)
        throw ConfigError(cat("condition key '", cond->key,
                              "' matches no dataset sample"));
    }
  }

  for (std::size_t k = 0; k < n; ++k) {
    if (lw[k] == -std::numeric_limits<double>::infinity()) continue;
    double d2 = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double d = z.data[i] - (1.0 - tv) * samples_[k].sample.data[i];
      d2 += d * d;
    }
    lw[k] += -d2 / (2.0 * tv * tv);
  }

  const double m = *std::max_element(lw.begin(), lw.end());
  if (!std::isfinite(m)) throw NumericError("all posterior weights vanished");
  std::vector<double> w(n);
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    w[k] = std::exp(lw[k] - m);
    sum += w[k];
  }
  for (double& v : w) v /= sum;
  return w;
}

Latent VelocityOracle::velocity(const Latent& z, TimePoint t) const {
  return velocity(z, t, Condition{});
}

Latent VelocityOracle::velocity(const Latent& z, TimePoint t,
                                const Condition& cond) const {
  require_finite(z, "oracle input");
  const double tv = t.value;
  switch (mode_) {
    case Mode::dirac:
      return dirac_velocity(z, t, mu_);
    case Mode::gaussian:
      return gaussian_velocity(z, t, mu_, data_std_);
    case Mode::empirical: {
      require_same_shape(z, samples_[0].sample, "oracle input");
      const bool unconditional = cond.key.empty() && !cond.latent.has_value();
      const std::vector<double> w =
          posterior_weights(z, t, unconditional ? nullptr : &cond);
      Latent out = like(z);
      for (std::size_t k = 0; k < w.size(); ++k) {
        if (w[k] == 0.0) continue;
        const Latent& xk = samples_[k].sample;
        for (std::size_t i = 0; i < out.size(); ++i)
          out.data[i] += w[k] * xk.data[i];
      }
      for (std::size_t i = 0; i < out.size(); ++i)
        out.data[i] = (out.data[i] - z.data[i]) / tv;
      return out;
    }
  }
  throw NumericError("unreachable oracle mode");
}

int VelocityOracle::nearest_sample(const Latent& z) const {
  if (mode_ != Mode::empirical)
    throw ConfigError("nearest_sample only defined for the empirical mode");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < samples_.size(); ++k) {
    const double d = sq_dist(z, samples_[k].sample);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

Latent dirac_velocity(const Latent& z, TimePoint t, const Latent& mu) {
  require_same_shape(z, mu, "dirac_velocity");
  Latent out = like(z);
  for (std::size_t i = 0; i < z.size(); ++i)
    out.data[i] = (mu.data[i] - z.data[i]) / t.value;
  return out;
}

Latent gaussian_velocity(const Latent& z, TimePoint t, const Latent& mu,
                         double data_std) {
  require_same_shape(z, mu, "gaussian_velocity");
  if (!(data_std > 0.0)) throw ConfigError("gaussian_velocity needs data_std > 0");
  const double tv = t.value;
  const double s2 = data_std * data_std;
  const double gain = (1.0 - tv) * s2 / ((1.0 - tv) * (1.0 - tv) * s2 + tv * tv);
  Latent out = like(z);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double x_hat = mu.data[i] + gain * (z.data[i] - (1.0 - tv) * mu.data[i]);
    out.data[i] = (x_hat - z.data[i]) / tv;
  }
  return out;
}

Latent analytic_score_q(const Latent& z, TimePoint tau, const Latent& mu) {
  require_same_shape(z, mu, "analytic_score_q");
  const double t = tau.value;
  Latent out = like(z);
  for (std::size_t i = 0; i < z.size(); ++i)
    out.data[i] = -(z.data[i] - (1.0 - t) * mu.data[i]) / (t * t);
  return out;
}

void save_dataset(const std::string& dir, const std::string& manifest_name,
                  const std::vector<OracleSample>& samples) {
  namespace fs = std::filesystem;
  if (samples.empty()) throw ConfigError("refusing to save empty dataset");
  fs::create_directories(dir);
  std::ofstream manifest(fs::path(dir) / manifest_name);
  if (!manifest) throw ConfigError(cat("cannot write manifest in ", dir));
  manifest << "# sample_file condition_key\n";
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (samples[k].condition_key.find_first_of(" \t\n") != std::string::npos)
      throw ConfigError("condition keys must not contain whitespace");
    const std::string name = cat("sample_", k, ".cgfl");
    save_latent((fs::path(dir) / name).string(), samples[k].sample);
    manifest << name << " " << samples[k].condition_key << "\n";
  }
}

std::vector<OracleSample> load_dataset(const std::string& manifest_path) {
  namespace fs = std::filesystem;
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError(cat("cannot open ", manifest_path));
  const fs::path base = fs::path(manifest_path).parent_path();
  std::vector<OracleSample> samples;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string file, key, extra;
    if (!(ls >> file)) continue;  // blank line
    if (!(ls >> key) || (ls >> extra))
      throw ConfigError(cat(manifest_path, ":", lineno,
                            ": expected 'file key' per line"));
    OracleSample s;
    s.sample = load_latent((base / file).string());
    s.condition_key = key;
    samples.push_back(std::move(s));
  }
  if (samples.empty())
    throw ConfigError(cat(manifest_path, ": dataset manifest lists no samples"));
  return samples;
}

}  // namespace cgflow
