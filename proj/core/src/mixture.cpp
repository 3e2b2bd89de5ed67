#include "ctm/mixture.hpp"

#include <cmath>
#include <stdexcept>

namespace ctm {

void ConditionedMixture::validate() const {
  if (dim <= 0) throw std::invalid_argument("mixture: dim must be positive");
  if (by_label.empty()) throw std::invalid_argument("mixture: need at least one label");
  for (const auto& comps : by_label) {
    if (comps.empty()) throw std::invalid_argument("mixture: label without components");
    double wsum = 0.0;
    for (const GaussComponent& c : comps) {
      if (int(c.mean.size()) != dim || int(c.var.size()) != dim)
        throw std::invalid_argument("mixture: component dimension mismatch");
      if (!(c.weight > 0.0)) throw std::invalid_argument("mixture: weights must be positive");
      for (double v : c.var)
        if (!(v > 0.0)) throw std::invalid_argument("mixture: variances must be positive");
      wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-9) throw std::invalid_argument("mixture: label weights must sum to 1");
  }
}

const std::vector<GaussComponent>& ConditionedMixture::marginal() const {
  if (marginal_.empty()) {
    const double lw = 1.0 / double(num_labels());
    for (const auto& comps : by_label)
      for (GaussComponent c : comps) {
        c.weight *= lw;
        marginal_.push_back(std::move(c));
      }
  }
  return marginal_;
}

const std::vector<GaussComponent>& ConditionedMixture::components(Label c) const {
  if (!c) return marginal();
  if (*c < 0 || *c >= num_labels()) throw std::invalid_argument("mixture: label out of range");
  return by_label[std::size_t(*c)];
}

Vec ConditionedMixture::sample(Label c, Rng& rng) const {
  const auto& comps = components(c);
  double u = rng.uniform();
  std::size_t k = comps.size() - 1;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    u -= comps[i].weight;
    if (u < 0.0) {
      k = i;
      break;
    }
  }
  Vec x(static_cast<std::size_t>(dim));
  for (int j = 0; j < dim; ++j)
    x[std::size_t(j)] = comps[k].mean[std::size_t(j)] + std::sqrt(comps[k].var[std::size_t(j)]) * rng.normal();
  return x;
}

static double log_gauss_diag(std::span<const double> x, const Vec& mean, const Vec& var,
                             double extra_var) {
  constexpr double log_two_pi = 1.8378770664093453;
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double v = var[j] + extra_var;
    const double d = x[j] - mean[j];
    s += -0.5 * (log_two_pi + std::log(v) + d * d / v);
  }
  return s;
}

double ConditionedMixture::log_density(Label c, std::span<const double> x) const {
  const auto& comps = components(c);
  Vec lp(comps.size());
  for (std::size_t k = 0; k < comps.size(); ++k)
    lp[k] = std::log(comps[k].weight) + log_gauss_diag(x, comps[k].mean, comps[k].var, 0.0);
  return logsumexp(lp);
}

void ConditionedMixture::standardize(double sigma_data) {
  if (!(sigma_data > 0.0)) throw std::invalid_argument("standardize: sigma_data must be positive");
  const auto& pool = marginal();
  Vec mean(std::size_t(dim), 0.0);
  for (const GaussComponent& c : pool) axpy(c.weight, c.mean, mean);
  double avg_var = 0.0;
  for (const GaussComponent& c : pool)
    for (int j = 0; j < dim; ++j) {
      const double d = c.mean[std::size_t(j)] - mean[std::size_t(j)];
      avg_var += c.weight * (c.var[std::size_t(j)] + d * d);
    }
  avg_var /= double(dim);
  const double scale = sigma_data / std::sqrt(avg_var);
  for (auto& comps : by_label)
    for (GaussComponent& c : comps)
      for (int j = 0; j < dim; ++j) {
        c.mean[std::size_t(j)] = (c.mean[std::size_t(j)] - mean[std::size_t(j)]) * scale;
        c.var[std::size_t(j)] *= scale * scale;
      }
  invalidate_cache();
}

ConditionedMixture ConditionedMixture::blobs(int dim, int labels, int comps_per_label,
                                             double spread, std::uint64_t seed) {
  ConditionedMixture m;
  m.dim = dim;
  Rng rng = Rng::from_seed(seed).fork(0xb70b5);
  for (int l = 0; l < labels; ++l) {
    std::vector<GaussComponent> comps;
    double wsum = 0.0;
    for (int k = 0; k < comps_per_label; ++k) {
      GaussComponent c;
      c.weight = 0.5 + rng.uniform();
      wsum += c.weight;
      c.mean.resize(std::size_t(dim));
      c.var.resize(std::size_t(dim));
      for (int j = 0; j < dim; ++j) {
        c.mean[std::size_t(j)] = spread * rng.normal();
        const double sd = 0.08 * spread * std::exp(0.5 * rng.normal());
        c.var[std::size_t(j)] = sd * sd;
      }
      comps.push_back(std::move(c));
    }
    for (GaussComponent& c : comps) c.weight /= wsum;
    m.by_label.push_back(std::move(comps));
  }
  m.validate();
  return m;
}

ConditionedMixture ConditionedMixture::smooth_signals(int dim, int labels, int comps_per_label,
                                                      std::uint64_t seed) {
  ConditionedMixture m;
  m.dim = dim;
  Rng rng = Rng::from_seed(seed).fork(0x516);
  const double pi = 3.141592653589793;
  for (int l = 0; l < labels; ++l) {
    std::vector<GaussComponent> comps;
    double wsum = 0.0;
    for (int k = 0; k < comps_per_label; ++k) {
      GaussComponent c;
      c.weight = 0.5 + rng.uniform();
      wsum += c.weight;
      c.mean.resize(std::size_t(dim));
      c.var.resize(std::size_t(dim));
      // carrier with a label-dependent frequency band and a random envelope
      const double freq = 2.0 + double(l) + rng.uniform();
      const double phase = 2.0 * pi * rng.uniform();
      const double amp = 0.4 * std::exp(0.6 * rng.normal());
      const int env_kind = int(rng.uniform_int(4));
      const double env_phase = 2.0 * pi * rng.uniform();
      for (int j = 0; j < dim; ++j) {
        const double u = double(j) / double(dim - 1);
        double env = 1.0;
        switch (env_kind) {
          case 0: env = 0.25 + 0.75 * u; break;          // rising
          case 1: env = 1.0 - 0.75 * u; break;           // falling
          case 2: env = 0.3 + 0.7 * std::sin(pi * u); break;  // arch
          default: env = 0.65 + 0.35 * std::sin(2.0 * pi * u + env_phase); break;
        }
        c.mean[std::size_t(j)] = amp * env * std::sin(2.0 * pi * freq * u + phase);
        const double sd = 0.12 * amp * env + 0.01;
        c.var[std::size_t(j)] = sd * sd;
      }
      comps.push_back(std::move(c));
    }
    for (GaussComponent& c : comps) c.weight /= wsum;
    m.by_label.push_back(std::move(comps));
  }
  m.validate();
  return m;
}

}  // namespace ctm
