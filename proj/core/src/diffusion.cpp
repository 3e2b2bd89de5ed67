#include "ctm/diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace ctm {

void Schedule::validate() const {
  if (!(sigma_min > 0.0)) throw std::invalid_argument("Schedule: sigma_min must be positive");
  if (!(sigma_max > sigma_min)) throw std::invalid_argument("Schedule: sigma_max must exceed sigma_min");
  if (!(rho > 0.0)) throw std::invalid_argument("Schedule: rho must be positive");
  if (!(sigma_data > 0.0)) throw std::invalid_argument("Schedule: sigma_data must be positive");
}

Precond precondition(double t, double sigma_data) {
  if (!(t > 0.0)) throw std::invalid_argument("precondition: t must be positive");
  const double t2 = t * t;
  const double sd2 = sigma_data * sigma_data;
  Precond p;
  p.c_skip = sd2 / (t2 + sd2);
  p.c_out = t * sigma_data / std::sqrt(t2 + sd2);
  p.c_in = 1.0 / std::sqrt(t2 + sd2);
  p.c_noise = 0.25 * std::log(t);
  return p;
}

std::vector<double> karras_points(double sigma_min, double sigma_max, double rho, int n) {
  if (n < 2) throw std::invalid_argument("karras_points: need at least two points");
  if (!(sigma_max > sigma_min) || sigma_min < 0.0)
    throw std::invalid_argument("karras_points: need sigma_max > sigma_min >= 0");
  const double max_inv_rho = std::pow(sigma_max, 1.0 / rho);
  const double min_inv_rho = std::pow(sigma_min, 1.0 / rho);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = double(i) / double(n - 1);
    out[std::size_t(i)] = std::pow(max_inv_rho + u * (min_inv_rho - max_inv_rho), rho);
  }
  // pin the endpoints against pow round-off
  out.front() = sigma_max;
  out.back() = sigma_min;
  return out;
}

KarrasGrid karras_grid(const Schedule& sched, int n) {
  sched.validate();
  KarrasGrid g;
  g.t = karras_points(sched.sigma_min, sched.sigma_max, sched.rho, n);
  return g;
}

double lognormal_time(double p_mean, double p_std, Rng& rng) {
  return std::exp(p_mean + p_std * rng.normal());
}

double karras_uniform_time(double xi, const Schedule& sched) {
  if (xi < 0.0 || xi > 1.0) throw std::invalid_argument("karras_uniform_time: xi outside [0, 1]");
  const double max_inv_rho = std::pow(sched.sigma_max, 1.0 / sched.rho);
  const double min_inv_rho = std::pow(sched.sigma_min, 1.0 / sched.rho);
  return std::pow(max_inv_rho + xi * (min_inv_rho - max_inv_rho), sched.rho);
}

Vec add_noise(std::span<const double> z0, double t, Rng& rng) {
  Vec out(z0.begin(), z0.end());
  for (double& v : out) v += t * rng.normal();
  return out;
}

Vec add_noise(std::span<const double> z0, double t, std::span<const double> eps) {
  if (z0.size() != eps.size()) throw std::invalid_argument("add_noise: eps size mismatch");
  Vec out(z0.begin(), z0.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += t * eps[i];
  return out;
}

}  // namespace ctm
