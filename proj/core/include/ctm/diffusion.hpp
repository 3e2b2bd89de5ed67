#pragma once

#include <span>
#include <vector>

#include "ctm/num.hpp"
#include "ctm/rng.hpp"

namespace ctm {

// Variance-exploding schedule; time equals noise sigma. Time zero is
// represented by sigma_min throughout.
struct Schedule {
  double sigma_min = 0.002;
  double sigma_max = 80.0;
  double rho = 7.0;
  double sigma_data = 0.5;

  void validate() const;
};

// EDM preconditioning wrappers (Karras et al. 2022).
struct Precond {
  double c_skip;
  double c_out;
  double c_in;
  double c_noise;
};

Precond precondition(double t, double sigma_data);

// Raw rho-warped interpolation between sigma_max and sigma_min; n >= 2.
// Exposed separately so the formula can be probed outside Schedule's domain.
std::vector<double> karras_points(double sigma_min, double sigma_max, double rho, int n);

// Strictly decreasing grid from sigma_max to sigma_min.
struct KarrasGrid {
  std::vector<double> t;

  int size() const { return int(t.size()); }
  double operator[](int i) const { return t[std::size_t(i)]; }
};

KarrasGrid karras_grid(const Schedule& sched, int n);

// exp(N(p_mean, p_std^2))
double lognormal_time(double p_mean, double p_std, Rng& rng);

// Continuous version of the grid warp; xi in [0, 1], xi = 0 -> sigma_max.
double karras_uniform_time(double xi, const Schedule& sched);

// z_t = z0 + t * eps
Vec add_noise(std::span<const double> z0, double t, Rng& rng);
Vec add_noise(std::span<const double> z0, double t, std::span<const double> eps);

// Identity codec: generation lives directly in data space here, but guidance
// features are defined over decoded signals, so the seam stays explicit.
struct LatentCodec {
  Vec encode(std::span<const double> x) const { return Vec(x.begin(), x.end()); }
  Vec decode(std::span<const double> z) const { return Vec(z.begin(), z.end()); }
};

}  // namespace ctm
