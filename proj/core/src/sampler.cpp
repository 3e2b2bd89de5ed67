#include "ctm/sampler.hpp"

#include <cmath>
#include <stdexcept>

namespace ctm {

void SamplerConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("sampler: steps must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("sampler: gamma outside [0, 1]");
  if (!std::isfinite(nu) || !std::isfinite(omega))
    throw std::invalid_argument("sampler: nu/omega must be finite");
}

Vec blended_jump(const StudentModel& m, Label c, double nu, double omega,
                 std::span<const double> z, double t, double s) {
  if (!c || nu == 0.0) return m.jump(true, {}, omega, z, t, s);
  if (nu == 1.0) return m.jump(true, c, omega, z, t, s);
  const Vec gc = m.jump(true, c, omega, z, t, s);
  const Vec gu = m.jump(true, {}, omega, z, t, s);
  Vec out(gc.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = nu * gc[j] + (1.0 - nu) * gu[j];
  return out;
}

Vec sample_chain_from(const StudentModel& m, Label c, const SamplerConfig& cfg, Vec z,
                      Rng rng, ChainTrace* trace) {
  cfg.validate();
  const KarrasGrid grid = karras_grid(m.sched, cfg.steps + 1);
  if (trace) {
    trace->grid_times = grid.t;
    trace->jump_targets.clear();
    trace->states.clear();
  }
  for (int n = 0; n < cfg.steps; ++n) {
    const double t = grid[n];
    const double t_next = grid[n + 1];
    const double t_tilde =
        std::max(std::sqrt(1.0 - cfg.gamma * cfg.gamma) * t_next, m.sched.sigma_min);
    z = blended_jump(m, c, cfg.nu, cfg.omega, z, t, t_tilde);
    if (cfg.gamma > 0.0)
      for (double& v : z) v += cfg.gamma * t_next * rng.normal();
    if (trace) {
      trace->jump_targets.push_back(t_tilde);
      trace->states.push_back(z);
    }
  }
  return z;
}

Vec sample_chain(const StudentModel& m, Label c, const SamplerConfig& cfg, Rng rng,
                 ChainTrace* trace) {
  cfg.validate();
  const double t0 = m.sched.sigma_max;
  Vec z(std::size_t(m.dim));
  for (double& v : z) v = t0 * rng.normal();
  return sample_chain_from(m, c, cfg, std::move(z), rng, trace);
}

std::vector<Vec> sample_batch(const StudentModel& m, const std::vector<Label>& labels,
                              const SamplerConfig& cfg, std::uint64_t seed) {
  const Rng base = Rng::from_seed(seed).fork(0x5a);
  std::vector<Vec> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    out[i] = sample_chain(m, labels[i], cfg, base.fork(i));
  return out;
}

double preservation_distance(const StudentModel& m, const std::vector<Label>& labels,
                             int steps_a, int steps_b, double gamma, double nu, double omega,
                             std::uint64_t seed) {
  if (labels.empty()) throw std::invalid_argument("preservation_distance: empty label set");
  const Rng base = Rng::from_seed(seed).fork(0x9d);
  SamplerConfig ca{steps_a, gamma, nu, omega};
  SamplerConfig cb{steps_b, gamma, nu, omega};
  double acc = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Rng chain = base.fork(i);
    Vec z0(std::size_t(m.dim));
    for (double& v : z0) v = m.sched.sigma_max * chain.normal();
    const Vec xa = sample_chain_from(m, labels[i], ca, z0, chain.fork(0));
    const Vec xb = sample_chain_from(m, labels[i], cb, z0, chain.fork(1));
    acc += l2_dist(xa, xb);
  }
  return acc / double(labels.size());
}

}  // namespace ctm
