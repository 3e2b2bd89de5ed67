#pragma once

#include "ctm/student.hpp"

namespace ctm {

struct SamplerConfig {
  int steps = 16;
  double gamma = 0.0;  // 0 = deterministic jumps, 1 = anytime-to-floor with full renoise
  double nu = 1.0;     // guidance blend: nu * G(c) + (1 - nu) * G(null); may exceed 1
  double omega = 3.5;

  void validate() const;
};

struct ChainTrace {
  std::vector<double> grid_times;    // strictly decreasing, ends at sigma_min
  std::vector<double> jump_targets;  // clamped t~ per step
  std::vector<Vec> states;           // state after each step's renoise
};

// nu * G_ema(c) + (1 - nu) * G_ema(null); single branch when nu is 0 or 1 or
// the label is already null, so those cases are bit-exact.
Vec blended_jump(const StudentModel& m, Label c, double nu, double omega,
                 std::span<const double> z, double t, double s);

// One chain of the gamma/nu sampler over karras_grid(steps + 1): per step
// jump to t~ = sqrt(1 - gamma^2) t_next (floored at sigma_min), then renoise
// back up to t_next. All jumps use the EMA weights.
Vec sample_chain(const StudentModel& m, Label c, const SamplerConfig& cfg, Rng rng,
                 ChainTrace* trace = nullptr);

// Same, but the initial state at grid[0] is supplied by the caller.
Vec sample_chain_from(const StudentModel& m, Label c, const SamplerConfig& cfg, Vec z0_state,
                      Rng rng, ChainTrace* trace = nullptr);

// Chain i draws from fork(seed).fork(0x5a).fork(i), so batch order is free.
std::vector<Vec> sample_batch(const StudentModel& m, const std::vector<Label>& labels,
                              const SamplerConfig& cfg, std::uint64_t seed);

// Mean L2 between end states of runs at two step counts, sharing the initial
// noise per chain (renoise draws stay per-run).
double preservation_distance(const StudentModel& m, const std::vector<Label>& labels,
                             int steps_a, int steps_b, double gamma, double nu, double omega,
                             std::uint64_t seed);

}  // namespace ctm
