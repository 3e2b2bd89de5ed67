#pragma once

#include "ctm/sampler.hpp"

namespace ctm {

// Frames-long intensity curve: sliding-window RMS (edge samples replicated),
// 20*log10 with the RMS floored at 1e-8, then quadratic Savitzky-Golay
// smoothing over the same window. One frame per sample position.
int default_window(int dim);  // dim / 8, bumped to the next odd, at least 3
Vec intensity_feature(std::span<const double> x, int window);

// d<upstream, intensity_feature(x)>/dx
Vec intensity_vjp(std::span<const double> x, int window, std::span<const double> upstream);

// Symmetric quadratic-fit smoothing weights, window = 2m + 1.
Vec savgol_weights(int half);

enum class TargetShape { flat, ramp_up, ramp_down, triangle, vee, sine };
TargetShape parse_shape(const std::string& s);
const char* shape_name(TargetShape s);
Vec target_curve(TargetShape s, int frames, double lo_db, double hi_db);

enum class GuideMethod { none, loss_guidance, zt_opt };
GuideMethod parse_method(const std::string& s);
const char* method_name(GuideMethod m);

struct GuidanceConfig {
  GuideMethod method = GuideMethod::loss_guidance;
  int steps = 16;
  double gamma = 0.0;
  double nu = 1.0;
  double omega = 3.5;
  int window = 0;  // 0 -> default_window(dim)
  bool rho_fixed = false;  // false: step = rho_scale * g / |g|; true: rho_scale * g
  double rho_scale = 1.0;
  int zt_iters = 70;
  double zt_lr = 1.0;
};

struct GuideOutcome {
  Vec sample;
  Vec achieved;  // intensity curve of the final sample
  double mse = 0.0;
  int skipped_steps = 0;  // corrections dropped due to non-finite gradients
};

// Per-step loss guidance: before each renoise, take the full conditional jump
// from the current state to the final time, measure the feature loss there and
// push its input gradient into the freshly jumped state.
GuideOutcome guided_chain(const StudentModel& m, Label c, const GuidanceConfig& cfg,
                          std::span<const double> target, Rng rng);

// Optimize the initial noise against the 1-step generation, then run the
// usual multistep sampler from the optimized start.
GuideOutcome zt_optimize(const StudentModel& m, Label c, const GuidanceConfig& cfg,
                         std::span<const double> target, Rng rng);

// Dispatch on cfg.method; GuideMethod::none samples plainly and just measures.
GuideOutcome guide_chain(const StudentModel& m, Label c, const GuidanceConfig& cfg,
                         std::span<const double> target, Rng rng);

}  // namespace ctm
