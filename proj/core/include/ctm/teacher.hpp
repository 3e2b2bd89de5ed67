#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ctm/diffusion.hpp"
#include "ctm/mixture.hpp"
#include "ctm/net.hpp"

namespace ctm {

// Exact posterior mean E[z0 | z_t] for a diagonal Gaussian mixture observed
// under z_t = z0 + t * eps. Responsibilities go through log-sum-exp.
Vec analytic_denoise(const ConditionedMixture& mix, Label c, std::span<const double> z, double t);

// DSM weight; lambda(t) * c_out(t)^2 == 1, so the weighted objective trains
// the raw network output at unit scale.
double dsm_weight(double t, double sigma_data);

// Denoiser network with EDM preconditioning wrapped around it.
struct NeuralTeacher {
  int dim = 0;
  Schedule sched;
  MlpNet net;
  Embeddings emb;

  Vec raw_input(Label c, std::span<const double> z, double t) const;
  Vec denoise(Label c, std::span<const double> z, double t) const;
};

// Hidden activations at every layer, each rescaled to unit L2 norm
// (zero stays zero). One vector per hidden layer.
std::vector<Vec> teacher_features(const NeuralTeacher& nn, Label c, std::span<const double> z, double t);

struct FeatureTrace {
  MlpTrace mlp;
  std::vector<Vec> feats;
  std::vector<double> norms;
  double c_in = 0.0;
  int dim = 0;
};

std::vector<Vec> teacher_features_trace(const NeuralTeacher& nn, Label c, std::span<const double> z,
                                        double t, FeatureTrace& tr);

// d<seeds, features(z)>/dz given a captured trace.
Vec teacher_features_vjp(const NeuralTeacher& nn, const FeatureTrace& tr,
                         const std::vector<Vec>& seeds);

// Either the closed-form mixture denoiser or a trained network, behind one
// call surface. Feature extraction only exists for the neural variant.
struct TeacherModel {
  enum class Kind { analytic, neural };

  Kind kind = Kind::analytic;
  Schedule sched;
  std::optional<ConditionedMixture> mix;
  std::optional<NeuralTeacher> nn;

  static TeacherModel analytic(ConditionedMixture m, Schedule s);
  static TeacherModel neural(NeuralTeacher t);

  int dim() const;
  Vec denoise(Label c, std::span<const double> z, double t) const;

  // Empirical probability-flow ODE drift: (z_t - D(z_t, t)) / t.
  Vec pf_ode_rhs(Label c, std::span<const double> z, double t) const;

  const NeuralTeacher& neural_ref() const;  // throws for the analytic variant
};

struct TeacherTrainConfig {
  std::vector<int> hidden = {64, 64};
  int embed_dim = 32;
  double lr = 2.0e-3;
  int iters = 8000;
  int batch = 32;
  double p_uncond = 0.1;
  double p_mean = -1.2;
  double p_std = 1.2;
};

struct TeacherTrainRow {
  long iter = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double wall_ms = 0.0;
  std::uint64_t rng_cursor = 0;
};
using TeacherLogFn = std::function<void(const TeacherTrainRow&)>;

// Denoising score matching over the conditioned mixture with lambda(t)
// weighting, lognormal time draws and label dropout.
NeuralTeacher train_teacher(const ConditionedMixture& mix, const Schedule& sched,
                            const TeacherTrainConfig& cfg, std::uint64_t seed,
                            const TeacherLogFn& log = {});

}  // namespace ctm
