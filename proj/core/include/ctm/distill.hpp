#pragma once

#include <functional>

#include "ctm/solver.hpp"
#include "ctm/student.hpp"

namespace ctm {

enum class DistanceMode { l2_s_time, l2_zero_time, teacher_feature };

const char* distance_name(DistanceMode m);
DistanceMode parse_distance(const std::string& s);

struct DistillConfig {
  int grid_n = 40;
  double mu_ema = 0.999;
  double omega_min = 2.0;
  double omega_max = 5.0;
  double p_uncond = 0.1;
  double lr = 8.0e-5;
  int max_ode_steps = 39;
  DistanceMode distance = DistanceMode::teacher_feature;
  bool lambda_adaptive = true;
  double lambda_fixed = 1.0;
  int batch = 8;
  long iters = 20000;
  bool init_from_teacher = true;
  double p_mean = -1.2;  // lognormal half of the auxiliary-time mix
  double p_std = 1.2;
  double xi_max = 0.7;  // grid-warped uniform half
  long log_every = 1;
};

// One trajectory-consistency item: grid indices with t > u >= s (u collapses
// onto t when s == t), guidance weight, dropout flag, noise.
struct CtmDraw {
  int i_t = 0, i_s = 0, i_u = 0;
  double omega = 1.0;
  bool dropped = false;
  Vec eps;
};

struct DsmDraw {
  double t = 1.0;
  double omega = 1.0;
  bool dropped = false;
  Vec eps;
};

CtmDraw draw_ctm(const KarrasGrid& grid, const DistillConfig& cfg, int dim, Rng& rng);
DsmDraw draw_dsm(const Schedule& sched, const DistillConfig& cfg, int dim, Rng& rng);

// Loss (and optionally gradients w.r.t. the online parameters) for a single
// item under frozen draws. The target side runs the guided teacher solver and
// an EMA jump with no gradient flow; the estimate side is the online jump.
double ctm_item_loss(const StudentModel& student, const TeacherModel& teacher,
                     const KarrasGrid& grid, const DistillConfig& cfg,
                     std::span<const double> z0, Label label, const CtmDraw& d,
                     StudentGrads* grads);

// Unweighted reconstruction through g at equal jump times.
double dsm_item_loss(const StudentModel& student, std::span<const double> z0, Label label,
                     const DsmDraw& d, StudentGrads* grads);

// Same objective with an arbitrary denoiser substituted for g; lets tests
// evaluate the loss floor with the exact posterior mean.
using DenoiseFn = std::function<Vec(Label, std::span<const double>, double)>;
double dsm_item_loss_with(const DenoiseFn& g, std::span<const double> z0, Label label,
                          const DsmDraw& d);

// ||g_ctm|| / ||g_dsm|| over the final network layer; 0 on vanishing denominator.
double adaptive_lambda(const StudentGrads& g_ctm, const StudentGrads& g_dsm);

struct DistillLogRow {
  long iter = 0;
  double loss_ctm = 0.0;
  double loss_dsm = 0.0;
  double lambda = 0.0;
  double grad_norm = 0.0;
  double wall_ms = 0.0;
  std::uint64_t rng_cursor = 0;
};
using DistillLogFn = std::function<void(const DistillLogRow&)>;
using AbortFn = std::function<void(const StudentModel&)>;

// Per-iteration draw order, all from fork(seed).fork(1).fork(iter):
// for each batch item: label, data sample, ctm draw, dsm draw. The logged
// rng_cursor is the stream counter after the batch, so a row can be replayed.
StudentModel train_student(const TeacherModel& teacher, const ConditionedMixture& mix,
                           const StudentConfig& arch, const DistillConfig& cfg,
                           std::uint64_t seed, const DistillLogFn& log = {},
                           const AbortFn& on_abort = {});

}  // namespace ctm
