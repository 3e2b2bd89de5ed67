#include "ctm/distill.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace ctm {

const char* distance_name(DistanceMode m) {
  switch (m) {
    case DistanceMode::l2_s_time: return "l2_s_time";
    case DistanceMode::l2_zero_time: return "l2_zero_time";
    case DistanceMode::teacher_feature: return "teacher_feature";
  }
  return "?";
}

DistanceMode parse_distance(const std::string& s) {
  if (s == "l2_s_time") return DistanceMode::l2_s_time;
  if (s == "l2_zero_time") return DistanceMode::l2_zero_time;
  if (s == "teacher_feature") return DistanceMode::teacher_feature;
  throw std::invalid_argument("unknown distance mode '" + s + "'");
}

CtmDraw draw_ctm(const KarrasGrid& grid, const DistillConfig& cfg, int dim, Rng& rng) {
  const int n = grid.size();
  CtmDraw d;
  d.i_t = int(rng.uniform_int(std::uint64_t(n)));
  d.i_s = d.i_t + int(rng.uniform_int(std::uint64_t(n - d.i_t)));
  if (d.i_s > d.i_t) {
    const int hi = std::min(d.i_s, d.i_t + cfg.max_ode_steps);
    d.i_u = d.i_t + 1 + int(rng.uniform_int(std::uint64_t(hi - d.i_t)));
  } else {
    d.i_u = d.i_t;
  }
  d.omega = rng.uniform(cfg.omega_min, cfg.omega_max);
  d.dropped = rng.uniform() < cfg.p_uncond;
  d.eps.resize(std::size_t(dim));
  for (double& e : d.eps) e = rng.normal();
  return d;
}

DsmDraw draw_dsm(const Schedule& sched, const DistillConfig& cfg, int dim, Rng& rng) {
  DsmDraw d;
  if (rng.uniform() < 0.5)
    d.t = lognormal_time(cfg.p_mean, cfg.p_std, rng);
  else
    d.t = karras_uniform_time(rng.uniform(0.0, cfg.xi_max), sched);
  d.omega = rng.uniform(cfg.omega_min, cfg.omega_max);
  d.dropped = rng.uniform() < cfg.p_uncond;
  d.eps.resize(std::size_t(dim));
  for (double& e : d.eps) e = rng.normal();
  return d;
}

double ctm_item_loss(const StudentModel& student, const TeacherModel& teacher,
                     const KarrasGrid& grid, const DistillConfig& cfg,
                     std::span<const double> z0, Label label, const CtmDraw& d,
                     StudentGrads* grads) {
  if (d.i_t > d.i_u || d.i_u > d.i_s || d.i_s >= grid.size())
    throw std::invalid_argument("ctm_item_loss: draw indices violate t > u >= s ordering");
  const double t = grid[d.i_t];
  const double s = grid[d.i_s];
  const double u = grid[d.i_u];
  const Label c = d.dropped ? Label{} : label;

  const Vec zt = add_noise(z0, t, d.eps);

  // target branch, no gradient: guided solver t -> u, then EMA jump u -> s
  Vec sol = (d.i_u == d.i_t) ? zt : cfg_solve(teacher, c, d.omega, zt, grid, d.i_t, d.i_u);
  const Vec z_target = student.jump(true, c, d.omega, sol, u, s);

  // estimate branch: online jump t -> s
  JumpTrace est_tr;
  const Vec z_est = student.jump_trace(false, c, d.omega, zt, t, s, est_tr);

  double loss = 0.0;
  Vec d_est(z_est.size(), 0.0);  // dL/dz_est

  switch (cfg.distance) {
    case DistanceMode::l2_s_time: {
      loss = sq_dist(z_target, z_est);
      for (std::size_t j = 0; j < z_est.size(); ++j) d_est[j] = 2.0 * (z_est[j] - z_target[j]);
      break;
    }
    case DistanceMode::l2_zero_time: {
      const double t0 = student.sched.sigma_min;
      const Vec a = student.jump(true, c, d.omega, z_target, s, t0);
      JumpTrace btr;
      const Vec b = student.jump_trace(true, c, d.omega, z_est, s, t0, btr);
      loss = sq_dist(a, b);
      Vec up(b.size());
      for (std::size_t j = 0; j < b.size(); ++j) up[j] = 2.0 * (b[j] - a[j]);
      d_est = student.jump_vjp(true, btr, up, nullptr);
      break;
    }
    case DistanceMode::teacher_feature: {
      const NeuralTeacher& nn = teacher.neural_ref();
      const std::vector<Vec> f_tgt = teacher_features(nn, c, z_target, s);
      FeatureTrace ftr;
      const std::vector<Vec> f_est = teacher_features_trace(nn, c, z_est, s, ftr);
      std::vector<Vec> seeds(f_est.size());
      for (std::size_t m = 0; m < f_est.size(); ++m) {
        loss += sq_dist(f_tgt[m], f_est[m]);
        seeds[m].resize(f_est[m].size());
        for (std::size_t i = 0; i < f_est[m].size(); ++i)
          seeds[m][i] = 2.0 * (f_est[m][i] - f_tgt[m][i]);
      }
      d_est = teacher_features_vjp(nn, ftr, seeds);
      break;
    }
  }

  if (grads) student.jump_vjp(false, est_tr, d_est, grads);
  return loss;
}

double dsm_item_loss(const StudentModel& student, std::span<const double> z0, Label label,
                     const DsmDraw& d, StudentGrads* grads) {
  const Label c = d.dropped ? Label{} : label;
  const Vec zt = add_noise(z0, d.t, d.eps);
  JumpTrace tr;
  const Vec g = student.g_theta_trace(false, c, d.omega, zt, d.t, d.t, tr);
  double loss = 0.0;
  Vec up(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double r = g[j] - z0[j];
    loss += r * r;
    up[j] = 2.0 * r;
  }
  if (grads) student.g_vjp(false, tr, up, grads);
  return loss;
}

double dsm_item_loss_with(const DenoiseFn& g, std::span<const double> z0, Label label,
                          const DsmDraw& d) {
  const Label c = d.dropped ? Label{} : label;
  const Vec zt = add_noise(z0, d.t, d.eps);
  const Vec gz = g(c, zt, d.t);
  return sq_dist(gz, z0);
}

double adaptive_lambda(const StudentGrads& g_ctm, const StudentGrads& g_dsm) {
  const DenseLayer& a = g_ctm.net.layers.back();
  const DenseLayer& b = g_dsm.net.layers.back();
  const double na = std::sqrt(dot(a.w, a.w) + dot(a.b, a.b));
  const double nb = std::sqrt(dot(b.w, b.w) + dot(b.b, b.b));
  if (nb == 0.0) return 0.0;
  return na / nb;
}

StudentModel train_student(const TeacherModel& teacher, const ConditionedMixture& mix,
                           const StudentConfig& arch, const DistillConfig& cfg,
                           std::uint64_t seed, const DistillLogFn& log, const AbortFn& on_abort) {
  if (cfg.batch <= 0 || cfg.iters < 0) throw std::invalid_argument("train_student: bad batch/iters");
  if (arch.dim != teacher.dim() || arch.dim != mix.dim)
    throw std::invalid_argument("train_student: dimension mismatch between student, teacher and data");
  if (cfg.distance == DistanceMode::teacher_feature && teacher.kind != TeacherModel::Kind::neural)
    throw std::invalid_argument("train_student: teacher_feature distance needs a neural teacher");

  StudentModel student = StudentModel::make(arch, seed);
  if (cfg.init_from_teacher && teacher.kind == TeacherModel::Kind::neural)
    init_student_from_teacher(student, teacher.neural_ref());

  const KarrasGrid grid = karras_grid(arch.sched, cfg.grid_n);
  Rng root = Rng::from_seed(seed);
  RAdam opt;
  opt.lr = cfg.lr;
  const int L = mix.num_labels();

  for (long iter = 0; iter < cfg.iters; ++iter) {
    const auto t_start = std::chrono::steady_clock::now();
    Rng it_rng = root.fork(1).fork(std::uint64_t(iter));

    StudentGrads g_ctm = student.zero_grads();
    StudentGrads g_dsm = student.zero_grads();
    double loss_ctm = 0.0, loss_dsm = 0.0;
    const double inv_b = 1.0 / double(cfg.batch);

    for (int b = 0; b < cfg.batch; ++b) {
      const int label = int(it_rng.uniform_int(std::uint64_t(L)));
      const Vec z0 = mix.sample(label, it_rng);
      const CtmDraw cd = draw_ctm(grid, cfg, arch.dim, it_rng);
      const DsmDraw dd = draw_dsm(arch.sched, cfg, arch.dim, it_rng);
      loss_ctm += inv_b * ctm_item_loss(student, teacher, grid, cfg, z0, label, cd, &g_ctm);
      loss_dsm += inv_b * dsm_item_loss(student, z0, label, dd, &g_dsm);
    }
    g_ctm.scale(inv_b);
    g_dsm.scale(inv_b);

    const double lambda = cfg.lambda_adaptive ? adaptive_lambda(g_ctm, g_dsm) : cfg.lambda_fixed;

    StudentGrads g_total = g_ctm;
    g_total.add_scaled(g_dsm, lambda);
    const double grad_norm = std::sqrt(g_total.sq_norm());

    if (!std::isfinite(loss_ctm) || !std::isfinite(loss_dsm) || !std::isfinite(grad_norm)) {
      if (on_abort) on_abort(student);
      throw std::runtime_error("train_student: non-finite loss/gradient at iter " + std::to_string(iter));
    }

    std::vector<ParamView> blocks;
    for (std::size_t l = 0; l < student.net.layers.size(); ++l) {
      blocks.push_back({"net." + std::to_string(l) + ".w", student.net.layers[l].w, g_total.net.layers[l].w});
      blocks.push_back({"net." + std::to_string(l) + ".b", student.net.layers[l].b, g_total.net.layers[l].b});
    }
    blocks.push_back({"emb.cond", student.emb.cond, g_total.cond});
    try {
      opt.step(blocks);
    } catch (const std::exception&) {
      if (on_abort) on_abort(student);
      throw;
    }
    ema_update(student, cfg.mu_ema);

    if (log && (iter % cfg.log_every == 0 || iter + 1 == cfg.iters)) {
      const auto t_end = std::chrono::steady_clock::now();
      DistillLogRow row;
      row.iter = iter;
      row.loss_ctm = loss_ctm;
      row.loss_dsm = loss_dsm;
      row.lambda = lambda;
      row.grad_norm = grad_norm;
      row.wall_ms = std::chrono::duration<double, std::milli>(t_end - t_start).count();
      row.rng_cursor = it_rng.counter;
      log(row);
    }
  }
  return student;
}

}  // namespace ctm
