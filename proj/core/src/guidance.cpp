#include "ctm/guidance.hpp"

#include <cmath>
#include <stdexcept>

namespace ctm {

namespace {
constexpr double kMsFloor = 1.0e-16;  // (1e-8)^2, floor applied to mean square
constexpr double kLn10 = 2.302585092994046;

inline int clamp_idx(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }
}  // namespace

int default_window(int dim) {
  int w = dim / 8;
  if (w % 2 == 0) w += 1;
  return w < 3 ? 3 : w;
}

Vec savgol_weights(int half) {
  const double m = double(half);
  Vec w(std::size_t(2 * half + 1));
  const double denom = (2.0 * m - 1.0) * (2.0 * m + 1.0) * (2.0 * m + 3.0);
  for (int i = -half; i <= half; ++i)
    w[std::size_t(i + half)] = 3.0 * (3.0 * m * m + 3.0 * m - 1.0 - 5.0 * double(i) * double(i)) / denom;
  return w;
}

static void check_window(int n, int window) {
  if (window < 3 || window % 2 == 0) throw std::invalid_argument("intensity: window must be odd and >= 3");
  if (n < 2) throw std::invalid_argument("intensity: signal too short");
}

Vec intensity_feature(std::span<const double> x, int window) {
  const int n = int(x.size());
  check_window(n, window);
  const int half = window / 2;

  Vec db(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double ms = 0.0;
    for (int k = -half; k <= half; ++k) {
      const double v = x[std::size_t(clamp_idx(i + k, n))];
      ms += v * v;
    }
    ms /= double(window);
    db[std::size_t(i)] = 10.0 * std::log10(std::max(ms, kMsFloor));
  }

  const Vec w = savgol_weights(half);
  Vec out(std::size_t(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = -half; k <= half; ++k)
      out[std::size_t(i)] += w[std::size_t(k + half)] * db[std::size_t(clamp_idx(i + k, n))];
  return out;
}

Vec intensity_vjp(std::span<const double> x, int window, std::span<const double> upstream) {
  const int n = int(x.size());
  check_window(n, window);
  if (int(upstream.size()) != n) throw std::invalid_argument("intensity_vjp: upstream size mismatch");
  const int half = window / 2;
  const Vec w = savgol_weights(half);

  Vec ms(std::size_t(n), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int k = -half; k <= half; ++k) {
      const double v = x[std::size_t(clamp_idx(i + k, n))];
      ms[std::size_t(i)] += v * v;
    }
    ms[std::size_t(i)] /= double(window);
  }

  // adjoint of the smoothing convolution
  Vec g_db(std::size_t(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = -half; k <= half; ++k)
      g_db[std::size_t(clamp_idx(i + k, n))] += w[std::size_t(k + half)] * upstream[std::size_t(i)];

  // db = 10 log10(ms) above the floor, constant below it
  Vec g_ms(std::size_t(n), 0.0);
  for (int i = 0; i < n; ++i)
    if (ms[std::size_t(i)] > kMsFloor)
      g_ms[std::size_t(i)] = g_db[std::size_t(i)] * 10.0 / (kLn10 * ms[std::size_t(i)]);

  Vec gx(std::size_t(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = -half; k <= half; ++k) {
      const int j = clamp_idx(i + k, n);
      gx[std::size_t(j)] += g_ms[std::size_t(i)] * 2.0 * x[std::size_t(j)] / double(window);
    }
  return gx;
}

TargetShape parse_shape(const std::string& s) {
  if (s == "flat") return TargetShape::flat;
  if (s == "ramp-up") return TargetShape::ramp_up;
  if (s == "ramp-down") return TargetShape::ramp_down;
  if (s == "triangle") return TargetShape::triangle;
  if (s == "vee") return TargetShape::vee;
  if (s == "sine") return TargetShape::sine;
  throw std::invalid_argument("unknown target shape '" + s + "'");
}

const char* shape_name(TargetShape s) {
  switch (s) {
    case TargetShape::flat: return "flat";
    case TargetShape::ramp_up: return "ramp-up";
    case TargetShape::ramp_down: return "ramp-down";
    case TargetShape::triangle: return "triangle";
    case TargetShape::vee: return "vee";
    case TargetShape::sine: return "sine";
  }
  return "?";
}

Vec target_curve(TargetShape s, int frames, double lo_db, double hi_db) {
  if (frames < 2) throw std::invalid_argument("target_curve: need at least two frames");
  Vec y(static_cast<std::size_t>(frames));
  const double mid = 0.5 * (lo_db + hi_db);
  const double span = hi_db - lo_db;
  for (int i = 0; i < frames; ++i) {
    const double u = double(i) / double(frames - 1);
    double v = mid;
    switch (s) {
      case TargetShape::flat: v = mid; break;
      case TargetShape::ramp_up: v = lo_db + span * u; break;
      case TargetShape::ramp_down: v = hi_db - span * u; break;
      case TargetShape::triangle: v = lo_db + span * (1.0 - std::abs(2.0 * u - 1.0)); break;
      case TargetShape::vee: v = hi_db - span * (1.0 - std::abs(2.0 * u - 1.0)); break;
      case TargetShape::sine: v = mid + 0.5 * span * std::sin(6.283185307179586 * u); break;
    }
    y[std::size_t(i)] = v;
  }
  return y;
}

GuideMethod parse_method(const std::string& s) {
  if (s == "none") return GuideMethod::none;
  if (s == "loss-guidance") return GuideMethod::loss_guidance;
  if (s == "zt-opt") return GuideMethod::zt_opt;
  throw std::invalid_argument("unknown guidance method '" + s + "'");
}

const char* method_name(GuideMethod m) {
  switch (m) {
    case GuideMethod::none: return "none";
    case GuideMethod::loss_guidance: return "loss-guidance";
    case GuideMethod::zt_opt: return "zt-opt";
  }
  return "?";
}

static double curve_mse(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / double(a.size());
}

static GuideOutcome finish(Vec sample, std::span<const double> target, int window,
                           int skipped) {
  GuideOutcome out;
  out.achieved = intensity_feature(sample, window);
  out.mse = curve_mse(out.achieved, target);
  out.sample = std::move(sample);
  out.skipped_steps = skipped;
  return out;
}

GuideOutcome guided_chain(const StudentModel& m, Label c, const GuidanceConfig& cfg,
                          std::span<const double> target, Rng rng) {
  const int window = cfg.window > 0 ? cfg.window : default_window(m.dim);
  if (int(target.size()) != m.dim) throw std::invalid_argument("guided_chain: target/frame size mismatch");
  const LatentCodec codec;
  const KarrasGrid grid = karras_grid(m.sched, cfg.steps + 1);
  const double t_final = grid[cfg.steps];
  int skipped = 0;

  Vec z(std::size_t(m.dim));
  for (double& v : z) v = m.sched.sigma_max * rng.normal();

  for (int n = 0; n < cfg.steps; ++n) {
    const double t = grid[n];
    const double t_next = grid[n + 1];
    const double t_tilde =
        std::max(std::sqrt(1.0 - cfg.gamma * cfg.gamma) * t_next, m.sched.sigma_min);

    Vec z_tilde = blended_jump(m, c, cfg.nu, cfg.omega, z, t, t_tilde);

    if (cfg.rho_scale != 0.0) {
      JumpTrace tr;
      const Vec y_state = m.jump_trace(true, c, cfg.omega, z, t, t_final, tr);
      const Vec y_hat = intensity_feature(codec.decode(y_state), window);
      Vec d_y(y_hat.size());
      for (std::size_t i = 0; i < y_hat.size(); ++i)
        d_y[i] = 2.0 * (y_hat[i] - target[i]) / double(y_hat.size());
      const Vec d_state = intensity_vjp(y_state, window, d_y);
      const Vec g = m.jump_vjp(true, tr, d_state, nullptr);

      if (all_finite(g)) {
        if (cfg.rho_fixed) {
          axpy(-cfg.rho_scale, g, z_tilde);
        } else {
          const double gn = l2_norm(g);
          if (gn > 0.0) axpy(-cfg.rho_scale / gn, g, z_tilde);
        }
      } else {
        ++skipped;
      }
    }

    if (cfg.gamma > 0.0)
      for (double& v : z_tilde) v += cfg.gamma * t_next * rng.normal();
    z = std::move(z_tilde);
  }
  return finish(std::move(z), target, window, skipped);
}

GuideOutcome zt_optimize(const StudentModel& m, Label c, const GuidanceConfig& cfg,
                         std::span<const double> target, Rng rng) {
  const int window = cfg.window > 0 ? cfg.window : default_window(m.dim);
  if (int(target.size()) != m.dim) throw std::invalid_argument("zt_optimize: target/frame size mismatch");
  const double t0 = m.sched.sigma_max;
  const double t_final = m.sched.sigma_min;

  Vec z(std::size_t(m.dim));
  for (double& v : z) v = t0 * rng.normal();

  Adam opt;
  opt.lr = cfg.zt_lr;
  for (int it = 0; it < cfg.zt_iters; ++it) {
    JumpTrace tr_c, tr_u;
    Vec y_state;
    if (c && cfg.nu != 0.0 && cfg.nu != 1.0) {
      const Vec a = m.jump_trace(true, c, cfg.omega, z, t0, t_final, tr_c);
      const Vec b = m.jump_trace(true, {}, cfg.omega, z, t0, t_final, tr_u);
      y_state.resize(a.size());
      for (std::size_t j = 0; j < a.size(); ++j) y_state[j] = cfg.nu * a[j] + (1.0 - cfg.nu) * b[j];
    } else {
      const Label lbl = (!c || cfg.nu == 0.0) ? Label{} : c;
      y_state = m.jump_trace(true, lbl, cfg.omega, z, t0, t_final, tr_c);
    }
    const Vec y_hat = intensity_feature(y_state, window);
    Vec d_y(y_hat.size());
    for (std::size_t i = 0; i < y_hat.size(); ++i)
      d_y[i] = 2.0 * (y_hat[i] - target[i]) / double(y_hat.size());
    Vec d_state = intensity_vjp(y_state, window, d_y);

    Vec g;
    if (c && cfg.nu != 0.0 && cfg.nu != 1.0) {
      Vec up_c(d_state.size()), up_u(d_state.size());
      for (std::size_t j = 0; j < d_state.size(); ++j) {
        up_c[j] = cfg.nu * d_state[j];
        up_u[j] = (1.0 - cfg.nu) * d_state[j];
      }
      g = m.jump_vjp(true, tr_c, up_c, nullptr);
      const Vec gu = m.jump_vjp(true, tr_u, up_u, nullptr);
      axpy(1.0, gu, g);
    } else {
      g = m.jump_vjp(true, tr_c, d_state, nullptr);
    }
    opt.step(z, g);
  }

  SamplerConfig scfg{cfg.steps, cfg.gamma, cfg.nu, cfg.omega};
  Vec sample = sample_chain_from(m, c, scfg, std::move(z), rng.fork(1));
  return finish(std::move(sample), target, window, 0);
}

GuideOutcome guide_chain(const StudentModel& m, Label c, const GuidanceConfig& cfg,
                         std::span<const double> target, Rng rng) {
  switch (cfg.method) {
    case GuideMethod::none: {
      const int window = cfg.window > 0 ? cfg.window : default_window(m.dim);
      SamplerConfig scfg{cfg.steps, cfg.gamma, cfg.nu, cfg.omega};
      Vec sample = sample_chain(m, c, scfg, rng);
      return finish(std::move(sample), target, window, 0);
    }
    case GuideMethod::loss_guidance:
      return guided_chain(m, c, cfg, target, rng);
    case GuideMethod::zt_opt:
      return zt_optimize(m, c, cfg, target, rng);
  }
  throw std::logic_error("guide_chain: bad method");
}

}  // namespace ctm
