#include "ctm/eval.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace ctm {

double energy_distance(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("energy_distance: empty sample set");
  const std::size_t n = a.size(), m = b.size();

  double cross = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) cross += l2_dist(a[i], b[j]);
  cross /= double(n) * double(m);

  double within_a = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) within_a += l2_dist(a[i], a[j]);
  within_a = 2.0 * within_a / (double(n) * double(n));

  double within_b = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) within_b += l2_dist(b[i], b[j]);
  within_b = 2.0 * within_b / (double(m) * double(m));

  return 2.0 * cross - within_a - within_b;
}

double condition_accuracy(const ConditionedMixture& mix, const std::vector<Vec>& samples,
                          const std::vector<int>& intended) {
  if (samples.size() != intended.size())
    throw std::invalid_argument("condition_accuracy: samples/labels size mismatch");
  if (samples.empty()) throw std::invalid_argument("condition_accuracy: empty sample set");
  int hits = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    int best = 0;
    double best_lp = -std::numeric_limits<double>::infinity();
    for (int l = 0; l < mix.num_labels(); ++l) {
      const double lp = mix.log_density(l, samples[i]);
      if (lp > best_lp) {
        best_lp = lp;
        best = l;
      }
    }
    if (best == intended[i]) ++hits;
  }
  return double(hits) / double(samples.size());
}

std::vector<int> draw_labels(int count, int num_labels, std::uint64_t seed) {
  Rng rng = Rng::from_seed(seed).fork(0x1ab);
  std::vector<int> out(static_cast<std::size_t>(count));
  for (int& l : out) l = int(rng.uniform_int(std::uint64_t(num_labels)));
  return out;
}

std::vector<Vec> draw_data(const ConditionedMixture& mix, const std::vector<int>& labels,
                           std::uint64_t seed) {
  const Rng base = Rng::from_seed(seed).fork(0xda7a);
  std::vector<Vec> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Rng rng = base.fork(i);
    out[i] = mix.sample(labels[i], rng);
  }
  return out;
}

std::vector<Vec> teacher_sample_batch(const TeacherModel& teacher,
                                      const std::vector<int>& labels, int steps, double omega,
                                      std::uint64_t seed) {
  if (steps < 1) throw std::invalid_argument("teacher_sample_batch: steps must be >= 1");
  const KarrasGrid grid = karras_grid(teacher.sched, steps + 1);
  const Rng base = Rng::from_seed(seed).fork(0x7ea);
  std::vector<Vec> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Rng rng = base.fork(i);
    Vec z(std::size_t(teacher.dim()));
    for (double& v : z) v = teacher.sched.sigma_max * rng.normal();
    out[i] = cfg_solve(teacher, labels[i], omega, std::move(z), grid, 0, steps);
  }
  return out;
}

std::vector<TradeoffRow> tradeoff_report(const StudentModel& student, const TeacherModel* teacher,
                                         const ConditionedMixture& mix, const EvalConfig& cfg,
                                         std::uint64_t seed) {
  if (cfg.count < 2) throw std::invalid_argument("tradeoff_report: count too small");
  const std::vector<int> gen_labels = draw_labels(cfg.count, mix.num_labels(), seed ^ 0x11);
  const std::vector<int> ref_labels = draw_labels(cfg.count, mix.num_labels(), seed ^ 0x22);
  const std::vector<Vec> held_out = draw_data(mix, ref_labels, seed ^ 0x33);

  std::vector<Label> gen_as_labels(gen_labels.size());
  for (std::size_t i = 0; i < gen_labels.size(); ++i) gen_as_labels[i] = gen_labels[i];

  std::vector<TradeoffRow> rows;
  for (int steps : cfg.steps_list) {
    const auto t_start = std::chrono::steady_clock::now();
    SamplerConfig scfg{steps, cfg.gamma, cfg.nu, cfg.omega};
    const std::vector<Vec> gen = sample_batch(student, gen_as_labels, scfg, seed ^ 0x44);
    const auto t_end = std::chrono::steady_clock::now();

    TradeoffRow r;
    r.kind = "student";
    r.steps = steps;
    r.omega = cfg.omega;
    r.nu = cfg.nu;
    r.gamma = cfg.gamma;
    r.energy = energy_distance(gen, held_out);
    r.cond_acc = condition_accuracy(mix, gen, gen_labels);
    r.preserve_vs_1 =
        steps == 1 ? 0.0
                   : preservation_distance(student, gen_as_labels, 1, steps, cfg.gamma, cfg.nu,
                                           cfg.omega, seed ^ 0x55);
    r.wall_ms = std::chrono::duration<double, std::milli>(t_end - t_start).count();
    rows.push_back(std::move(r));
  }

  if (cfg.include_teacher && teacher) {
    const auto t_start = std::chrono::steady_clock::now();
    const std::vector<Vec> gen =
        teacher_sample_batch(*teacher, gen_labels, cfg.teacher_steps, cfg.omega, seed ^ 0x44);
    const auto t_end = std::chrono::steady_clock::now();
    TradeoffRow r;
    r.kind = "teacher";
    r.steps = cfg.teacher_steps;
    r.omega = cfg.omega;
    r.nu = 1.0;
    r.gamma = 0.0;
    r.energy = energy_distance(gen, held_out);
    r.cond_acc = condition_accuracy(mix, gen, gen_labels);
    r.preserve_vs_1 = 0.0;
    r.wall_ms = std::chrono::duration<double, std::milli>(t_end - t_start).count();
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace ctm
