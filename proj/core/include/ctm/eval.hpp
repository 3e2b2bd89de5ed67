#pragma once

#include "ctm/sampler.hpp"
#include "ctm/solver.hpp"

namespace ctm {

// Energy distance 2 E|a-b| - E|a-a'| - E|b-b'| over all pairs (V-statistic);
// nonnegative, zero iff the empirical sets coincide.
double energy_distance(const std::vector<Vec>& a, const std::vector<Vec>& b);

// Fraction of samples whose Bayes-optimal label (uniform prior, exact mixture
// densities) matches the intended one.
double condition_accuracy(const ConditionedMixture& mix, const std::vector<Vec>& samples,
                          const std::vector<int>& intended);

std::vector<int> draw_labels(int count, int num_labels, std::uint64_t seed);
std::vector<Vec> draw_data(const ConditionedMixture& mix, const std::vector<int>& labels,
                           std::uint64_t seed);

// Guided-ODE teacher samples: Heun over karras_grid(steps + 1) from the prior.
std::vector<Vec> teacher_sample_batch(const TeacherModel& teacher,
                                      const std::vector<int>& labels, int steps, double omega,
                                      std::uint64_t seed);

struct EvalConfig {
  std::vector<int> steps_list = {1, 2, 4, 8, 16};
  double omega = 3.5;
  double nu = 1.0;
  double gamma = 0.0;
  int count = 2000;
  int teacher_steps = 18;
  bool include_teacher = true;
};

struct TradeoffRow {
  std::string kind;  // "student" or "teacher"
  int steps = 0;
  double omega = 0.0, nu = 0.0, gamma = 0.0;
  double energy = 0.0;
  double cond_acc = 0.0;
  double preserve_vs_1 = 0.0;  // 0 for the 1-step row and for the teacher
  double wall_ms = 0.0;
};

// Sample-quality/step-count sweep against one held-out draw; teacher row
// appended when requested and a teacher is supplied.
std::vector<TradeoffRow> tradeoff_report(const StudentModel& student, const TeacherModel* teacher,
                                         const ConditionedMixture& mix, const EvalConfig& cfg,
                                         std::uint64_t seed);

}  // namespace ctm
