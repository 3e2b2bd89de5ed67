#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "ctm/eval.hpp"

using namespace ctm;

namespace {

ConditionedMixture split_1d() {
  ConditionedMixture mix;
  mix.dim = 1;
  mix.by_label = {
      {{1.0, {-2.0}, {0.25}}},
      {{1.0, {2.0}, {0.25}}},
  };
  mix.validate();
  return mix;
}

StudentModel tiny_student(int dim, int labels, std::uint64_t seed) {
  StudentConfig sc;
  sc.dim = dim;
  sc.hidden = {8};
  sc.embed_dim = 8;
  sc.num_labels = labels;
  return StudentModel::make(sc, seed);
}

}  // namespace

TEST_CASE("eval: energy distance closed forms") {
  // point masses: 2 |p - q|
  std::vector<Vec> a(5, Vec{1.0, 0.0});
  std::vector<Vec> b(3, Vec{4.0, 4.0});
  CHECK(energy_distance(a, b) == doctest::Approx(2.0 * 5.0).epsilon(1e-14));

  // hand-computed small case: a = {0, 2}, b = {1}
  std::vector<Vec> c = {{0.0}, {2.0}};
  std::vector<Vec> d = {{1.0}};
  // cross = 1, within_a = 2 * 2 / 4 = 1, within_b = 0
  CHECK(energy_distance(c, d) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("eval: energy distance is a metric-like score") {
  Rng rng = Rng::from_seed(50);
  auto draw = [&](double shift, int n) {
    std::vector<Vec> out;
    for (int i = 0; i < n; ++i) out.push_back({shift + rng.normal(), rng.normal()});
    return out;
  };
  std::vector<Vec> a = draw(0.0, 40);
  std::vector<Vec> b = draw(0.0, 40);
  std::vector<Vec> far = draw(6.0, 40);

  CHECK(energy_distance(a, a) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(energy_distance(a, b) == doctest::Approx(energy_distance(b, a)).epsilon(1e-12));
  CHECK(energy_distance(a, b) >= 0.0);
  // same-law sets sit close to zero; a 6-sigma shift dominates them
  CHECK(energy_distance(a, far) > 10.0 * energy_distance(a, b));

  CHECK_THROWS_AS(energy_distance({}, a), std::invalid_argument);
  CHECK_THROWS_AS(energy_distance(a, {}), std::invalid_argument);
}

TEST_CASE("eval: condition accuracy against the exact posterior rule") {
  ConditionedMixture mix = split_1d();
  // boundary at zero: sign decides the Bayes label
  std::vector<Vec> samples = {{-1.9}, {-2.5}, {1.8}, {0.1}, {-0.1}};
  std::vector<int> intended = {0, 0, 1, 1, 0};
  CHECK(condition_accuracy(mix, samples, intended) == doctest::Approx(1.0));

  std::vector<int> wrong = {1, 0, 1, 0, 0};
  CHECK(condition_accuracy(mix, samples, wrong) == doctest::Approx(3.0 / 5.0));

  CHECK_THROWS_AS(condition_accuracy(mix, samples, {0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(condition_accuracy(mix, {}, {}), std::invalid_argument);
}

TEST_CASE("eval: label draws are uniform and replayable") {
  std::vector<int> l = draw_labels(20000, 4, 9);
  std::vector<int> counts(4, 0);
  for (int v : l) {
    REQUIRE(v >= 0);
    REQUIRE(v < 4);
    counts[std::size_t(v)]++;
  }
  for (int c : counts) CHECK(std::abs(c - 5000) < 300);
  CHECK(draw_labels(20000, 4, 9) == l);
  CHECK(draw_labels(10, 4, 10) != draw_labels(10, 4, 11));
}

TEST_CASE("eval: data draws are per-index streams") {
  ConditionedMixture mix = split_1d();
  std::vector<int> labels = {0, 1, 0, 1, 1};
  auto full = draw_data(mix, labels, 31);
  auto prefix = draw_data(mix, {0, 1, 0}, 31);
  REQUIRE(full.size() == 5);
  for (std::size_t i = 0; i < 3; ++i) CHECK(prefix[i] == full[i]);
  // labels steer the draw
  for (std::size_t i = 0; i < full.size(); ++i)
    CHECK(std::abs(full[i][0] - (labels[i] == 0 ? -2.0 : 2.0)) < 3.0);
}

TEST_CASE("eval: ODE batch lands on the right mode") {
  ConditionedMixture mix = split_1d();
  TeacherModel teacher = TeacherModel::analytic(mix, Schedule{});
  std::vector<int> labels = draw_labels(50, 2, 3);
  auto gen = teacher_sample_batch(teacher, labels, 18, 1.0, 77);
  REQUIRE(gen.size() == 50);
  CHECK(condition_accuracy(mix, gen, labels) == doctest::Approx(1.0));
  // well within the +-2 modes, sd 0.5
  for (std::size_t i = 0; i < gen.size(); ++i)
    CHECK(std::abs(gen[i][0] - (labels[i] == 0 ? -2.0 : 2.0)) < 2.0);

  CHECK_THROWS_AS(teacher_sample_batch(teacher, labels, 0, 1.0, 77), std::invalid_argument);
}

TEST_CASE("eval: tradeoff report shape and determinism") {
  ConditionedMixture mix = split_1d();
  TeacherModel teacher = TeacherModel::analytic(mix, Schedule{});
  StudentModel student = tiny_student(1, 2, 61);

  EvalConfig cfg;
  cfg.steps_list = {1, 2};
  cfg.count = 24;
  cfg.teacher_steps = 6;

  auto rows = tradeoff_report(student, &teacher, mix, cfg, 5);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].kind == "student");
  CHECK(rows[0].steps == 1);
  CHECK(rows[0].preserve_vs_1 == 0.0);
  CHECK(rows[1].kind == "student");
  CHECK(rows[1].steps == 2);
  CHECK(rows[1].preserve_vs_1 > 0.0);
  CHECK(rows[2].kind == "teacher");
  CHECK(rows[2].steps == 6);
  CHECK(rows[2].preserve_vs_1 == 0.0);
  for (const auto& r : rows) {
    CHECK(std::isfinite(r.energy));
    CHECK(r.cond_acc >= 0.0);
    CHECK(r.cond_acc <= 1.0);
    CHECK(r.wall_ms >= 0.0);
    CHECK(r.omega == cfg.omega);
  }
  // the analytic ODE teacher nails the conditioning even at 6 steps
  CHECK(rows[2].cond_acc == doctest::Approx(1.0));

  // identical modulo wall time
  auto again = tradeoff_report(student, &teacher, mix, cfg, 5);
  REQUIRE(again.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(again[i].energy == rows[i].energy);
    CHECK(again[i].cond_acc == rows[i].cond_acc);
    CHECK(again[i].preserve_vs_1 == rows[i].preserve_vs_1);
  }

  // no teacher row without a teacher
  auto no_teacher = tradeoff_report(student, nullptr, mix, cfg, 5);
  CHECK(no_teacher.size() == 2);
  cfg.include_teacher = false;
  CHECK(tradeoff_report(student, &teacher, mix, cfg, 5).size() == 2);

  EvalConfig bad = cfg;
  bad.count = 1;
  CHECK_THROWS_AS(tradeoff_report(student, &teacher, mix, bad, 5), std::invalid_argument);
}
