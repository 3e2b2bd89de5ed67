// Microbenchmarks for the hot paths: denoising, ODE segments, student jumps
// and their reverse passes, the optimizer step, and the evaluation metric.
#include <benchmark/benchmark.h>

#include "ctm/distill.hpp"
#include "ctm/eval.hpp"
#include "ctm/sampler.hpp"
#include "ctm/solver.hpp"
#include "ctm/student.hpp"
#include "ctm/teacher.hpp"

namespace {

using namespace ctm;

ConditionedMixture bench_mixture() { return ConditionedMixture::blobs(2, 4, 3, 1.5, 7); }

StudentModel bench_student() {
  StudentConfig sc;
  sc.dim = 2;
  sc.hidden = {128, 128};
  sc.num_labels = 4;
  return StudentModel::make(sc, 11);
}

void bm_analytic_denoise(benchmark::State& state) {
  auto mix = bench_mixture();
  TeacherModel teacher = TeacherModel::analytic(mix, Schedule{});
  Vec z = {0.7, -0.4};
  double t = 1.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(teacher.denoise(1, z, t));
    t = t * 1.0000001;
  }
}
BENCHMARK(bm_analytic_denoise);

void bm_heun_segment(benchmark::State& state) {
  auto mix = bench_mixture();
  TeacherModel teacher = TeacherModel::analytic(mix, Schedule{});
  KarrasGrid grid = karras_grid(Schedule{}, 40);
  Vec z = {30.0, -12.0};
  for (auto _ : state) benchmark::DoNotOptimize(heun_solve(teacher, std::nullopt, z, grid, 0, 8));
}
BENCHMARK(bm_heun_segment);

void bm_student_jump(benchmark::State& state) {
  StudentModel m = bench_student();
  Vec z = {1.0, 0.25};
  for (auto _ : state) benchmark::DoNotOptimize(m.jump(false, 2, 3.0, z, 5.0, 0.1));
}
BENCHMARK(bm_student_jump);

void bm_student_jump_vjp(benchmark::State& state) {
  StudentModel m = bench_student();
  Vec z = {1.0, 0.25};
  Vec up = {0.3, -0.8};
  JumpTrace tr;
  m.jump_trace(false, 2, 3.0, z, 5.0, 0.1, tr);
  StudentGrads g = m.zero_grads();
  for (auto _ : state) benchmark::DoNotOptimize(m.jump_vjp(false, tr, up, &g));
}
BENCHMARK(bm_student_jump_vjp);

void bm_radam_step(benchmark::State& state) {
  StudentModel m = bench_student();
  StudentGrads g = m.zero_grads();
  for (double& x : g.net.layers[0].w) x = 1e-3;
  RAdam opt;
  opt.lr = 1e-4;
  std::vector<ParamView> params = {{"w0", m.net.layers[0].w, g.net.layers[0].w},
                                   {"b0", m.net.layers[0].b, g.net.layers[0].b}};
  for (auto _ : state) opt.step(params);
}
BENCHMARK(bm_radam_step);

void bm_energy_distance(benchmark::State& state) {
  Rng rng = Rng::from_seed(5);
  std::vector<Vec> a, b;
  for (int i = 0; i < 256; ++i) {
    a.push_back({rng.normal(), rng.normal()});
    b.push_back({rng.normal() + 0.3, rng.normal()});
  }
  for (auto _ : state) benchmark::DoNotOptimize(energy_distance(a, b));
}
BENCHMARK(bm_energy_distance);

}  // namespace

BENCHMARK_MAIN();
