#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ctm/mixture.hpp"

using namespace ctm;

namespace {

ConditionedMixture two_label_1d() {
  ConditionedMixture mix;
  mix.dim = 1;
  mix.by_label = {
      {{1.0, {-2.0}, {0.25}}},
      {{0.5, {1.0}, {0.5}}, {0.5, {3.0}, {0.5}}},
  };
  return mix;
}

double gauss1_logpdf(double x, double mu, double var) {
  return -0.5 * std::log(2.0 * M_PI * var) - 0.5 * (x - mu) * (x - mu) / var;
}

}  // namespace

TEST_CASE("mixture: log density matches closed forms") {
  ConditionedMixture mix = two_label_1d();
  mix.validate();
  Vec x = {0.7};
  CHECK(mix.log_density(0, x) == doctest::Approx(gauss1_logpdf(0.7, -2.0, 0.25)).epsilon(1e-12));

  const double comp = std::log(0.5 * std::exp(gauss1_logpdf(0.7, 1.0, 0.5)) +
                               0.5 * std::exp(gauss1_logpdf(0.7, 3.0, 0.5)));
  CHECK(mix.log_density(1, x) == doctest::Approx(comp).epsilon(1e-12));
}

TEST_CASE("mixture: marginal density averages the label conditionals") {
  ConditionedMixture mix = two_label_1d();
  for (double xv : {-3.0, -0.5, 0.0, 1.7, 4.0}) {
    Vec x = {xv};
    const double want = std::log(0.5 * std::exp(mix.log_density(0, x)) +
                                 0.5 * std::exp(mix.log_density(1, x)));
    CHECK(mix.log_density(std::nullopt, x) == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("mixture: sampling matches component moments") {
  ConditionedMixture mix;
  mix.dim = 2;
  mix.by_label = {{{1.0, {1.0, -2.0}, {0.25, 4.0}}}};
  Rng rng = Rng::from_seed(5);
  const int n = 200000;
  Vec mean(2, 0.0), var(2, 0.0);
  for (int i = 0; i < n; ++i) {
    Vec x = mix.sample(0, rng);
    for (int j = 0; j < 2; ++j) mean[j] += x[j];
  }
  for (double& m : mean) m /= n;
  Rng rng2 = Rng::from_seed(5);
  for (int i = 0; i < n; ++i) {
    Vec x = mix.sample(0, rng2);
    for (int j = 0; j < 2; ++j) var[j] += (x[j] - mean[j]) * (x[j] - mean[j]);
  }
  for (double& v : var) v /= n;
  CHECK(mean[0] == doctest::Approx(1.0).epsilon(0.01));
  CHECK(mean[1] == doctest::Approx(-2.0).epsilon(0.01));
  CHECK(var[0] == doctest::Approx(0.25).epsilon(0.02));
  CHECK(var[1] == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("mixture: component weights drive the sampler") {
  ConditionedMixture mix;
  mix.dim = 1;
  mix.by_label = {{{0.25, {-10.0}, {0.01}}, {0.75, {10.0}, {0.01}}}};
  Rng rng = Rng::from_seed(6);
  int right = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i)
    if (mix.sample(0, rng)[0] > 0.0) ++right;
  CHECK(double(right) / n == doctest::Approx(0.75).epsilon(0.02));
}

TEST_CASE("mixture: standardize centers and rescales the pooled distribution") {
  ConditionedMixture mix = ConditionedMixture::blobs(3, 4, 3, 2.0, 17);
  const double sd = 0.5;
  mix.standardize(sd);
  mix.validate();

  // pooled moments evaluated from the parameters, not by sampling
  Vec mean(3, 0.0);
  double total_w = 0.0;
  for (const auto& comps : mix.by_label)
    for (const GaussComponent& c : comps) {
      for (int j = 0; j < 3; ++j) mean[j] += c.weight * c.mean[j];
      total_w += c.weight;
    }
  for (double& m : mean) m /= total_w;
  for (int j = 0; j < 3; ++j) CHECK(mean[j] == doctest::Approx(0.0).epsilon(1e-9));

  double avg_var = 0.0;
  for (const auto& comps : mix.by_label)
    for (const GaussComponent& c : comps)
      for (int j = 0; j < 3; ++j)
        avg_var += c.weight * (c.var[j] + c.mean[j] * c.mean[j]) / (3.0 * total_w);
  CHECK(avg_var == doctest::Approx(sd * sd).epsilon(1e-9));
}

TEST_CASE("mixture: validation rejects broken weights and variances") {
  ConditionedMixture mix = two_label_1d();
  mix.by_label[0][0].weight = 0.9;
  CHECK_THROWS_AS(mix.validate(), std::invalid_argument);

  ConditionedMixture mix2 = two_label_1d();
  mix2.by_label[1][0].var[0] = 0.0;
  CHECK_THROWS_AS(mix2.validate(), std::invalid_argument);
}

TEST_CASE("mixture: presets produce valid mixtures of the requested shape") {
  ConditionedMixture blobs = ConditionedMixture::blobs(2, 4, 3, 1.5, 7);
  blobs.validate();
  CHECK(blobs.dim == 2);
  CHECK(blobs.num_labels() == 4);
  CHECK(blobs.by_label[0].size() == 3);

  ConditionedMixture sig = ConditionedMixture::smooth_signals(64, 4, 3, 7);
  sig.validate();
  CHECK(sig.dim == 64);
  CHECK(sig.num_labels() == 4);

  // seeds reproduce bit-identically
  ConditionedMixture sig2 = ConditionedMixture::smooth_signals(64, 4, 3, 7);
  CHECK(sig.by_label[2][1].mean == sig2.by_label[2][1].mean);
  // different seeds differ
  ConditionedMixture sig3 = ConditionedMixture::smooth_signals(64, 4, 3, 8);
  CHECK(sig.by_label[2][1].mean != sig3.by_label[2][1].mean);
}

TEST_CASE("mixture: smooth-signal means are smooth") {
  ConditionedMixture sig = ConditionedMixture::smooth_signals(64, 4, 2, 9);
  for (const auto& comps : sig.by_label)
    for (const GaussComponent& c : comps) {
      double max_step = 0.0, max_abs = 0.0;
      for (int j = 0; j + 1 < 64; ++j) {
        max_step = std::max(max_step, std::abs(c.mean[j + 1] - c.mean[j]));
        max_abs = std::max(max_abs, std::abs(c.mean[j]));
      }
      CHECK(max_step < 0.8 * max_abs);  // no jumps on the carrier scale
    }
}
