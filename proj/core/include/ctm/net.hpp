#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctm/num.hpp"
#include "ctm/rng.hpp"

namespace ctm {

// Condition label; nullopt is the unconditional slot.
using Label = std::optional<int>;

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }
inline double silu_deriv(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

struct DenseLayer {
  int in = 0;
  int out = 0;
  Vec w;  // row-major [out][in]
  Vec b;  // [out]
};

// Fully connected net, SiLU on hidden layers, linear output.
struct MlpNet {
  std::vector<DenseLayer> layers;

  int input_width() const { return layers.front().in; }
  int output_width() const { return layers.back().out; }
  int hidden_count() const { return int(layers.size()) - 1; }

  // widths = [in, h1, ..., out]; He-style init
  static MlpNet make(const std::vector<int>& widths, Rng& rng);
};

// Per-input forward intermediates kept for the reverse pass.
struct MlpTrace {
  Vec input;
  std::vector<Vec> pre;   // pre-activation, one per layer
  std::vector<Vec> post;  // post-activation, one per hidden layer
};

Vec mlp_forward(const MlpNet& net, std::span<const double> x);
Vec mlp_forward(const MlpNet& net, std::span<const double> x, MlpTrace& trace);

// Gradient container with the same layout as the net.
struct MlpGrads {
  std::vector<DenseLayer> layers;

  static MlpGrads zeros_like(const MlpNet& net);
  void add_scaled(const MlpGrads& other, double c);
  void scale(double c);
};

// Accumulates d<upstream, net(x)>/dparams into grads and returns the gradient
// with respect to x. hidden_seeds, when given, injects an extra upstream
// gradient at each hidden post-activation (one vector per hidden layer); this
// is how feature-space losses reach the parameters below them.
Vec mlp_backward(const MlpNet& net, const MlpTrace& trace,
                 std::span<const double> upstream,
                 const std::vector<Vec>* hidden_seeds, MlpGrads& grads);

// Input gradient only; parameters untouched.
Vec mlp_input_grad(const MlpNet& net, const MlpTrace& trace,
                   std::span<const double> upstream,
                   const std::vector<Vec>* hidden_seeds = nullptr);

// ---- embeddings ----------------------------------------------------------

// All four condition embeddings share one width. Times enter through a fixed
// sinusoidal bank over c_noise, the guidance weight through fixed Fourier
// features with frequencies drawn once at construction, and the label through
// a learned table whose last row is the unconditional slot.
struct Embeddings {
  int dim = 0;         // E, even
  int num_labels = 0;  // learned table has num_labels + 1 rows
  double f_min = 0.5;  // sinusoidal bank, geometric progression
  double f_max = 64.0;
  Vec omega_freqs;  // E/2 fixed draws of N(0,1)
  Vec cond;         // learned, (num_labels + 1) x E

  static Embeddings make(int dim, int num_labels, std::uint64_t seed);

  Vec embed_time(double c_noise) const;
  Vec embed_omega(double omega) const;
  std::span<const double> cond_row(Label c) const;
  std::span<double> cond_row_mut(Label c);
  int row_index(Label c) const { return c ? *c : num_labels; }
};

// ---- optimizers ----------------------------------------------------------

struct ParamView {
  std::string name;
  std::span<double> p;
  std::span<const double> g;
};

// Rectified Adam (Liu et al. 2020). Falls back to an unadapted SGD-with-
// momentum update while the variance rectification term is undefined.
struct RAdam {
  double lr = 8.0e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1.0e-8;

  std::int64_t step_count = 0;
  std::vector<Vec> m, v;

  // Throws std::runtime_error naming the block on non-finite gradients.
  void step(std::span<ParamView> blocks);
};

struct Adam {
  double lr = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1.0e-8;

  std::int64_t step_count = 0;
  Vec m, v;

  void step(std::span<double> p, std::span<const double> g);
};

}  // namespace ctm
