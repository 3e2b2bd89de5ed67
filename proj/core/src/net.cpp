#include "ctm/net.hpp"

#include <cmath>
#include <stdexcept>

namespace ctm {

MlpNet MlpNet::make(const std::vector<int>& widths, Rng& rng) {
  if (widths.size() < 2) throw std::invalid_argument("MlpNet: need at least [in, out] widths");
  MlpNet net;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    layer.in = widths[l];
    layer.out = widths[l + 1];
    if (layer.in <= 0 || layer.out <= 0) throw std::invalid_argument("MlpNet: widths must be positive");
    layer.w.resize(std::size_t(layer.out) * layer.in);
    layer.b.assign(layer.out, 0.0);
    const double scale = std::sqrt(2.0 / layer.in);
    for (double& w : layer.w) w = scale * rng.normal();
    net.layers.push_back(std::move(layer));
  }
  return net;
}

static void affine(const DenseLayer& L, std::span<const double> x, Vec& out) {
  out.assign(L.out, 0.0);
  for (int r = 0; r < L.out; ++r) {
    const double* wr = L.w.data() + std::size_t(r) * L.in;
    double s = L.b[r];
    for (int c = 0; c < L.in; ++c) s += wr[c] * x[c];
    out[r] = s;
  }
}

Vec mlp_forward(const MlpNet& net, std::span<const double> x) {
  if (int(x.size()) != net.input_width()) throw std::invalid_argument("mlp_forward: input width mismatch");
  Vec cur(x.begin(), x.end());
  Vec nxt;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    affine(net.layers[l], cur, nxt);
    if (l + 1 < net.layers.size())
      for (double& v : nxt) v = silu(v);
    cur.swap(nxt);
  }
  return cur;
}

Vec mlp_forward(const MlpNet& net, std::span<const double> x, MlpTrace& trace) {
  if (int(x.size()) != net.input_width()) throw std::invalid_argument("mlp_forward: input width mismatch");
  trace.input.assign(x.begin(), x.end());
  trace.pre.assign(net.layers.size(), {});
  trace.post.assign(net.layers.size() - 1, {});
  std::span<const double> cur = trace.input;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    affine(net.layers[l], cur, trace.pre[l]);
    if (l + 1 < net.layers.size()) {
      trace.post[l].resize(trace.pre[l].size());
      for (std::size_t i = 0; i < trace.pre[l].size(); ++i) trace.post[l][i] = silu(trace.pre[l][i]);
      cur = trace.post[l];
    }
  }
  return trace.pre.back();
}

MlpGrads MlpGrads::zeros_like(const MlpNet& net) {
  MlpGrads g;
  for (const DenseLayer& L : net.layers) {
    DenseLayer z;
    z.in = L.in;
    z.out = L.out;
    z.w.assign(L.w.size(), 0.0);
    z.b.assign(L.b.size(), 0.0);
    g.layers.push_back(std::move(z));
  }
  return g;
}

void MlpGrads::add_scaled(const MlpGrads& other, double c) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    axpy(c, other.layers[l].w, layers[l].w);
    axpy(c, other.layers[l].b, layers[l].b);
  }
}

void MlpGrads::scale(double c) {
  for (DenseLayer& L : layers) {
    for (double& v : L.w) v *= c;
    for (double& v : L.b) v *= c;
  }
}

static Vec backward_impl(const MlpNet& net, const MlpTrace& trace,
                         std::span<const double> upstream,
                         const std::vector<Vec>* hidden_seeds, MlpGrads* grads) {
  const int n_layers = int(net.layers.size());
  if (int(upstream.size()) != net.output_width())
    throw std::invalid_argument("mlp_backward: upstream width mismatch");
  if (hidden_seeds && int(hidden_seeds->size()) != n_layers - 1)
    throw std::invalid_argument("mlp_backward: need one hidden seed per hidden layer");

  Vec delta(upstream.begin(), upstream.end());  // d/d(pre-activation of layer l)
  Vec next;
  for (int l = n_layers - 1; l >= 0; --l) {
    const DenseLayer& L = net.layers[l];
    std::span<const double> below = (l == 0) ? std::span<const double>(trace.input)
                                             : std::span<const double>(trace.post[l - 1]);
    if (grads) {
      DenseLayer& G = grads->layers[l];
      for (int r = 0; r < L.out; ++r) {
        double* gw = G.w.data() + std::size_t(r) * L.in;
        const double d = delta[r];
        for (int c = 0; c < L.in; ++c) gw[c] += d * below[c];
        G.b[r] += d;
      }
    }
    next.assign(L.in, 0.0);
    for (int r = 0; r < L.out; ++r) {
      const double* wr = L.w.data() + std::size_t(r) * L.in;
      const double d = delta[r];
      for (int c = 0; c < L.in; ++c) next[c] += d * wr[c];
    }
    if (l > 0) {
      if (hidden_seeds)
        for (std::size_t i = 0; i < next.size(); ++i) next[i] += (*hidden_seeds)[l - 1][i];
      for (std::size_t i = 0; i < next.size(); ++i) next[i] *= silu_deriv(trace.pre[l - 1][i]);
    }
    delta.swap(next);
  }
  return delta;  // gradient w.r.t. input
}

Vec mlp_backward(const MlpNet& net, const MlpTrace& trace,
                 std::span<const double> upstream,
                 const std::vector<Vec>* hidden_seeds, MlpGrads& grads) {
  return backward_impl(net, trace, upstream, hidden_seeds, &grads);
}

Vec mlp_input_grad(const MlpNet& net, const MlpTrace& trace,
                   std::span<const double> upstream,
                   const std::vector<Vec>* hidden_seeds) {
  return backward_impl(net, trace, upstream, hidden_seeds, nullptr);
}

// ---- embeddings ----------------------------------------------------------

Embeddings Embeddings::make(int dim, int num_labels, std::uint64_t seed) {
  if (dim <= 0 || dim % 2 != 0) throw std::invalid_argument("Embeddings: dim must be positive and even");
  if (num_labels <= 0) throw std::invalid_argument("Embeddings: need at least one label");
  Embeddings e;
  e.dim = dim;
  e.num_labels = num_labels;
  Rng rng = Rng::from_seed(seed).fork(0xe6bedd);
  e.omega_freqs.resize(dim / 2);
  for (double& f : e.omega_freqs) f = rng.normal();
  e.cond.resize(std::size_t(num_labels + 1) * dim);
  for (double& v : e.cond) v = 0.1 * rng.normal();
  return e;
}

Vec Embeddings::embed_time(double c_noise) const {
  const int half = dim / 2;
  Vec out(dim);
  for (int k = 0; k < half; ++k) {
    const double f =
        (half == 1) ? f_min : f_min * std::pow(f_max / f_min, double(k) / double(half - 1));
    out[k] = std::sin(f * c_noise);
    out[half + k] = std::cos(f * c_noise);
  }
  return out;
}

Vec Embeddings::embed_omega(double omega) const {
  const int half = dim / 2;
  const double two_pi = 6.283185307179586;
  Vec out(dim);
  for (int k = 0; k < half; ++k) {
    out[k] = std::cos(two_pi * omega_freqs[k] * omega);
    out[half + k] = std::sin(two_pi * omega_freqs[k] * omega);
  }
  return out;
}

std::span<const double> Embeddings::cond_row(Label c) const {
  const int r = row_index(c);
  if (r < 0 || r > num_labels) throw std::invalid_argument("Embeddings: label out of range");
  return {cond.data() + std::size_t(r) * dim, std::size_t(dim)};
}

std::span<double> Embeddings::cond_row_mut(Label c) {
  const int r = row_index(c);
  if (r < 0 || r > num_labels) throw std::invalid_argument("Embeddings: label out of range");
  return {cond.data() + std::size_t(r) * dim, std::size_t(dim)};
}

// ---- optimizers ----------------------------------------------------------

void RAdam::step(std::span<ParamView> blocks) {
  if (m.empty()) {
    for (const ParamView& b : blocks) {
      m.emplace_back(b.p.size(), 0.0);
      v.emplace_back(b.p.size(), 0.0);
    }
  }
  if (m.size() != blocks.size()) throw std::runtime_error("RAdam: block count changed between steps");
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (!all_finite(blocks[i].g))
      throw std::runtime_error("RAdam: non-finite gradient in block '" + blocks[i].name + "'");

  step_count += 1;
  const double t = double(step_count);
  const double rho_inf = 2.0 / (1.0 - beta2) - 1.0;
  const double b1t = std::pow(beta1, t);
  const double b2t = std::pow(beta2, t);
  const double rho_t = rho_inf - 2.0 * t * b2t / (1.0 - b2t);

  double rect = 0.0;
  const bool rectified = rho_t > 4.0;
  if (rectified)
    rect = std::sqrt(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) /
                     ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));

  for (std::size_t i = 0; i < blocks.size(); ++i) {
    ParamView& b = blocks[i];
    if (b.p.size() != b.g.size() || b.p.size() != m[i].size())
      throw std::runtime_error("RAdam: size mismatch in block '" + b.name + "'");
    for (std::size_t j = 0; j < b.p.size(); ++j) {
      const double g = b.g[j];
      m[i][j] = beta1 * m[i][j] + (1.0 - beta1) * g;
      v[i][j] = beta2 * v[i][j] + (1.0 - beta2) * g * g;
      const double m_hat = m[i][j] / (1.0 - b1t);
      if (rectified) {
        const double v_hat = std::sqrt(v[i][j] / (1.0 - b2t));
        b.p[j] -= lr * rect * m_hat / (v_hat + eps);
      } else {
        b.p[j] -= lr * m_hat;
      }
    }
  }
}

void Adam::step(std::span<double> p, std::span<const double> g) {
  if (m.empty()) {
    m.assign(p.size(), 0.0);
    v.assign(p.size(), 0.0);
  }
  if (!all_finite(g)) throw std::runtime_error("Adam: non-finite gradient");
  step_count += 1;
  const double b1t = std::pow(beta1, double(step_count));
  const double b2t = std::pow(beta2, double(step_count));
  for (std::size_t j = 0; j < p.size(); ++j) {
    m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
    v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
    const double m_hat = m[j] / (1.0 - b1t);
    const double v_hat = v[j] / (1.0 - b2t);
    p[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

}  // namespace ctm
