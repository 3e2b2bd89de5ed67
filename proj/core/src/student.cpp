#include "ctm/student.hpp"

#include <cmath>
#include <stdexcept>

namespace ctm {

void StudentGrads::add_scaled(const StudentGrads& o, double c) {
  net.add_scaled(o.net, c);
  axpy(c, o.cond, cond);
}

void StudentGrads::scale(double c) {
  net.scale(c);
  for (double& v : cond) v *= c;
}

double StudentGrads::sq_norm() const {
  double s = dot(cond, cond);
  for (const DenseLayer& L : net.layers) s += dot(L.w, L.w) + dot(L.b, L.b);
  return s;
}

StudentModel StudentModel::make(const StudentConfig& cfg, std::uint64_t seed) {
  cfg.sched.validate();
  StudentModel m;
  m.dim = cfg.dim;
  m.sched = cfg.sched;
  m.emb = Embeddings::make(cfg.embed_dim, cfg.num_labels, seed ^ 0x57bde27);
  Rng init_rng = Rng::from_seed(seed).fork(0);
  std::vector<int> widths;
  widths.push_back(cfg.dim + cfg.embed_dim);
  for (int h : cfg.hidden) widths.push_back(h);
  widths.push_back(cfg.dim);
  m.net = MlpNet::make(widths, init_rng);
  m.ema_net = m.net;
  m.ema_emb = m.emb;
  return m;
}

Vec StudentModel::embed(bool ema, Label c, double omega, double t, double s) const {
  const Embeddings& e = ema ? ema_emb : emb;
  Vec out = e.embed_time(0.25 * std::log(t));
  const Vec se = e.embed_time(0.25 * std::log(s));
  const Vec oe = e.embed_omega(omega);
  const auto ce = e.cond_row(c);
  for (int j = 0; j < e.dim; ++j) out[std::size_t(j)] += se[std::size_t(j)] + oe[std::size_t(j)] + ce[std::size_t(j)];
  return out;
}

static void check_times(double t, double s) {
  if (!(s > 0.0) || !(t >= s)) throw std::invalid_argument("student: need t >= s > 0");
}

Vec StudentModel::g_theta_trace(bool ema, Label c, double omega, std::span<const double> z,
                                double t, double s, JumpTrace& tr) const {
  check_times(t, s);
  if (int(z.size()) != dim) throw std::invalid_argument("student: input dimension mismatch");
  const MlpNet& n = ema ? ema_net : net;
  tr.pc = precondition(t, sched.sigma_data);
  tr.t = t;
  tr.s = s;
  tr.ratio = s / t;
  tr.cond_label = c;
  tr.z.assign(z.begin(), z.end());
  tr.degenerate = false;

  Vec in(std::size_t(dim) + emb.dim);
  for (int j = 0; j < dim; ++j) in[std::size_t(j)] = tr.pc.c_in * z[std::size_t(j)];
  const Vec e = embed(ema, c, omega, t, s);
  for (int j = 0; j < emb.dim; ++j) in[std::size_t(dim + j)] = e[std::size_t(j)];

  const Vec f = mlp_forward(n, in, tr.mlp);
  tr.g.resize(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) tr.g[j] = tr.pc.c_skip * z[j] + tr.pc.c_out * f[j];
  return tr.g;
}

Vec StudentModel::g_theta(bool ema, Label c, double omega, std::span<const double> z, double t,
                          double s) const {
  JumpTrace tr;
  return g_theta_trace(ema, c, omega, z, t, s, tr);
}

Vec StudentModel::jump_trace(bool ema, Label c, double omega, std::span<const double> z, double t,
                             double s, JumpTrace& tr) const {
  check_times(t, s);
  if (s == t) {
    tr.degenerate = true;
    tr.t = t;
    tr.s = s;
    tr.ratio = 1.0;
    tr.z.assign(z.begin(), z.end());
    tr.out = tr.z;
    return tr.out;
  }
  g_theta_trace(ema, c, omega, z, t, s, tr);
  tr.out.resize(z.size());
  for (std::size_t j = 0; j < z.size(); ++j)
    tr.out[j] = tr.ratio * z[j] + (1.0 - tr.ratio) * tr.g[j];
  return tr.out;
}

Vec StudentModel::jump(bool ema, Label c, double omega, std::span<const double> z, double t,
                       double s) const {
  JumpTrace tr;
  return jump_trace(ema, c, omega, z, t, s, tr);
}

Vec StudentModel::g_vjp(bool ema, const JumpTrace& tr, std::span<const double> upstream,
                        StudentGrads* grads) const {
  const MlpNet& n = ema ? ema_net : net;
  const Embeddings& e = ema ? ema_emb : emb;
  Vec up_f(upstream.size());
  for (std::size_t j = 0; j < upstream.size(); ++j) up_f[j] = tr.pc.c_out * upstream[j];

  Vec gin;
  if (grads) {
    gin = mlp_backward(n, tr.mlp, up_f, nullptr, grads->net);
    auto crow = std::span<double>(grads->cond.data() + std::size_t(e.row_index(tr.cond_label)) * e.dim,
                                  std::size_t(e.dim));
    for (int j = 0; j < e.dim; ++j) crow[std::size_t(j)] += gin[std::size_t(dim + j)];
  } else {
    gin = mlp_input_grad(n, tr.mlp, up_f);
  }

  Vec gz(upstream.size());
  for (std::size_t j = 0; j < upstream.size(); ++j)
    gz[j] = tr.pc.c_skip * upstream[j] + tr.pc.c_in * gin[j];
  return gz;
}

Vec StudentModel::jump_vjp(bool ema, const JumpTrace& tr, std::span<const double> upstream,
                           StudentGrads* grads) const {
  if (tr.degenerate) return Vec(upstream.begin(), upstream.end());
  Vec up_g(upstream.size());
  for (std::size_t j = 0; j < upstream.size(); ++j) up_g[j] = (1.0 - tr.ratio) * upstream[j];
  Vec gz = g_vjp(ema, tr, up_g, grads);
  for (std::size_t j = 0; j < gz.size(); ++j) gz[j] += tr.ratio * upstream[j];
  return gz;
}

StudentGrads StudentModel::zero_grads() const {
  StudentGrads g;
  g.net = MlpGrads::zeros_like(net);
  g.cond.assign(emb.cond.size(), 0.0);
  return g;
}

void ema_update(StudentModel& m, double mu) {
  if (!(mu >= 0.0 && mu <= 1.0)) throw std::invalid_argument("ema_update: mu outside [0, 1]");
  for (std::size_t l = 0; l < m.net.layers.size(); ++l) {
    DenseLayer& e = m.ema_net.layers[l];
    const DenseLayer& o = m.net.layers[l];
    for (std::size_t j = 0; j < e.w.size(); ++j) e.w[j] = mu * e.w[j] + (1.0 - mu) * o.w[j];
    for (std::size_t j = 0; j < e.b.size(); ++j) e.b[j] = mu * e.b[j] + (1.0 - mu) * o.b[j];
  }
  for (std::size_t j = 0; j < m.ema_emb.cond.size(); ++j)
    m.ema_emb.cond[j] = mu * m.ema_emb.cond[j] + (1.0 - mu) * m.emb.cond[j];
}

int init_student_from_teacher(StudentModel& m, const NeuralTeacher& teacher) {
  int copied = 0;
  for (std::size_t l = 0; l < m.net.layers.size() && l < teacher.net.layers.size(); ++l) {
    DenseLayer& d = m.net.layers[l];
    const DenseLayer& s = teacher.net.layers[l];
    if (d.in == s.in && d.out == s.out) {
      d.w = s.w;
      d.b = s.b;
      ++copied;
    }
  }
  if (m.emb.cond.size() == teacher.emb.cond.size() && m.emb.num_labels == teacher.emb.num_labels) {
    m.emb.cond = teacher.emb.cond;
    ++copied;
  }
  m.ema_net = m.net;
  m.ema_emb = m.emb;
  return copied;
}

}  // namespace ctm
