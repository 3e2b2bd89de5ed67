#include "ctm/teacher.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace ctm {

Vec analytic_denoise(const ConditionedMixture& mix, Label c, std::span<const double> z, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("analytic_denoise: t must be positive");
  if (int(z.size()) != mix.dim) throw std::invalid_argument("analytic_denoise: dimension mismatch");
  const auto& comps = mix.components(c);
  const double t2 = t * t;
  constexpr double log_two_pi = 1.8378770664093453;

  Vec logr(comps.size());
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const GaussComponent& g = comps[k];
    double s = std::log(g.weight);
    for (std::size_t j = 0; j < z.size(); ++j) {
      const double v = g.var[j] + t2;
      const double d = z[j] - g.mean[j];
      s += -0.5 * (log_two_pi + std::log(v) + d * d / v);
    }
    logr[k] = s;
  }
  const double lse = logsumexp(logr);

  Vec out(z.size(), 0.0);
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const GaussComponent& g = comps[k];
    const double r = std::exp(logr[k] - lse);
    for (std::size_t j = 0; j < z.size(); ++j) {
      const double shrink = g.var[j] / (g.var[j] + t2);
      out[j] += r * (g.mean[j] + shrink * (z[j] - g.mean[j]));
    }
  }
  return out;
}

double dsm_weight(double t, double sigma_data) {
  const double ts = t * sigma_data;
  return (t * t + sigma_data * sigma_data) / (ts * ts);
}

Vec NeuralTeacher::raw_input(Label c, std::span<const double> z, double t) const {
  const Precond p = precondition(t, sched.sigma_data);
  Vec in(std::size_t(dim) + emb.dim);
  for (int j = 0; j < dim; ++j) in[std::size_t(j)] = p.c_in * z[std::size_t(j)];
  const Vec te = emb.embed_time(p.c_noise);
  const auto ce = emb.cond_row(c);
  for (int j = 0; j < emb.dim; ++j) in[std::size_t(dim + j)] = te[std::size_t(j)] + ce[std::size_t(j)];
  return in;
}

Vec NeuralTeacher::denoise(Label c, std::span<const double> z, double t) const {
  const Precond p = precondition(t, sched.sigma_data);
  const Vec f = mlp_forward(net, raw_input(c, z, t));
  Vec out(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) out[j] = p.c_skip * z[j] + p.c_out * f[j];
  return out;
}

static std::vector<Vec> normalize_feats(const std::vector<Vec>& post, std::vector<double>* norms) {
  std::vector<Vec> feats;
  feats.reserve(post.size());
  for (const Vec& h : post) {
    const double n = l2_norm(h);
    if (norms) norms->push_back(n);
    Vec f(h.size(), 0.0);
    if (n > 0.0)
      for (std::size_t i = 0; i < h.size(); ++i) f[i] = h[i] / n;
    feats.push_back(std::move(f));
  }
  return feats;
}

std::vector<Vec> teacher_features(const NeuralTeacher& nn, Label c, std::span<const double> z,
                                  double t) {
  MlpTrace tr;
  mlp_forward(nn.net, nn.raw_input(c, z, t), tr);
  return normalize_feats(tr.post, nullptr);
}

std::vector<Vec> teacher_features_trace(const NeuralTeacher& nn, Label c, std::span<const double> z,
                                        double t, FeatureTrace& tr) {
  mlp_forward(nn.net, nn.raw_input(c, z, t), tr.mlp);
  tr.norms.clear();
  tr.feats = normalize_feats(tr.mlp.post, &tr.norms);
  tr.c_in = precondition(t, nn.sched.sigma_data).c_in;
  tr.dim = nn.dim;
  return tr.feats;
}

Vec teacher_features_vjp(const NeuralTeacher& nn, const FeatureTrace& tr,
                         const std::vector<Vec>& seeds) {
  if (seeds.size() != tr.feats.size())
    throw std::invalid_argument("teacher_features_vjp: one seed per hidden layer required");
  // Through f = h / |h|:  g -> (g - f <f, g>) / |h|
  std::vector<Vec> hidden_seeds(seeds.size());
  for (std::size_t m = 0; m < seeds.size(); ++m) {
    const Vec& f = tr.feats[m];
    const Vec& g = seeds[m];
    hidden_seeds[m].assign(f.size(), 0.0);
    if (tr.norms[m] > 0.0) {
      const double fg = dot(f, g);
      for (std::size_t i = 0; i < f.size(); ++i)
        hidden_seeds[m][i] = (g[i] - f[i] * fg) / tr.norms[m];
    }
  }
  const Vec zero_up(std::size_t(nn.net.output_width()), 0.0);
  const Vec gin = mlp_input_grad(nn.net, tr.mlp, zero_up, &hidden_seeds);
  Vec gz(std::size_t(tr.dim));
  for (int j = 0; j < tr.dim; ++j) gz[std::size_t(j)] = tr.c_in * gin[std::size_t(j)];
  return gz;
}

TeacherModel TeacherModel::analytic(ConditionedMixture m, Schedule s) {
  m.validate();
  s.validate();
  TeacherModel t;
  t.kind = Kind::analytic;
  t.sched = s;
  t.mix = std::move(m);
  return t;
}

TeacherModel TeacherModel::neural(NeuralTeacher n) {
  TeacherModel t;
  t.kind = Kind::neural;
  t.sched = n.sched;
  t.nn = std::move(n);
  return t;
}

int TeacherModel::dim() const { return kind == Kind::analytic ? mix->dim : nn->dim; }

Vec TeacherModel::denoise(Label c, std::span<const double> z, double t) const {
  if (kind == Kind::analytic) return analytic_denoise(*mix, c, z, t);
  return nn->denoise(c, z, t);
}

Vec TeacherModel::pf_ode_rhs(Label c, std::span<const double> z, double t) const {
  if (!(t > 0.0)) throw std::invalid_argument("pf_ode_rhs: t must be positive");
  const Vec d = denoise(c, z, t);
  Vec out(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) out[j] = (z[j] - d[j]) / t;
  return out;
}

const NeuralTeacher& TeacherModel::neural_ref() const {
  if (kind != Kind::neural)
    throw std::invalid_argument("teacher: feature extraction needs the neural variant");
  return *nn;
}

NeuralTeacher train_teacher(const ConditionedMixture& mix, const Schedule& sched,
                            const TeacherTrainConfig& cfg, std::uint64_t seed,
                            const TeacherLogFn& log) {
  mix.validate();
  sched.validate();
  if (cfg.batch <= 0 || cfg.iters < 0) throw std::invalid_argument("train_teacher: bad batch/iters");

  NeuralTeacher teacher;
  teacher.dim = mix.dim;
  teacher.sched = sched;
  teacher.emb = Embeddings::make(cfg.embed_dim, mix.num_labels(), seed ^ 0x7eac4e5);

  Rng root = Rng::from_seed(seed);
  Rng init_rng = root.fork(0);
  std::vector<int> widths;
  widths.push_back(mix.dim + cfg.embed_dim);
  for (int h : cfg.hidden) widths.push_back(h);
  widths.push_back(mix.dim);
  teacher.net = MlpNet::make(widths, init_rng);

  RAdam opt;
  opt.lr = cfg.lr;
  const int L = mix.num_labels();

  for (long iter = 0; iter < cfg.iters; ++iter) {
    const auto t_start = std::chrono::steady_clock::now();
    Rng it_rng = root.fork(1).fork(std::uint64_t(iter));

    MlpGrads gnet = MlpGrads::zeros_like(teacher.net);
    Vec gcond(teacher.emb.cond.size(), 0.0);
    double loss = 0.0;

    for (int b = 0; b < cfg.batch; ++b) {
      const int label = int(it_rng.uniform_int(std::uint64_t(L)));
      const Vec z0 = mix.sample(label, it_rng);
      const bool drop = it_rng.uniform() < cfg.p_uncond;
      const Label c = drop ? Label{} : Label{label};
      const double t = lognormal_time(cfg.p_mean, cfg.p_std, it_rng);
      const Vec zt = add_noise(z0, t, it_rng);

      const Precond p = precondition(t, sched.sigma_data);
      MlpTrace tr;
      const Vec f = mlp_forward(teacher.net, teacher.raw_input(c, zt, t), tr);
      const double lam = dsm_weight(t, sched.sigma_data);

      Vec up(f.size());
      double item = 0.0;
      for (std::size_t j = 0; j < f.size(); ++j) {
        const double resid = p.c_skip * zt[j] + p.c_out * f[j] - z0[j];
        item += lam * resid * resid;
        up[j] = 2.0 * lam * p.c_out * resid / double(cfg.batch);
      }
      loss += item / double(cfg.batch);

      const Vec gin = mlp_backward(teacher.net, tr, up, nullptr, gnet);
      auto crow = std::span<double>(gcond.data() + std::size_t(teacher.emb.row_index(c)) * teacher.emb.dim,
                                    std::size_t(teacher.emb.dim));
      for (int j = 0; j < teacher.emb.dim; ++j) crow[std::size_t(j)] += gin[std::size_t(mix.dim + j)];
    }

    std::vector<ParamView> blocks;
    double gn2 = 0.0;
    for (std::size_t l = 0; l < teacher.net.layers.size(); ++l) {
      blocks.push_back({"net." + std::to_string(l) + ".w", teacher.net.layers[l].w, gnet.layers[l].w});
      blocks.push_back({"net." + std::to_string(l) + ".b", teacher.net.layers[l].b, gnet.layers[l].b});
      gn2 += dot(gnet.layers[l].w, gnet.layers[l].w) + dot(gnet.layers[l].b, gnet.layers[l].b);
    }
    blocks.push_back({"emb.cond", teacher.emb.cond, gcond});
    gn2 += dot(gcond, gcond);

    if (!std::isfinite(loss)) throw std::runtime_error("train_teacher: non-finite loss at iter " + std::to_string(iter));
    opt.step(blocks);

    if (log) {
      const auto t_end = std::chrono::steady_clock::now();
      TeacherTrainRow row;
      row.iter = iter;
      row.loss = loss;
      row.grad_norm = std::sqrt(gn2);
      row.wall_ms = std::chrono::duration<double, std::milli>(t_end - t_start).count();
      row.rng_cursor = it_rng.counter;
      log(row);
    }
  }
  return teacher;
}

}  // namespace ctm
