#pragma once

#include <span>

#include "ctm/diffusion.hpp"
#include "ctm/net.hpp"
#include "ctm/teacher.hpp"

namespace ctm {

struct StudentConfig {
  int dim = 2;
  std::vector<int> hidden = {128, 128};
  int embed_dim = 32;
  int num_labels = 4;
  Schedule sched;
};

// Gradients for the learned student parameters (network plus label table).
struct StudentGrads {
  MlpGrads net;
  Vec cond;

  void add_scaled(const StudentGrads& o, double c);
  void scale(double c);
  double sq_norm() const;
};

struct JumpTrace {
  MlpTrace mlp;
  Precond pc;
  double t = 0.0, s = 0.0, ratio = 0.0;
  Label cond_label;
  Vec z;
  Vec g;
  Vec out;
  bool degenerate = false;  // s == t shortcut, no network evaluation
};

// Anytime-to-anytime student. The denoising head g keeps EDM preconditioning
// in t; jump times s and the guidance weight omega enter only through the
// summed embedding. A frozen EMA copy provides the training target side and
// all inference jumps.
struct StudentModel {
  int dim = 0;
  Schedule sched;
  MlpNet net, ema_net;
  Embeddings emb, ema_emb;

  static StudentModel make(const StudentConfig& cfg, std::uint64_t seed);

  // e = t_embed + s_embed + omega_embed + cond_embed
  Vec embed(bool ema, Label c, double omega, double t, double s) const;

  // g = c_skip(t) z + c_out(t) NN([c_in(t) z, e])
  Vec g_theta(bool ema, Label c, double omega, std::span<const double> z, double t, double s) const;
  Vec g_theta_trace(bool ema, Label c, double omega, std::span<const double> z, double t, double s,
                    JumpTrace& tr) const;

  // G = (s/t) z + (1 - s/t) g; G(z, t, t) == z exactly.
  Vec jump(bool ema, Label c, double omega, std::span<const double> z, double t, double s) const;
  Vec jump_trace(bool ema, Label c, double omega, std::span<const double> z, double t, double s,
                 JumpTrace& tr) const;

  // Reverse passes. upstream pairs with the op output; both return d/dz and,
  // when grads is non-null, accumulate parameter gradients (online or EMA
  // weights according to the trace's origin flag passed here).
  Vec g_vjp(bool ema, const JumpTrace& tr, std::span<const double> upstream,
            StudentGrads* grads) const;
  Vec jump_vjp(bool ema, const JumpTrace& tr, std::span<const double> upstream,
               StudentGrads* grads) const;

  StudentGrads zero_grads() const;
};

// sg(theta) <- mu sg(theta) + (1 - mu) theta, applied to net and label table.
void ema_update(StudentModel& m, double mu);

// Copy teacher weights into both student copies wherever shapes agree
// (per-layer, plus the label table). New-to-the-student embeddings are the
// fixed s/omega banks, which have nothing to inherit. Returns copied blocks.
int init_student_from_teacher(StudentModel& m, const NeuralTeacher& teacher);

}  // namespace ctm
