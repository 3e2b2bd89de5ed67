#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctm/distill.hpp"
#include "ctm/eval.hpp"
#include "ctm/guidance.hpp"
#include "ctm/mixture.hpp"
#include "ctm/sampler.hpp"
#include "ctm/student.hpp"
#include "ctm/teacher.hpp"

namespace ctm {

// Schema or value problem in a run config. Message carries the line number.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class MixturePreset { blobs, smooth_signals, explicit_list };

// One entry of an explicitly listed mixture ([mixture.<k>] section).
struct ExplicitComponent {
  int label = 0;
  double weight = 1.0;
  Vec mean;
  Vec var;
};

struct MixtureSection {
  MixturePreset preset = MixturePreset::blobs;
  int labels = 4;
  int components = 3;  // per label, presets only
  double spread = 1.5;
  std::uint64_t seed = 7;
  bool standardize = true;
  std::vector<ExplicitComponent> explicit_components;
};

// Parsed run configuration. Sections map one-to-one onto the members; the
// raw text is kept for hashing and for echoing into the run directory.
struct AppConfig {
  // [run]
  std::uint64_t seed = 1;
  std::string out;

  // [data]
  int dim = 2;
  double sigma_data = 0.5;

  MixtureSection mixture;  // [mixture], [mixture.<k>]
  Schedule schedule;       // [schedule]; sigma_data comes from [data]

  TeacherTrainConfig teacher;  // [teacher]

  // [distill]
  struct DistillSection {
    bool analytic_teacher = false;
    std::string teacher_ckpt;
    std::vector<int> hidden = {128, 128};
    int embed_dim = 32;
    DistillConfig train;
  } distill;

  // [sample]
  struct SampleSection {
    SamplerConfig sampler;
    int count = 256;
    int label = -1;  // -1: draw labels from the mixture prior
  } sample;

  EvalConfig eval;  // [eval]

  // [guide]
  struct GuideSection {
    GuidanceConfig cfg;
    std::vector<TargetShape> shapes = {TargetShape::flat,     TargetShape::ramp_up,
                                       TargetShape::ramp_down, TargetShape::triangle,
                                       TargetShape::vee,       TargetShape::sine};
    int count = 50;  // seeds per shape
    double target_lo = -25.0;
    double target_hi = -8.0;
  } guide;

  // [ablate]
  struct AblateSection {
    int iters = 2500;
    int count = 1000;  // samples for the energy-distance comparison
  } ablate;

  std::string text;

  void validate() const;  // cross-field checks; throws ConfigError
};

AppConfig parse_config_text(const std::string& text);
AppConfig load_config_file(const std::string& path);

// Instantiate the data distribution described by [data] + [mixture].
ConditionedMixture build_mixture(const AppConfig& cfg);

// Assemble library configs that need fields from several sections.
StudentConfig student_config(const AppConfig& cfg);

}  // namespace ctm
