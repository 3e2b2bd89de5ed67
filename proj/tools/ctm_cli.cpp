#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctm/checkpoint.hpp"
#include "ctm/config.hpp"
#include "ctm/runio.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace ctm;

namespace {

constexpr const char* kVersion = "0.1.0";

// Flags exactly as given on the command line; only explicit values end up in
// the recorded override set, so a replayed manifest reproduces the run.
struct Flags {
  std::string config_path;
  std::optional<std::string> out, ckpt, teacher_ckpt, method, target_shape;
  std::optional<std::uint64_t> seed;
  std::optional<long> iters;
  std::optional<int> steps, count, label;
  bool plot = false;
};

struct RunContext {
  std::string subcommand;
  AppConfig cfg;
  std::map<std::string, std::string> overrides;
  std::string ckpt, teacher_ckpt;
  std::string method = "all", target_shape = "all";
  bool plot = false;
  fs::path dir;
};

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
  std::uint64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw std::invalid_argument("override " + key + ": expected an unsigned integer, got '" + v + "'");
  return x;
}

long parse_long(const std::string& v, const std::string& key) {
  long x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw std::invalid_argument("override " + key + ": expected an integer, got '" + v + "'");
  return x;
}

int parse_int(const std::string& v, const std::string& key) {
  return int(parse_long(v, key));
}

void apply_overrides(RunContext& rc) {
  AppConfig& c = rc.cfg;
  const std::string& sub = rc.subcommand;
  for (const auto& [k, v] : rc.overrides) {
    if (k == "out") c.out = v;
    else if (k == "seed") c.seed = parse_u64(v, k);
    else if (k == "ckpt") rc.ckpt = v;
    else if (k == "teacher_ckpt") rc.teacher_ckpt = v;
    else if (k == "method") {
      if (v != "all") (void)parse_method(v);
      rc.method = v;
    } else if (k == "target_shape") {
      if (v != "all") (void)parse_shape(v);
      rc.target_shape = v;
    } else if (k == "plot") rc.plot = (v == "1" || v == "true");
    else if (k == "label") c.sample.label = parse_int(v, k);
    else if (k == "steps") {
      if (sub == "sample") c.sample.sampler.steps = parse_int(v, k);
      else if (sub == "guide") c.guide.cfg.steps = parse_int(v, k);
      else throw std::invalid_argument("override steps does not apply to " + sub);
    } else if (k == "count") {
      if (sub == "sample") c.sample.count = parse_int(v, k);
      else if (sub == "eval") c.eval.count = parse_int(v, k);
      else if (sub == "guide") c.guide.count = parse_int(v, k);
      else if (sub == "ablate-distance") c.ablate.count = parse_int(v, k);
      else throw std::invalid_argument("override count does not apply to " + sub);
    } else if (k == "iters") {
      if (sub == "train-teacher") c.teacher.iters = parse_int(v, k);
      else if (sub == "distill") c.distill.train.iters = parse_long(v, k);
      else if (sub == "ablate-distance") c.ablate.iters = parse_int(v, k);
      else throw std::invalid_argument("override iters does not apply to " + sub);
    } else {
      throw std::invalid_argument("unknown override '" + k + "'");
    }
  }
}

RunContext make_context(const std::string& sub, const Flags& fl) {
  RunContext rc;
  rc.subcommand = sub;

  std::string text;
  if (!fl.config_path.empty()) {
    std::string raw;
    try {
      raw = read_text_file(fl.config_path);
    } catch (const std::exception&) {
      throw ConfigError("cannot open config '" + fl.config_path + "'");
    }
    const std::size_t i = raw.find_first_not_of(" \t\r\n");
    if (i != std::string::npos && raw[i] == '{') {
      // a manifest.json instead of an INI: replay that run
      ordered_json man;
      try {
        man = ordered_json::parse(raw);
      } catch (const std::exception& e) {
        throw std::invalid_argument("manifest parse error in '" + fl.config_path + "': " + e.what());
      }
      if (man.value("tool", "") != "ctm")
        throw std::invalid_argument("'" + fl.config_path + "' is not a ctm manifest");
      const std::string rec = man.value("subcommand", "");
      if (rec != sub)
        throw std::invalid_argument("manifest '" + fl.config_path + "' was recorded by '" + rec +
                                    "', not '" + sub + "'");
      text = man.value("config", "");
      if (man.contains("overrides"))
        for (const auto& [k, v] : man.at("overrides").items())
          rc.overrides[k] = v.get<std::string>();
      rc.overrides["seed"] = std::to_string(man.value("seed", std::uint64_t{1}));
    } else {
      text = raw;
    }
  }
  rc.cfg = parse_config_text(text);

  if (fl.out) rc.overrides["out"] = *fl.out;
  if (fl.seed) rc.overrides["seed"] = std::to_string(*fl.seed);
  if (fl.ckpt) rc.overrides["ckpt"] = *fl.ckpt;
  if (fl.teacher_ckpt) rc.overrides["teacher_ckpt"] = *fl.teacher_ckpt;
  if (fl.method) rc.overrides["method"] = *fl.method;
  if (fl.target_shape) rc.overrides["target_shape"] = *fl.target_shape;
  if (fl.iters) rc.overrides["iters"] = std::to_string(*fl.iters);
  if (fl.steps) rc.overrides["steps"] = std::to_string(*fl.steps);
  if (fl.count) rc.overrides["count"] = std::to_string(*fl.count);
  if (fl.label) rc.overrides["label"] = std::to_string(*fl.label);
  if (fl.plot) rc.overrides["plot"] = "1";
  if (const char* env = std::getenv("SEED")) rc.overrides["seed"] = env;

  apply_overrides(rc);
  rc.cfg.validate();
  return rc;
}

void open_run(RunContext& rc) {
  const std::uint64_t hash = fnv1a64(rc.cfg.text);
  rc.dir = make_run_dir(rc.cfg.out, rc.subcommand, hash);

  ordered_json man;
  man["tool"] = "ctm";
  man["version"] = kVersion;
  man["format"] = 1;
  man["subcommand"] = rc.subcommand;
  man["config_hash"] = hex16(hash);
  man["seed"] = rc.cfg.seed;
  ordered_json ov = ordered_json::object();
  for (const auto& [k, v] : rc.overrides) ov[k] = v;
  man["overrides"] = ov;
  man["config"] = rc.cfg.text;
  write_text_file((rc.dir / "manifest.json").string(), man.dump(2) + "\n");
  write_text_file((rc.dir / "config.ini").string(), rc.cfg.text);
  std::cout << "run dir: " << rc.dir.string() << "\n";
}

Schedule full_schedule(const AppConfig& c) {
  Schedule s = c.schedule;
  s.sigma_data = c.sigma_data;
  return s;
}

void check_sched(const Schedule& a, const Schedule& b, const std::string& what) {
  if (a.sigma_min != b.sigma_min || a.sigma_max != b.sigma_max || a.rho != b.rho ||
      a.sigma_data != b.sigma_data)
    throw std::invalid_argument(what + " carries a different schedule than the run configuration");
}

TeacherModel make_teacher(const RunContext& rc, const ConditionedMixture& mix,
                          const Schedule& sched) {
  if (rc.cfg.distill.analytic_teacher) return TeacherModel::analytic(mix, sched);
  const std::string path = !rc.teacher_ckpt.empty() ? rc.teacher_ckpt : rc.cfg.distill.teacher_ckpt;
  if (path.empty())
    throw std::invalid_argument(
        "a neural teacher needs --teacher-ckpt or [distill] teacher_ckpt "
        "(or set [distill] teacher = analytic)");
  NeuralTeacher nt = load_teacher_checkpoint(path);
  if (nt.dim != rc.cfg.dim)
    throw std::invalid_argument("teacher checkpoint dim " + std::to_string(nt.dim) +
                                " mismatches [data] dim " + std::to_string(rc.cfg.dim));
  check_sched(nt.sched, sched, "teacher checkpoint");
  return TeacherModel::neural(std::move(nt));
}

StudentModel load_student(const RunContext& rc, const Schedule& sched) {
  if (rc.ckpt.empty())
    throw std::invalid_argument(rc.subcommand + " needs --ckpt pointing at a student checkpoint");
  StudentModel m = load_student_checkpoint(rc.ckpt);
  if (m.dim != rc.cfg.dim)
    throw std::invalid_argument("student checkpoint dim " + std::to_string(m.dim) +
                                " mismatches [data] dim " + std::to_string(rc.cfg.dim));
  check_sched(m.sched, sched, "student checkpoint");
  return m;
}

std::ofstream open_jsonl(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return f;
}

double tail_mean(const std::vector<double>& v, std::size_t k) {
  if (v.empty()) return 0.0;
  const std::size_t n = std::min(k, v.size());
  double s = 0.0;
  for (std::size_t i = v.size() - n; i < v.size(); ++i) s += v[i];
  return s / double(n);
}

// ---- subcommands -----------------------------------------------------------

void run_train_teacher(RunContext& rc) {
  open_run(rc);
  const ConditionedMixture mix = build_mixture(rc.cfg);
  const Schedule sched = full_schedule(rc.cfg);

  std::ofstream log = open_jsonl(rc.dir / "teacher.jsonl");
  std::vector<double> losses;
  auto logfn = [&](const TeacherTrainRow& r) {
    ordered_json j;
    j["iter"] = r.iter;
    j["loss"] = r.loss;
    j["grad_norm"] = r.grad_norm;
    j["wall_ms"] = r.wall_ms;
    j["rng_cursor"] = r.rng_cursor;
    log << j.dump() << "\n";
    losses.push_back(r.loss);
  };

  const NeuralTeacher t = train_teacher(mix, sched, rc.cfg.teacher, rc.cfg.seed, logfn);
  save_teacher_checkpoint(t, (rc.dir / "teacher.ckpt.json").string());
  if (rc.plot)
    svg_line_chart((rc.dir / "teacher_loss.svg").string(), "teacher dsm loss",
                   {{"loss", losses, "#c33"}});
  std::cout << "teacher: " << rc.cfg.teacher.iters << " iters, tail loss "
            << format_double(tail_mean(losses, 50)) << "\n"
            << "checkpoint: " << (rc.dir / "teacher.ckpt.json").string() << "\n";
}

void run_distill(RunContext& rc) {
  open_run(rc);
  const ConditionedMixture mix = build_mixture(rc.cfg);
  const Schedule sched = full_schedule(rc.cfg);
  const TeacherModel teacher = make_teacher(rc, mix, sched);
  const StudentConfig arch = student_config(rc.cfg);

  std::ofstream log = open_jsonl(rc.dir / "distill.jsonl");
  std::vector<double> ctm_losses, dsm_losses;
  auto logfn = [&](const DistillLogRow& r) {
    ordered_json j;
    j["iter"] = r.iter;
    j["loss_ctm"] = r.loss_ctm;
    j["loss_dsm"] = r.loss_dsm;
    j["lambda"] = r.lambda;
    j["grad_norm"] = r.grad_norm;
    j["wall_ms"] = r.wall_ms;
    j["rng_cursor"] = r.rng_cursor;
    log << j.dump() << "\n";
    ctm_losses.push_back(r.loss_ctm);
    dsm_losses.push_back(r.loss_dsm);
  };

  const StudentModel st =
      train_student(teacher, mix, arch, rc.cfg.distill.train, rc.cfg.seed, logfn);
  save_student_checkpoint(st, (rc.dir / "student.ckpt.json").string());
  if (rc.plot)
    svg_line_chart((rc.dir / "distill_loss.svg").string(), "distillation losses",
                   {{"ctm", ctm_losses, "#c33"}, {"dsm", dsm_losses, "#36c"}});
  std::cout << "student: " << rc.cfg.distill.train.iters << " iters, tail ctm loss "
            << format_double(tail_mean(ctm_losses, 50)) << "\n"
            << "checkpoint: " << (rc.dir / "student.ckpt.json").string() << "\n";
}

void run_sample(RunContext& rc) {
  open_run(rc);
  const ConditionedMixture mix = build_mixture(rc.cfg);
  const StudentModel st = load_student(rc, full_schedule(rc.cfg));

  const int count = rc.cfg.sample.count;
  std::vector<int> labels;
  if (rc.cfg.sample.label >= 0) labels.assign(std::size_t(count), rc.cfg.sample.label);
  else labels = draw_labels(count, mix.num_labels(), rc.cfg.seed);
  std::vector<Label> as_labels(labels.begin(), labels.end());

  const SamplerConfig& scfg = rc.cfg.sample.sampler;
  const std::vector<Vec> xs = sample_batch(st, as_labels, scfg, rc.cfg.seed);

  std::vector<std::string> header = {"seed", "label", "omega", "nu", "gamma", "steps"};
  for (int j = 0; j < st.dim; ++j) header.push_back("x" + std::to_string(j));
  CsvWriter csv((rc.dir / "samples.csv").string(), header);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::vector<std::string> row = {std::to_string(rc.cfg.seed), std::to_string(labels[i]),
                                    format_double(scfg.omega),  format_double(scfg.nu),
                                    format_double(scfg.gamma),  std::to_string(scfg.steps)};
    for (double v : xs[i]) row.push_back(format_double(v));
    csv.row(row);
  }
  std::cout << "wrote " << xs.size() << " samples (" << scfg.steps << " steps, omega "
            << format_double(scfg.omega) << ") to " << (rc.dir / "samples.csv").string() << "\n";
}

void run_eval(RunContext& rc) {
  open_run(rc);
  const ConditionedMixture mix = build_mixture(rc.cfg);
  const Schedule sched = full_schedule(rc.cfg);
  const StudentModel st = load_student(rc, sched);

  TeacherModel teacher = TeacherModel::analytic(mix, sched);
  if (!rc.teacher_ckpt.empty()) {
    NeuralTeacher nt = load_teacher_checkpoint(rc.teacher_ckpt);
    if (nt.dim != rc.cfg.dim) throw std::invalid_argument("teacher checkpoint dim mismatch");
    check_sched(nt.sched, sched, "teacher checkpoint");
    teacher = TeacherModel::neural(std::move(nt));
  }

  const std::vector<TradeoffRow> rows =
      tradeoff_report(st, &teacher, mix, rc.cfg.eval, rc.cfg.seed);

  CsvWriter csv((rc.dir / "tradeoff.csv").string(),
                {"kind", "steps", "omega", "nu", "gamma", "energy_distance",
                 "condition_accuracy", "preservation_vs_1step", "wall_ms"});
  for (const TradeoffRow& r : rows) {
    csv.row({r.kind, std::to_string(r.steps), format_double(r.omega), format_double(r.nu),
             format_double(r.gamma), format_double(r.energy), format_double(r.cond_acc),
             format_double(r.preserve_vs_1), format_double(r.wall_ms)});
    std::cout << r.kind << " " << r.steps << " steps: energy " << format_double(r.energy)
              << ", accuracy " << format_double(r.cond_acc) << "\n";
  }
}

void run_guide(RunContext& rc) {
  open_run(rc);
  const ConditionedMixture mix = build_mixture(rc.cfg);
  const StudentModel st = load_student(rc, full_schedule(rc.cfg));
  const auto& gs = rc.cfg.guide;

  std::vector<TargetShape> shapes = gs.shapes;
  if (rc.target_shape != "all") shapes = {parse_shape(rc.target_shape)};
  std::vector<GuideMethod> methods = {GuideMethod::none, GuideMethod::loss_guidance,
                                      GuideMethod::zt_opt};
  if (rc.method != "all") methods = {parse_method(rc.method)};

  const int count = gs.count;
  const std::vector<int> labels = draw_labels(count, mix.num_labels(), rc.cfg.seed ^ 0x6c);
  const std::vector<int> ref_labels = draw_labels(count, mix.num_labels(), rc.cfg.seed ^ 0x6d);
  const std::vector<Vec> ref = draw_data(mix, ref_labels, rc.cfg.seed ^ 0x6e);

  CsvWriter results((rc.dir / "guide_results.csv").string(),
                    {"seed", "shape", "method", "mse", "nll"});
  CsvWriter summary((rc.dir / "guide_summary.csv").string(),
                    {"shape", "method", "count", "mean_mse", "energy_distance"});

  const Rng base = Rng::from_seed(rc.cfg.seed).fork(0x6a);
  for (std::size_t si = 0; si < shapes.size(); ++si) {
    const TargetShape shape = shapes[si];
    const Vec target = target_curve(shape, rc.cfg.dim, gs.target_lo, gs.target_hi);
    std::vector<SvgSeries> chart = {{"target", target, "#000"}};

    for (GuideMethod method : methods) {
      GuidanceConfig g = gs.cfg;
      g.method = method;
      double mse_acc = 0.0;
      Vec mean_curve(target.size(), 0.0);
      std::vector<Vec> samples;
      samples.reserve(std::size_t(count));
      for (int i = 0; i < count; ++i) {
        const Rng rng = base.fork(si).fork(std::uint64_t(i));
        GuideOutcome out = guide_chain(st, labels[std::size_t(i)], g, target, rng);
        const double nll = -mix.log_density(std::nullopt, out.sample);
        results.row({std::to_string(i), shape_name(shape), method_name(method),
                     format_double(out.mse), format_double(nll)});
        mse_acc += out.mse;
        for (std::size_t j = 0; j < mean_curve.size(); ++j) mean_curve[j] += out.achieved[j];
        samples.push_back(std::move(out.sample));
      }
      for (double& v : mean_curve) v /= double(count);
      const double ed = energy_distance(samples, ref);
      summary.row({shape_name(shape), method_name(method), std::to_string(count),
                   format_double(mse_acc / double(count)), format_double(ed)});
      std::cout << shape_name(shape) << " / " << method_name(method) << ": mean mse "
                << format_double(mse_acc / double(count)) << ", energy " << format_double(ed)
                << "\n";
      const char* color = method == GuideMethod::none ? "#999"
                          : method == GuideMethod::loss_guidance ? "#c33" : "#36c";
      chart.push_back({method_name(method), mean_curve, color});
    }
    if (rc.plot)
      svg_line_chart((rc.dir / ("guide_" + std::string(shape_name(shape)) + ".svg")).string(),
                     std::string("intensity target: ") + shape_name(shape), chart);
  }
}

void run_ablate(RunContext& rc) {
  open_run(rc);
  const ConditionedMixture mix = build_mixture(rc.cfg);
  const Schedule sched = full_schedule(rc.cfg);
  if (rc.cfg.distill.analytic_teacher)
    throw std::invalid_argument(
        "ablate-distance sweeps teacher_feature too, which needs a neural teacher checkpoint");
  const TeacherModel teacher = make_teacher(rc, mix, sched);
  const StudentConfig arch = student_config(rc.cfg);

  DistillConfig base = rc.cfg.distill.train;
  base.iters = rc.cfg.ablate.iters;

  const int count = rc.cfg.ablate.count;
  const std::vector<int> gen_labels = draw_labels(count, mix.num_labels(), rc.cfg.seed ^ 0xab1);
  const std::vector<int> ref_labels = draw_labels(count, mix.num_labels(), rc.cfg.seed ^ 0xab2);
  const std::vector<Vec> held = draw_data(mix, ref_labels, rc.cfg.seed ^ 0xab3);
  std::vector<Label> as_labels(gen_labels.begin(), gen_labels.end());
  const SamplerConfig one_step{1, 0.0, 1.0, rc.cfg.eval.omega};

  StudentModel untrained = StudentModel::make(arch, rc.cfg.seed);
  if (base.init_from_teacher) init_student_from_teacher(untrained, teacher.neural_ref());
  const double ed_untrained =
      energy_distance(sample_batch(untrained, as_labels, one_step, rc.cfg.seed ^ 0x5e), held);

  CsvWriter csv((rc.dir / "ablate.csv").string(),
                {"distance", "iters", "energy_distance_1step", "energy_distance_untrained",
                 "improvement"});
  for (DistanceMode mode : {DistanceMode::l2_s_time, DistanceMode::l2_zero_time,
                            DistanceMode::teacher_feature}) {
    DistillConfig dc = base;
    dc.distance = mode;
    const StudentModel st = train_student(teacher, mix, arch, dc, rc.cfg.seed);
    const double ed =
        energy_distance(sample_batch(st, as_labels, one_step, rc.cfg.seed ^ 0x5e), held);
    const double improvement = ed > 0.0 ? ed_untrained / ed : 0.0;
    csv.row({distance_name(mode), std::to_string(base.iters), format_double(ed),
             format_double(ed_untrained), format_double(improvement)});
    std::cout << distance_name(mode) << ": energy " << format_double(ed) << " (untrained "
              << format_double(ed_untrained) << ", x" << format_double(improvement) << ")\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"consistency-trajectory distillation over conditioned Gaussian mixtures"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  Flags fl;

  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", fl.config_path,
                  "run configuration (INI), or a manifest.json to replay");
    s->add_option("--out", fl.out, "output directory (default: runs/<name>)");
    s->add_option("--seed", fl.seed, "seed override; the SEED env variable wins over this");
    return s;
  };

  CLI::App* tt = add_common(app.add_subcommand(
      "train-teacher", "fit the denoiser network by denoising score matching"));
  tt->add_option("--iters", fl.iters, "training iterations");
  tt->add_flag("--plot", fl.plot, "write an SVG loss chart");

  CLI::App* di = add_common(app.add_subcommand(
      "distill", "distill the guided-ODE teacher into an anytime jump model"));
  di->add_option("--teacher-ckpt", fl.teacher_ckpt, "teacher checkpoint (neural teacher)");
  di->add_option("--iters", fl.iters, "training iterations");
  di->add_flag("--plot", fl.plot, "write an SVG loss chart");

  CLI::App* sa = add_common(app.add_subcommand("sample", "draw samples from a student"));
  sa->add_option("--ckpt", fl.ckpt, "student checkpoint");
  sa->add_option("--steps", fl.steps, "sampler steps");
  sa->add_option("--count", fl.count, "number of samples");
  sa->add_option("--label", fl.label, "condition label, -1 draws from the prior");

  CLI::App* ev = add_common(app.add_subcommand(
      "eval", "step-count sweep: energy distance, accuracy, preservation"));
  ev->add_option("--ckpt", fl.ckpt, "student checkpoint");
  ev->add_option("--teacher-ckpt", fl.teacher_ckpt,
                 "teacher checkpoint for the reference row (default: exact denoiser)");
  ev->add_option("--count", fl.count, "samples per row");

  CLI::App* gu = add_common(app.add_subcommand(
      "guide", "steer samples toward intensity targets, one run per shape and method"));
  gu->add_option("--ckpt", fl.ckpt, "student checkpoint");
  gu->add_option("--method", fl.method, "none | loss-guidance | zt-opt | all");
  gu->add_option("--target-shape", fl.target_shape,
                 "flat | ramp-up | ramp-down | triangle | vee | sine | all");
  gu->add_option("--steps", fl.steps, "sampler steps");
  gu->add_option("--count", fl.count, "seeds per shape");
  gu->add_flag("--plot", fl.plot, "write per-shape SVG overlays");

  CLI::App* ab = add_common(app.add_subcommand(
      "ablate-distance", "distill once per distance mode and compare energy distances"));
  ab->add_option("--teacher-ckpt", fl.teacher_ckpt, "teacher checkpoint (required here)");
  ab->add_option("--iters", fl.iters, "iterations per distillation");
  ab->add_option("--count", fl.count, "samples for the comparison");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const CLI::App* parsed = nullptr;
  for (const CLI::App* s : {tt, di, sa, ev, gu, ab})
    if (s->parsed()) parsed = s;
  if (!parsed) return 1;  // unreachable with require_subcommand(1)

  try {
    RunContext rc = make_context(parsed->get_name(), fl);
    if (rc.subcommand == "train-teacher") run_train_teacher(rc);
    else if (rc.subcommand == "distill") run_distill(rc);
    else if (rc.subcommand == "sample") run_sample(rc);
    else if (rc.subcommand == "eval") run_eval(rc);
    else if (rc.subcommand == "guide") run_guide(rc);
    else run_ablate(rc);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}
