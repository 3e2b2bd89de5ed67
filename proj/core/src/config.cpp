#include "ctm/config.hpp"

#include <algorithm>
#include <charconv>
#include <climits>
#include <fstream>
#include <map>
#include <sstream>

namespace ctm {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

double to_double(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) fail(line, "trailing characters in number '" + v + "'");
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    fail(line, "expected a number, got '" + v + "'");
  }
}

long to_long(const std::string& v, int line) {
  long x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size())
    fail(line, "expected an integer, got '" + v + "'");
  return x;
}

int to_int(const std::string& v, int line) {
  long x = to_long(v, line);
  if (x < INT_MIN || x > INT_MAX) fail(line, "integer out of range: '" + v + "'");
  return int(x);
}

std::uint64_t to_u64(const std::string& v, int line) {
  std::uint64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size())
    fail(line, "expected an unsigned integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(line, "expected a boolean, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  for (char ch : v) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else {
      item += ch;
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

Vec to_doubles(const std::string& v, int line) {
  Vec out;
  for (const std::string& s : split_list(v)) out.push_back(to_double(s, line));
  return out;
}

std::vector<int> to_ints(const std::string& v, int line) {
  std::vector<int> out;
  for (const std::string& s : split_list(v)) out.push_back(to_int(s, line));
  return out;
}

struct Entry {
  std::string section, key, value;
  int line = 0;
};

std::vector<Entry> tokenize(const std::string& text) {
  std::vector<Entry> entries;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) fail(line, "malformed section header '" + s + "'");
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) fail(line, "empty section name");
      entries.push_back({section, "", "", line});  // marks the header itself
      continue;
    }
    std::size_t eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected 'key = value', got '" + s + "'");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty()) fail(line, "empty key");
    if (section.empty()) fail(line, "key '" + key + "' appears before any [section]");
    entries.push_back({section, key, value, line});
  }
  return entries;
}

bool explicit_index(const std::string& section, int& idx) {
  if (section.rfind("mixture.", 0) != 0) return false;
  const std::string tail = section.substr(8);
  if (tail.empty()) return false;
  auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), idx);
  return ec == std::errc{} && p == tail.data() + tail.size() && idx >= 0;
}

}  // namespace

AppConfig parse_config_text(const std::string& text) {
  AppConfig cfg;
  cfg.text = text;
  std::map<int, ExplicitComponent> explicits;

  for (const Entry& e : tokenize(text)) {
    const std::string& sec = e.section;
    const std::string& k = e.key;
    const std::string& v = e.value;
    const int ln = e.line;
    int cidx = 0;
    const bool is_explicit = explicit_index(sec, cidx);

    if (k.empty()) {  // section header: only validate the name
      if (sec != "run" && sec != "data" && sec != "mixture" && sec != "schedule" &&
          sec != "teacher" && sec != "distill" && sec != "sample" && sec != "eval" &&
          sec != "guide" && sec != "ablate" && !is_explicit)
        fail(ln, "unknown section [" + sec + "]");
      continue;
    }

    if (sec == "run") {
      if (k == "seed") cfg.seed = to_u64(v, ln);
      else if (k == "out") cfg.out = v;
      else fail(ln, "unknown key '" + k + "' in [run]");
    } else if (sec == "data") {
      if (k == "dim") cfg.dim = to_int(v, ln);
      else if (k == "sigma_data") cfg.sigma_data = to_double(v, ln);
      else fail(ln, "unknown key '" + k + "' in [data]");
    } else if (sec == "mixture") {
      if (k == "preset") {
        if (v == "blobs") cfg.mixture.preset = MixturePreset::blobs;
        else if (v == "smooth-signals") cfg.mixture.preset = MixturePreset::smooth_signals;
        else if (v == "explicit") cfg.mixture.preset = MixturePreset::explicit_list;
        else fail(ln, "unknown mixture preset '" + v + "'");
      } else if (k == "labels") cfg.mixture.labels = to_int(v, ln);
      else if (k == "components") cfg.mixture.components = to_int(v, ln);
      else if (k == "spread") cfg.mixture.spread = to_double(v, ln);
      else if (k == "seed") cfg.mixture.seed = to_u64(v, ln);
      else if (k == "standardize") cfg.mixture.standardize = to_bool(v, ln);
      else fail(ln, "unknown key '" + k + "' in [mixture]");
    } else if (is_explicit) {
      ExplicitComponent& c = explicits[cidx];
      if (k == "label") c.label = to_int(v, ln);
      else if (k == "weight") c.weight = to_double(v, ln);
      else if (k == "mean") c.mean = to_doubles(v, ln);
      else if (k == "var") c.var = to_doubles(v, ln);
      else fail(ln, "unknown key '" + k + "' in [" + sec + "]");
    } else if (sec == "schedule") {
      if (k == "sigma_min") cfg.schedule.sigma_min = to_double(v, ln);
      else if (k == "sigma_max") cfg.schedule.sigma_max = to_double(v, ln);
      else if (k == "rho") cfg.schedule.rho = to_double(v, ln);
      else fail(ln, "unknown key '" + k + "' in [schedule]");
    } else if (sec == "teacher") {
      if (k == "hidden") cfg.teacher.hidden = to_ints(v, ln);
      else if (k == "embed_dim") cfg.teacher.embed_dim = to_int(v, ln);
      else if (k == "lr") cfg.teacher.lr = to_double(v, ln);
      else if (k == "iters") cfg.teacher.iters = to_int(v, ln);
      else if (k == "batch") cfg.teacher.batch = to_int(v, ln);
      else if (k == "p_uncond") cfg.teacher.p_uncond = to_double(v, ln);
      else if (k == "p_mean") cfg.teacher.p_mean = to_double(v, ln);
      else if (k == "p_std") cfg.teacher.p_std = to_double(v, ln);
      else fail(ln, "unknown key '" + k + "' in [teacher]");
    } else if (sec == "distill") {
      DistillConfig& t = cfg.distill.train;
      if (k == "teacher") {
        if (v == "neural") cfg.distill.analytic_teacher = false;
        else if (v == "analytic") cfg.distill.analytic_teacher = true;
        else fail(ln, "distill teacher must be 'neural' or 'analytic', got '" + v + "'");
      } else if (k == "teacher_ckpt") cfg.distill.teacher_ckpt = v;
      else if (k == "hidden") cfg.distill.hidden = to_ints(v, ln);
      else if (k == "embed_dim") cfg.distill.embed_dim = to_int(v, ln);
      else if (k == "grid_n") t.grid_n = to_int(v, ln);
      else if (k == "mu_ema") t.mu_ema = to_double(v, ln);
      else if (k == "omega_min") t.omega_min = to_double(v, ln);
      else if (k == "omega_max") t.omega_max = to_double(v, ln);
      else if (k == "p_uncond") t.p_uncond = to_double(v, ln);
      else if (k == "lr") t.lr = to_double(v, ln);
      else if (k == "max_ode_steps") t.max_ode_steps = to_int(v, ln);
      else if (k == "distance") {
        try {
          t.distance = parse_distance(v);
        } catch (const std::exception& ex) {
          fail(ln, ex.what());
        }
      } else if (k == "lambda") {
        if (v == "adaptive") t.lambda_adaptive = true;
        else if (v == "fixed") t.lambda_adaptive = false;
        else fail(ln, "lambda must be 'adaptive' or 'fixed', got '" + v + "'");
      } else if (k == "lambda_fixed") t.lambda_fixed = to_double(v, ln);
      else if (k == "batch") t.batch = to_int(v, ln);
      else if (k == "iters") t.iters = to_long(v, ln);
      else if (k == "init_from_teacher") t.init_from_teacher = to_bool(v, ln);
      else if (k == "p_mean") t.p_mean = to_double(v, ln);
      else if (k == "p_std") t.p_std = to_double(v, ln);
      else if (k == "xi_max") t.xi_max = to_double(v, ln);
      else if (k == "log_every") t.log_every = to_long(v, ln);
      else fail(ln, "unknown key '" + k + "' in [distill]");
    } else if (sec == "sample") {
      if (k == "steps") cfg.sample.sampler.steps = to_int(v, ln);
      else if (k == "gamma") cfg.sample.sampler.gamma = to_double(v, ln);
      else if (k == "nu") cfg.sample.sampler.nu = to_double(v, ln);
      else if (k == "omega") cfg.sample.sampler.omega = to_double(v, ln);
      else if (k == "count") cfg.sample.count = to_int(v, ln);
      else if (k == "label") cfg.sample.label = to_int(v, ln);
      else fail(ln, "unknown key '" + k + "' in [sample]");
    } else if (sec == "eval") {
      if (k == "steps") cfg.eval.steps_list = to_ints(v, ln);
      else if (k == "omega") cfg.eval.omega = to_double(v, ln);
      else if (k == "nu") cfg.eval.nu = to_double(v, ln);
      else if (k == "gamma") cfg.eval.gamma = to_double(v, ln);
      else if (k == "count") cfg.eval.count = to_int(v, ln);
      else if (k == "teacher_steps") cfg.eval.teacher_steps = to_int(v, ln);
      else if (k == "include_teacher") cfg.eval.include_teacher = to_bool(v, ln);
      else fail(ln, "unknown key '" + k + "' in [eval]");
    } else if (sec == "guide") {
      GuidanceConfig& g = cfg.guide.cfg;
      if (k == "method") {
        try {
          g.method = parse_method(v);
        } catch (const std::exception& ex) {
          fail(ln, ex.what());
        }
      } else if (k == "shapes") {
        cfg.guide.shapes.clear();
        for (const std::string& s : split_list(v)) {
          try {
            cfg.guide.shapes.push_back(parse_shape(s));
          } catch (const std::exception& ex) {
            fail(ln, ex.what());
          }
        }
      } else if (k == "steps") g.steps = to_int(v, ln);
      else if (k == "gamma") g.gamma = to_double(v, ln);
      else if (k == "nu") g.nu = to_double(v, ln);
      else if (k == "omega") g.omega = to_double(v, ln);
      else if (k == "window") g.window = to_int(v, ln);
      else if (k == "rho") {
        if (v == "normalized") g.rho_fixed = false;
        else if (v == "fixed") g.rho_fixed = true;
        else fail(ln, "rho must be 'normalized' or 'fixed', got '" + v + "'");
      } else if (k == "rho_scale") g.rho_scale = to_double(v, ln);
      else if (k == "zt_iters") g.zt_iters = to_int(v, ln);
      else if (k == "zt_lr") g.zt_lr = to_double(v, ln);
      else if (k == "count") cfg.guide.count = to_int(v, ln);
      else if (k == "target_lo") cfg.guide.target_lo = to_double(v, ln);
      else if (k == "target_hi") cfg.guide.target_hi = to_double(v, ln);
      else fail(ln, "unknown key '" + k + "' in [guide]");
    } else if (sec == "ablate") {
      if (k == "iters") cfg.ablate.iters = to_int(v, ln);
      else if (k == "count") cfg.ablate.count = to_int(v, ln);
      else fail(ln, "unknown key '" + k + "' in [ablate]");
    } else {
      fail(ln, "unknown section [" + sec + "]");
    }
  }

  for (auto& [idx, comp] : explicits) cfg.mixture.explicit_components.push_back(comp);
  cfg.validate();
  return cfg;
}

AppConfig load_config_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str());
}

void AppConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  check(dim >= 1, "[data] dim must be >= 1");
  check(sigma_data > 0.0, "[data] sigma_data must be positive");
  check(mixture.labels >= 1, "[mixture] labels must be >= 1");
  check(mixture.components >= 1, "[mixture] components must be >= 1");
  check(mixture.spread > 0.0, "[mixture] spread must be positive");
  check(schedule.sigma_min > 0.0 && schedule.sigma_max > schedule.sigma_min,
        "[schedule] needs 0 < sigma_min < sigma_max");
  check(schedule.rho > 0.0, "[schedule] rho must be positive");

  check(!teacher.hidden.empty(), "[teacher] hidden must list at least one layer");
  for (int h : teacher.hidden) check(h >= 1, "[teacher] hidden widths must be >= 1");
  check(teacher.embed_dim >= 2 && teacher.embed_dim % 2 == 0,
        "[teacher] embed_dim must be even and >= 2");
  check(teacher.iters >= 1 && teacher.batch >= 1, "[teacher] iters and batch must be >= 1");
  check(teacher.p_uncond >= 0.0 && teacher.p_uncond <= 1.0,
        "[teacher] p_uncond must be in [0,1]");

  const DistillConfig& t = distill.train;
  check(!distill.hidden.empty(), "[distill] hidden must list at least one layer");
  for (int h : distill.hidden) check(h >= 1, "[distill] hidden widths must be >= 1");
  check(distill.embed_dim >= 2 && distill.embed_dim % 2 == 0,
        "[distill] embed_dim must be even and >= 2");
  check(t.grid_n >= 2, "[distill] grid_n must be >= 2");
  check(t.mu_ema >= 0.0 && t.mu_ema <= 1.0, "[distill] mu_ema must be in [0,1]");
  check(t.omega_min <= t.omega_max, "[distill] omega_min must not exceed omega_max");
  check(t.p_uncond >= 0.0 && t.p_uncond <= 1.0, "[distill] p_uncond must be in [0,1]");
  check(t.max_ode_steps >= 1, "[distill] max_ode_steps must be >= 1");
  check(t.batch >= 1 && t.iters >= 1, "[distill] iters and batch must be >= 1");
  check(t.xi_max >= 0.0 && t.xi_max <= 1.0, "[distill] xi_max must be in [0,1]");
  check(t.log_every >= 1, "[distill] log_every must be >= 1");
  check(!distill.analytic_teacher || t.distance != DistanceMode::teacher_feature,
        "[distill] distance = teacher_feature needs a neural teacher");

  sample.sampler.validate();
  check(sample.count >= 1, "[sample] count must be >= 1");
  check(sample.label >= -1 && sample.label < mixture.labels,
        "[sample] label must be -1 or a valid label index");

  check(!eval.steps_list.empty(), "[eval] steps must list at least one step count");
  for (int s : eval.steps_list) check(s >= 1, "[eval] step counts must be >= 1");
  check(eval.count >= 2, "[eval] count must be >= 2");
  check(eval.teacher_steps >= 1, "[eval] teacher_steps must be >= 1");

  const GuidanceConfig& g = guide.cfg;
  check(g.steps >= 1, "[guide] steps must be >= 1");
  check(g.gamma >= 0.0 && g.gamma <= 1.0, "[guide] gamma must be in [0,1]");
  check(g.window == 0 || (g.window >= 3 && g.window % 2 == 1),
        "[guide] window must be 0 (auto) or an odd number >= 3");
  check(g.zt_iters >= 1, "[guide] zt_iters must be >= 1");
  check(g.zt_lr > 0.0, "[guide] zt_lr must be positive");
  check(!guide.shapes.empty(), "[guide] shapes must list at least one target");
  check(guide.count >= 1, "[guide] count must be >= 1");
  check(guide.target_lo < guide.target_hi, "[guide] target_lo must be below target_hi");

  check(ablate.iters >= 1, "[ablate] iters must be >= 1");
  check(ablate.count >= 2, "[ablate] count must be >= 2");

  if (mixture.preset == MixturePreset::explicit_list) {
    check(!mixture.explicit_components.empty(),
          "[mixture] preset explicit needs [mixture.<k>] sections");
    std::vector<bool> seen(mixture.labels, false);
    for (const ExplicitComponent& c : mixture.explicit_components) {
      check(c.label >= 0 && c.label < mixture.labels,
            "[mixture.<k>] label out of range");
      check(c.weight > 0.0, "[mixture.<k>] weight must be positive");
      check(int(c.mean.size()) == dim, "[mixture.<k>] mean length must equal [data] dim");
      check(int(c.var.size()) == dim, "[mixture.<k>] var length must equal [data] dim");
      for (double v : c.var) check(v > 0.0, "[mixture.<k>] variances must be positive");
      seen[c.label] = true;
    }
    for (int l = 0; l < mixture.labels; ++l)
      check(seen[l], "[mixture] label " + std::to_string(l) + " has no explicit component");
  }
}

ConditionedMixture build_mixture(const AppConfig& cfg) {
  ConditionedMixture mix;
  switch (cfg.mixture.preset) {
    case MixturePreset::blobs:
      mix = ConditionedMixture::blobs(cfg.dim, cfg.mixture.labels, cfg.mixture.components,
                                      cfg.mixture.spread, cfg.mixture.seed);
      break;
    case MixturePreset::smooth_signals:
      mix = ConditionedMixture::smooth_signals(cfg.dim, cfg.mixture.labels,
                                               cfg.mixture.components, cfg.mixture.seed);
      break;
    case MixturePreset::explicit_list: {
      mix.dim = cfg.dim;
      mix.by_label.resize(cfg.mixture.labels);
      for (const ExplicitComponent& c : cfg.mixture.explicit_components)
        mix.by_label[c.label].push_back({c.weight, c.mean, c.var});
      for (auto& comps : mix.by_label) {
        double total = 0.0;
        for (const GaussComponent& c : comps) total += c.weight;
        for (GaussComponent& c : comps) c.weight /= total;
      }
      break;
    }
  }
  if (cfg.mixture.standardize) mix.standardize(cfg.sigma_data);
  mix.validate();
  return mix;
}

StudentConfig student_config(const AppConfig& cfg) {
  StudentConfig sc;
  sc.dim = cfg.dim;
  sc.hidden = cfg.distill.hidden;
  sc.embed_dim = cfg.distill.embed_dim;
  sc.num_labels = cfg.mixture.labels;
  sc.sched = cfg.schedule;
  sc.sched.sigma_data = cfg.sigma_data;
  return sc;
}

}  // namespace ctm
