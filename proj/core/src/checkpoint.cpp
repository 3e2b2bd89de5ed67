#include "ctm/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace ctm {

using nlohmann::json;

namespace {

json schedule_meta(const Schedule& s) {
  return {{"sigma_min", s.sigma_min},
          {"sigma_max", s.sigma_max},
          {"rho", s.rho},
          {"sigma_data", s.sigma_data}};
}

Schedule schedule_from(const json& j) {
  Schedule s;
  s.sigma_min = j.at("sigma_min").get<double>();
  s.sigma_max = j.at("sigma_max").get<double>();
  s.rho = j.at("rho").get<double>();
  s.sigma_data = j.at("sigma_data").get<double>();
  return s;
}

json emb_meta(const Embeddings& e) {
  return {{"dim", e.dim}, {"num_labels", e.num_labels}, {"f_min", e.f_min}, {"f_max", e.f_max}};
}

Embeddings emb_from(const json& meta, const json& arrays, const std::string& prefix) {
  Embeddings e;
  e.dim = meta.at("dim").get<int>();
  e.num_labels = meta.at("num_labels").get<int>();
  e.f_min = meta.at("f_min").get<double>();
  e.f_max = meta.at("f_max").get<double>();
  e.omega_freqs = arrays.at(prefix + "omega_freqs").get<Vec>();
  e.cond = arrays.at(prefix + "cond").get<Vec>();
  if (int(e.omega_freqs.size()) != e.dim / 2 ||
      int(e.cond.size()) != (e.num_labels + 1) * e.dim)
    throw std::runtime_error("checkpoint: embedding array sizes inconsistent with meta");
  return e;
}

void put_net(json& arrays, const MlpNet& net, const std::string& prefix) {
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    arrays[prefix + std::to_string(l) + ".w"] = net.layers[l].w;
    arrays[prefix + std::to_string(l) + ".b"] = net.layers[l].b;
  }
}

MlpNet net_from(const json& meta, const json& arrays, const std::string& prefix) {
  const std::vector<int> widths = meta.at("widths").get<std::vector<int>>();
  MlpNet net;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    layer.in = widths[l];
    layer.out = widths[l + 1];
    layer.w = arrays.at(prefix + std::to_string(l) + ".w").get<Vec>();
    layer.b = arrays.at(prefix + std::to_string(l) + ".b").get<Vec>();
    if (int(layer.w.size()) != layer.in * layer.out || int(layer.b.size()) != layer.out)
      throw std::runtime_error("checkpoint: layer array sizes inconsistent with meta");
    net.layers.push_back(std::move(layer));
  }
  return net;
}

std::vector<int> net_widths(const MlpNet& net) {
  std::vector<int> w;
  w.push_back(net.input_width());
  for (const DenseLayer& l : net.layers) w.push_back(l.out);
  return w;
}

void write_doc(const json& doc, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  f << doc.dump() << "\n";
  if (!f) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

json read_doc(const std::string& path, const std::string& expect_kind) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  json doc;
  try {
    f >> doc;
  } catch (const std::exception& e) {
    throw std::runtime_error("checkpoint: parse error in '" + path + "': " + e.what());
  }
  if (doc.value("format", "") != "ctm-checkpoint")
    throw std::runtime_error("checkpoint: '" + path + "' is not a checkpoint file");
  if (doc.value("version", 0) != 1)
    throw std::runtime_error("checkpoint: unsupported version in '" + path + "'");
  if (doc.value("kind", "") != expect_kind)
    throw std::runtime_error("checkpoint: '" + path + "' holds kind '" + doc.value("kind", "?") +
                             "', expected '" + expect_kind + "'");
  return doc;
}

}  // namespace

void save_teacher_checkpoint(const NeuralTeacher& t, const std::string& path) {
  json doc;
  doc["format"] = "ctm-checkpoint";
  doc["version"] = 1;
  doc["kind"] = "teacher";
  doc["meta"] = {{"dim", t.dim},
                 {"schedule", schedule_meta(t.sched)},
                 {"embed", emb_meta(t.emb)},
                 {"widths", net_widths(t.net)}};
  json arrays;
  put_net(arrays, t.net, "net.");
  arrays["emb.omega_freqs"] = t.emb.omega_freqs;
  arrays["emb.cond"] = t.emb.cond;
  doc["arrays"] = std::move(arrays);
  write_doc(doc, path);
}

NeuralTeacher load_teacher_checkpoint(const std::string& path) {
  const json doc = read_doc(path, "teacher");
  const json& meta = doc.at("meta");
  const json& arrays = doc.at("arrays");
  NeuralTeacher t;
  t.dim = meta.at("dim").get<int>();
  t.sched = schedule_from(meta.at("schedule"));
  t.emb = emb_from(meta.at("embed"), arrays, "emb.");
  t.net = net_from(meta, arrays, "net.");
  if (t.net.input_width() != t.dim + t.emb.dim || t.net.output_width() != t.dim)
    throw std::runtime_error("checkpoint: teacher net widths inconsistent with dim/embed");
  return t;
}

void save_student_checkpoint(const StudentModel& m, const std::string& path) {
  json doc;
  doc["format"] = "ctm-checkpoint";
  doc["version"] = 1;
  doc["kind"] = "student";
  doc["meta"] = {{"dim", m.dim},
                 {"schedule", schedule_meta(m.sched)},
                 {"embed", emb_meta(m.emb)},
                 {"widths", net_widths(m.net)}};
  json arrays;
  put_net(arrays, m.net, "net.");
  put_net(arrays, m.ema_net, "ema.");
  arrays["emb.omega_freqs"] = m.emb.omega_freqs;
  arrays["emb.cond"] = m.emb.cond;
  arrays["ema_emb.omega_freqs"] = m.ema_emb.omega_freqs;
  arrays["ema_emb.cond"] = m.ema_emb.cond;
  doc["arrays"] = std::move(arrays);
  write_doc(doc, path);
}

StudentModel load_student_checkpoint(const std::string& path) {
  const json doc = read_doc(path, "student");
  const json& meta = doc.at("meta");
  const json& arrays = doc.at("arrays");
  StudentModel m;
  m.dim = meta.at("dim").get<int>();
  m.sched = schedule_from(meta.at("schedule"));
  m.emb = emb_from(meta.at("embed"), arrays, "emb.");
  m.ema_emb = emb_from(meta.at("embed"), arrays, "ema_emb.");
  m.net = net_from(meta, arrays, "net.");
  m.ema_net = net_from(meta, arrays, "ema.");
  if (m.net.input_width() != m.dim + m.emb.dim || m.net.output_width() != m.dim)
    throw std::runtime_error("checkpoint: student net widths inconsistent with dim/embed");
  return m;
}

}  // namespace ctm
