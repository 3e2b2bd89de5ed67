#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "ctm/checkpoint.hpp"
#include "ctm/runio.hpp"

using namespace ctm;
namespace fs = std::filesystem;

namespace {

// std::stod raises out_of_range on subnormals (strtod flags ERANGE), so go
// through strtod directly; exact subnormal round-trips are part of the test.
double parse_back(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

NeuralTeacher demo_teacher(std::uint64_t seed) {
  NeuralTeacher t;
  t.dim = 2;
  t.sched = Schedule{};
  t.emb = Embeddings::make(8, 3, seed);
  Rng rng = Rng::from_seed(seed).fork(1);
  t.net = MlpNet::make({10, 6, 2}, rng);
  return t;
}

}  // namespace

TEST_CASE("io: fnv1a hashing and hex formatting") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("hello") == 0xa430d84680aabd0bull);
  CHECK(fnv1a64("hellp") != fnv1a64("hello"));

  CHECK(hex16(0) == "0000000000000000");
  CHECK(hex16(0xdeadbeefull) == "00000000deadbeef");
  CHECK(hex16(~0ull) == "ffffffffffffffff");
}

TEST_CASE("io: shortest double formatting round-trips") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 1e308, 5e-324, -0.0, 2.5, -17.25,
                   123456789.123456789, 3.141592653589793}) {
    const std::string s = format_double(x);
    const double back = parse_back(s);
    CHECK(back == x);
    CHECK(std::signbit(back) == std::signbit(x));
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5) == "-2.5");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
}

TEST_CASE("io: text files round-trip bytes") {
  const std::string path = "io_tmp.txt";
  const std::string text = "line one\nline two\n\xce\xb1\xce\xb2\n";
  write_text_file(path, text);
  CHECK(read_text_file(path) == text);
  fs::remove(path);
  CHECK_THROWS_AS(read_text_file("missing_file_io.txt"), std::runtime_error);
}

TEST_CASE("io: csv writer enforces shape and plain cells") {
  const std::string path = "io_tmp.csv";
  {
    CsvWriter csv(path, {"a", "b", "c"});
    csv.row({"1", "2.5", "x"});
    csv.row({format_double(0.1), "-3", "y"});
    CHECK_THROWS_AS(csv.row({"1", "2"}), std::logic_error);
    CHECK_THROWS_AS(csv.row({"1", "2", "with,comma"}), std::logic_error);
    CHECK_THROWS_AS(csv.row({"1", "2", "with\"quote"}), std::logic_error);
  }
  CHECK(read_text_file(path) == "a,b,c\n1,2.5,x\n0.1,-3,y\n");
  fs::remove(path);
}

TEST_CASE("io: run directories") {
  // explicit override is used verbatim, nested paths included
  fs::path p = make_run_dir("io_tmp_runs/nested/dir", "sample", 0x1234);
  CHECK(p == fs::path("io_tmp_runs/nested/dir"));
  CHECK(fs::is_directory(p));
  fs::remove_all("io_tmp_runs");

  // default naming: runs/<sub>-<stamp>-<hash8>, suffixed on collision
  fs::path a = make_run_dir("", "smoke", 0xabcdef0123456789ull);
  fs::path b = make_run_dir("", "smoke", 0xabcdef0123456789ull);
  CHECK(a != b);
  CHECK(fs::is_directory(a));
  CHECK(fs::is_directory(b));
  const std::string an = a.filename().string();
  CHECK(an.rfind("smoke-", 0) == 0);
  CHECK(an.find("abcdef01") != std::string::npos);
  std::error_code ec;
  fs::remove(a, ec);
  fs::remove(b, ec);
  fs::remove("runs", ec);  // only if now empty
}

TEST_CASE("io: svg chart writes well-formed polylines") {
  const std::string path = "io_tmp.svg";
  svg_line_chart(path, "losses",
                 {{"train", {1.0, 0.5, 0.25, 0.125}, "#c33"},
                  {"flat", {2.0, 2.0, 2.0, 2.0}, "#36c"}});
  const std::string svg = read_text_file(path);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("losses") != std::string::npos);
  CHECK(svg.find("train") != std::string::npos);
  CHECK(svg.find("#36c") != std::string::npos);
  CHECK(std::count(svg.begin(), svg.end(), '\n') > 5);
  std::size_t poly = 0, at = 0;
  while ((at = svg.find("<polyline", at)) != std::string::npos) ++poly, ++at;
  CHECK(poly == 2);
  CHECK(svg.find("nan") == std::string::npos);
  CHECK(svg.find("inf") == std::string::npos);
  fs::remove(path);
}

TEST_CASE("io: teacher checkpoints restore bitwise") {
  NeuralTeacher t = demo_teacher(3);
  const std::string pa = "io_teacher_a.json", pb = "io_teacher_b.json";
  save_teacher_checkpoint(t, pa);
  NeuralTeacher r = load_teacher_checkpoint(pa);

  CHECK(r.dim == t.dim);
  CHECK(r.sched.sigma_max == t.sched.sigma_max);
  CHECK(r.emb.omega_freqs == t.emb.omega_freqs);
  CHECK(r.emb.cond == t.emb.cond);
  REQUIRE(r.net.layers.size() == t.net.layers.size());
  for (std::size_t l = 0; l < t.net.layers.size(); ++l) {
    CHECK(r.net.layers[l].w == t.net.layers[l].w);
    CHECK(r.net.layers[l].b == t.net.layers[l].b);
  }

  // restored model computes the same numbers
  Vec z = {0.7, -1.3};
  CHECK(r.denoise(1, z, 2.0) == t.denoise(1, z, 2.0));
  CHECK(r.denoise(std::nullopt, z, 0.05) == t.denoise(std::nullopt, z, 0.05));

  // save -> load -> save is byte-identical
  save_teacher_checkpoint(r, pb);
  CHECK(read_text_file(pa) == read_text_file(pb));
  fs::remove(pa);
  fs::remove(pb);
}

TEST_CASE("io: student checkpoints keep online and EMA copies apart") {
  StudentConfig sc;
  sc.dim = 2;
  sc.hidden = {6};
  sc.embed_dim = 8;
  sc.num_labels = 2;
  StudentModel m = StudentModel::make(sc, 9);
  m.net.layers[0].w[0] += 0.5;  // decorrelate the copies
  m.emb.cond[1] -= 0.25;

  const std::string pa = "io_student_a.json", pb = "io_student_b.json";
  save_student_checkpoint(m, pa);
  StudentModel r = load_student_checkpoint(pa);

  CHECK(r.net.layers[0].w == m.net.layers[0].w);
  CHECK(r.ema_net.layers[0].w == m.ema_net.layers[0].w);
  CHECK(r.net.layers[0].w != r.ema_net.layers[0].w);
  CHECK(r.emb.cond == m.emb.cond);
  CHECK(r.ema_emb.cond == m.ema_emb.cond);

  Vec z = {0.4, 0.9};
  CHECK(r.jump(false, 1, 3.0, z, 5.0, 0.1) == m.jump(false, 1, 3.0, z, 5.0, 0.1));
  CHECK(r.jump(true, 1, 3.0, z, 5.0, 0.1) == m.jump(true, 1, 3.0, z, 5.0, 0.1));

  save_student_checkpoint(r, pb);
  CHECK(read_text_file(pa) == read_text_file(pb));
  fs::remove(pa);
  fs::remove(pb);
}

TEST_CASE("io: checkpoint loading rejects the wrong document") {
  NeuralTeacher t = demo_teacher(5);
  const std::string path = "io_reject.json";
  save_teacher_checkpoint(t, path);

  CHECK_THROWS_WITH_AS(load_student_checkpoint(path), doctest::Contains("holds kind 'teacher'"),
                       std::runtime_error);

  write_text_file(path, "{\"format\":\"other\"}\n");
  CHECK_THROWS_WITH_AS(load_teacher_checkpoint(path), doctest::Contains("not a checkpoint"),
                       std::runtime_error);

  write_text_file(path, "{\"format\":\"ctm-checkpoint\",\"version\":2,\"kind\":\"teacher\"}\n");
  CHECK_THROWS_WITH_AS(load_teacher_checkpoint(path), doctest::Contains("unsupported version"),
                       std::runtime_error);

  write_text_file(path, "not json at all");
  CHECK_THROWS_WITH_AS(load_teacher_checkpoint(path), doctest::Contains("parse error"),
                       std::runtime_error);

  // arrays must agree with the meta block
  save_teacher_checkpoint(t, path);
  nlohmann::json doc = nlohmann::json::parse(read_text_file(path));
  doc["arrays"]["emb.cond"] = Vec{1.0, 2.0};
  write_text_file(path, doc.dump());
  CHECK_THROWS_WITH_AS(load_teacher_checkpoint(path),
                       doctest::Contains("embedding array sizes"), std::runtime_error);

  CHECK_THROWS_AS(load_teacher_checkpoint("missing_ckpt.json"), std::runtime_error);
  fs::remove(path);
}
