#include "ctm/runio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ctime>
#include <sstream>
#include <stdexcept>

namespace ctm {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex16(std::uint64_t x) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[x & 0xf];
    x >>= 4;
  }
  return s;
}

std::string format_double(double x) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, p);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f.write(text.data(), std::streamsize(text.size()));
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

std::filesystem::path make_run_dir(const std::string& out_override,
                                   const std::string& subcommand,
                                   std::uint64_t config_hash) {
  namespace fs = std::filesystem;
  if (!out_override.empty()) {
    fs::path dir(out_override);
    fs::create_directories(dir);
    return dir;
  }
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
  const std::string base =
      subcommand + "-" + stamp + "-" + hex16(config_hash).substr(0, 8);
  fs::path dir = fs::path("runs") / base;
  for (int k = 2; fs::exists(dir); ++k) dir = fs::path("runs") / (base + "-" + std::to_string(k));
  fs::create_directories(dir);
  return dir;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : f_(path, std::ios::binary), width_(header.size()), path_(path) {
  if (!f_) throw std::runtime_error("cannot open '" + path + "' for writing");
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_)
    throw std::logic_error(path_ + ": expected " + std::to_string(width_) + " cells, got " +
                           std::to_string(cells.size()));
  // validate everything before streaming so a rejected row leaves no bytes
  for (const std::string& c : cells)
    if (c.find_first_of(",\n\"") != std::string::npos)
      throw std::logic_error(path_ + ": cell needs quoting, which this writer avoids");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) f_ << ',';
    f_ << cells[i];
  }
  f_ << '\n';
  if (!f_) throw std::runtime_error("write failed for '" + path_ + "'");
}

void svg_line_chart(const std::string& path, const std::string& title,
                    const std::vector<SvgSeries>& series) {
  const double W = 640, H = 360, ml = 50, mr = 16, mt = 28, mb = 24;
  double lo = 0.0, hi = 1.0;
  std::size_t n = 0;
  bool first = true;
  for (const SvgSeries& s : series) {
    n = std::max(n, s.y.size());
    for (double v : s.y) {
      if (!std::isfinite(v)) continue;
      if (first) lo = hi = v, first = false;
      else lo = std::min(lo, v), hi = std::max(hi, v);
    }
  }
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const double pad = 0.05 * (hi - lo);
  lo -= pad, hi += pad;
  const double px = (W - ml - mr) / double(n > 1 ? n - 1 : 1);
  auto ymap = [&](double v) { return mt + (H - mt - mb) * (hi - v) / (hi - lo); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << ml << "\" y=\"18\" font-family=\"monospace\" font-size=\"13\">" << title
      << "</text>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
      << "\" stroke=\"#888\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
      << H - mb << "\" stroke=\"#888\"/>\n";
  out << "<text x=\"4\" y=\"" << mt + 4 << "\" font-family=\"monospace\" font-size=\"11\">"
      << format_double(hi) << "</text>\n";
  out << "<text x=\"4\" y=\"" << H - mb << "\" font-family=\"monospace\" font-size=\"11\">"
      << format_double(lo) << "</text>\n";
  int li = 0;
  for (const SvgSeries& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      if (i) out << ' ';
      out << ml + px * double(i) << ',' << ymap(s.y[i]);
    }
    out << "\"/>\n";
    out << "<text x=\"" << W - mr - 150 << "\" y=\"" << mt + 14 * ++li
        << "\" font-family=\"monospace\" font-size=\"11\" fill=\"" << s.color << "\">" << s.label
        << "</text>\n";
  }
  out << "</svg>\n";
  write_text_file(path, out.str());
}

}  // namespace ctm
