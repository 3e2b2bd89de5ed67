#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "ctm/num.hpp"

namespace ctm {

std::uint64_t fnv1a64(std::string_view s);
std::string hex16(std::uint64_t x);

// Shortest decimal string that parses back to the exact same double.
std::string format_double(double x);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

// Run directory for one invocation. An explicit override is created as
// given; otherwise a fresh "<subcommand>-<utc stamp>-<hash prefix>" under
// runs/, suffixed if a same-second rerun collides.
std::filesystem::path make_run_dir(const std::string& out_override,
                                   const std::string& subcommand,
                                   std::uint64_t config_hash);

// Header-checked comma-separated table; all numbers go through format_double.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream f_;
  std::size_t width_;
  std::string path_;
};

struct SvgSeries {
  std::string label;
  Vec y;
  std::string color;  // any SVG color literal
};

// Minimal line chart over the sample index, one polyline per series.
void svg_line_chart(const std::string& path, const std::string& title,
                    const std::vector<SvgSeries>& series);

}  // namespace ctm
