#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mrpred {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct SvgOptions {
  std::string title;
  std::string x_label = "r";
  std::string y_label;
  bool log_y = false;
  int width = 720;
  int height = 480;
};

// Line chart with one polyline per series and a legend. Points that are not
// finite (or not positive under log_y) split the polyline. Output depends
// only on the input.
std::string render_svg(const std::vector<Series>& series, const SvgOptions& options);
void emit_svg(const std::vector<Series>& series, const std::filesystem::path& path, const SvgOptions& options);

}  // namespace mrpred
