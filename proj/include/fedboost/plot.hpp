#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

// Minimal static SVG charts for the evaluation summaries.
namespace fedboost::plot {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Spec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool lines = false;  // connect points (sorted by x); scatter otherwise
};

void write_svg(const std::filesystem::path& path, const Spec& spec, std::span<const Series> series);

}  // namespace fedboost::plot
