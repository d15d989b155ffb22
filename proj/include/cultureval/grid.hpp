#pragma once

#include <optional>
#include <string>
#include <vector>

namespace cultureval::grid {

/// Labeled numeric grid: the raw form of every matrix/radar/box artifact.
struct Grid {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<std::optional<double>>> values;  // rows x cols

  bool consistent() const;
};

/// CSV with an empty top-left header cell; undefined cells render as "NA".
/// grid_to_csv(grid_from_csv(text)) == text for emitted files.
std::string grid_to_csv(const Grid& grid);
Grid grid_from_csv(const std::string& text);

/// Self-contained SVG heatmap. Cells are colored on a linear scale between
/// the grid's min and max (white -> steel blue); NA cells are hatched gray.
std::string grid_to_svg_heatmap(const Grid& grid, const std::string& title);

}  // namespace cultureval::grid
