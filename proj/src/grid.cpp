#include "cultureval/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cultureval/common.hpp"

namespace cultureval::grid {

bool Grid::consistent() const {
  if (values.size() != row_labels.size()) return false;
  for (const auto& row : values)
    if (row.size() != col_labels.size()) return false;
  return true;
}

namespace {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

}  // namespace

std::string grid_to_csv(const Grid& grid) {
  std::ostringstream out;
  out << "";
  for (const std::string& c : grid.col_labels) out << ',' << csv_escape(c);
  out << '\n';
  for (std::size_t r = 0; r < grid.row_labels.size(); ++r) {
    out << csv_escape(grid.row_labels[r]);
    for (std::size_t c = 0; c < grid.col_labels.size(); ++c) {
      out << ',';
      const auto& v = grid.values[r][c];
      out << (v ? format_double(*v) : "NA");
    }
    out << '\n';
  }
  return out.str();
}

Grid grid_from_csv(const std::string& text) {
  Grid grid;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("grid csv: empty file");
  std::vector<std::string> header = csv_split(line);
  if (header.empty()) throw ParseError("grid csv: empty header");
  grid.col_labels.assign(header.begin() + 1, header.end());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields = csv_split(line);
    if (fields.size() != header.size())
      throw ParseError("grid csv: row width mismatch");
    grid.row_labels.push_back(fields[0]);
    std::vector<std::optional<double>> row;
    for (std::size_t c = 1; c < fields.size(); ++c) {
      if (fields[c] == "NA")
        row.push_back(std::nullopt);
      else
        row.push_back(std::stod(fields[c]));
    }
    grid.values.push_back(std::move(row));
  }
  return grid;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string grid_to_svg_heatmap(const Grid& grid, const std::string& title) {
  const int cell = 46;
  const int left = 140, top = 60;
  const std::size_t rows = grid.row_labels.size();
  const std::size_t cols = grid.col_labels.size();
  const int width = left + static_cast<int>(cols) * cell + 20;
  const int height = top + static_cast<int>(rows) * cell + 40;

  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& row : grid.values)
    for (const auto& v : row)
      if (v) {
        if (!any) {
          lo = hi = *v;
          any = true;
        } else {
          lo = std::min(lo, *v);
          hi = std::max(hi, *v);
        }
      }
  const double span = hi > lo ? hi - lo : 1.0;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << xml_escape(title)
      << "</text>\n";
  // scale note: linear white -> steel blue over [lo, hi]
  svg << "<text x=\"" << left << "\" y=\"36\" fill=\"#555\">scale: " << format_double(lo)
      << " (white) to " << format_double(hi) << " (blue), linear</text>\n";

  for (std::size_t c = 0; c < cols; ++c) {
    svg << "<text x=\"" << left + static_cast<int>(c) * cell + cell / 2 << "\" y=\"" << top - 6
        << "\" text-anchor=\"middle\">" << xml_escape(grid.col_labels[c]) << "</text>\n";
  }
  for (std::size_t r = 0; r < rows; ++r) {
    svg << "<text x=\"" << left - 6 << "\" y=\"" << top + static_cast<int>(r) * cell + cell / 2 + 4
        << "\" text-anchor=\"end\">" << xml_escape(grid.row_labels[r]) << "</text>\n";
    for (std::size_t c = 0; c < cols; ++c) {
      const int x = left + static_cast<int>(c) * cell;
      const int y = top + static_cast<int>(r) * cell;
      const auto& v = grid.values[r][c];
      if (v) {
        const double t = (*v - lo) / span;
        const int red = static_cast<int>(std::lround(255 + (33 - 255) * t));
        const int green = static_cast<int>(std::lround(255 + (102 - 255) * t));
        const int blue = static_cast<int>(std::lround(255 + (172 - 255) * t));
        svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\""
            << cell << "\" fill=\"rgb(" << red << ',' << green << ',' << blue
            << ")\" stroke=\"#999\"/>\n";
        svg << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
            << "\" text-anchor=\"middle\" fill=\"" << (t > 0.6 ? "#fff" : "#222") << "\">"
            << format_double(std::round(*v * 1000.0) / 1000.0) << "</text>\n";
      } else {
        svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\""
            << cell << "\" fill=\"#ddd\" stroke=\"#999\"/>\n";
        svg << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
            << "\" text-anchor=\"middle\" fill=\"#666\">NA</text>\n";
      }
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace cultureval::grid
