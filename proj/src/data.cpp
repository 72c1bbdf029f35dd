#include "spn/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "spn/error.hpp"

namespace spn {

int DataMatrix::n_classes() const {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  fields.push_back(field);
  for (auto& f : fields) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return fields;
}

bool parse_int(const std::string& tok, int& value) {
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  return ec == std::errc{} && p == tok.data() + tok.size();
}

}  // namespace

DataMatrix load_data_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);

  std::vector<std::vector<int>> rows;
  bool label_column = false;
  std::string line;
  bool first = true;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (first) {
      first = false;
      int dummy;
      const bool is_header = !parse_int(fields.front(), dummy);
      if (is_header) {
        label_column = fields.back() == "label";
        width = fields.size();
        continue;
      }
      width = fields.size();
    }
    if (fields.size() != width)
      throw IoError(path + ": inconsistent column count at data row " + std::to_string(rows.size()));
    std::vector<int> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i)
      if (!parse_int(fields[i], row[i]))
        throw IoError(path + ": non-integer field '" + fields[i] + "'");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path + ": no data rows");

  const std::size_t n_cols = width - (label_column ? 1 : 0);
  if (n_cols == 0) throw IoError(path + ": no feature columns");
  DataMatrix data;
  data.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n_cols));
  if (label_column) data.labels.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < n_cols; ++c) {
      const int v = rows[r][c];
      if (v != 0 && v != 1)
        throw Error(path + ": non-binary value " + std::to_string(v) + " at row " +
                    std::to_string(r));
      data.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          static_cast<std::uint8_t>(v);
    }
    if (label_column) {
      const int y = rows[r].back();
      if (y < 0) throw Error(path + ": negative label at row " + std::to_string(r));
      data.labels[r] = y;
    }
  }
  return data;
}

void save_data_csv(const DataMatrix& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (Eigen::Index c = 0; c < data.cols(); ++c) out << (c ? "," : "") << 'v' << c;
  if (data.has_labels()) out << ",label";
  out << '\n';
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c)
      out << (c ? "," : "") << static_cast<int>(data.X(r, c));
    if (data.has_labels()) out << ',' << data.labels[static_cast<std::size_t>(r)];
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace spn
