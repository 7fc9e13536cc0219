#include "acm/error.hpp"
#include "acm/graph.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace acm {
namespace {

namespace fs = std::filesystem;

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

[[noreturn]] void parse_error(const fs::path& path, long line, const std::string& what) {
  throw ValidationError(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

struct EdgeFile {
  std::vector<Edge> edges;
  std::vector<long> lines;  // source line of each edge
};

EdgeFile read_edges(const fs::path& path) {
  auto in = open_input(path);
  EdgeFile out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    std::istringstream tokens{std::string(view)};
    std::vector<std::string> parts;
    for (std::string t; tokens >> t;) parts.push_back(t);
    if (parts.empty()) continue;
    long u = 0;
    long v = 0;
    if (parts.size() != 2 || !parse_number<long>(parts[0], u) || !parse_number<long>(parts[1], v) ||
        u < 0 || v < 0) {
      parse_error(path, lineno, "expected two non-negative node indices, got '" + line + "'");
    }
    if (u == v) parse_error(path, lineno, "self-loop at node " + std::to_string(u));
    out.edges.push_back({static_cast<int>(u), static_cast<int>(v)});
    out.lines.push_back(lineno);
  }
  return out;
}

Matrix read_features(const fs::path& path, bool header) {
  auto in = open_input(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  long lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (header && lineno == 1) continue;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    std::vector<double> row;
    row.reserve(cells.size());
    for (auto cell : cells) {
      double x = 0.0;
      if (!parse_number<double>(cell, x)) {
        parse_error(path, lineno, "malformed number '" + std::string(cell) + "'");
      }
      row.push_back(x);
    }
    if (rows.empty()) width = row.size();
    if (row.size() != width) {
      parse_error(path, lineno,
                  "expected " + std::to_string(width) + " columns, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) x(i, j) = rows[i][j];
  }
  return x;
}

LabelMatrix read_labels(const fs::path& path, int declared_classes) {
  auto in = open_input(path);
  std::vector<std::vector<long>> rows;
  std::vector<long> lines;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<long> row;
    for (auto cell : split_csv(line)) {
      long v = 0;
      if (!parse_number<long>(cell, v)) {
        parse_error(path, lineno, "malformed label '" + std::string(cell) + "'");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      parse_error(path, lineno, "inconsistent column count");
    }
    rows.push_back(std::move(row));
    lines.push_back(lineno);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n == 0) return LabelMatrix(0, std::max(declared_classes, 0));

  if (rows.front().size() == 1) {
    long max_id = -1;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i][0] < 0) parse_error(path, lines[i], "negative class id");
      max_id = std::max(max_id, rows[i][0]);
    }
    const long c = declared_classes > 0 ? declared_classes : max_id + 1;
    LabelMatrix z = LabelMatrix::Zero(n, c);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (rows[i][0] >= c) {
        parse_error(path, lines[i], "class id " + std::to_string(rows[i][0]) + " >= class count");
      }
      z(i, rows[i][0]) = 1;
    }
    return z;
  }

  const auto c = static_cast<Eigen::Index>(rows.front().size());
  LabelMatrix z(n, c);
  for (Eigen::Index i = 0; i < n; ++i) {
    long sum = 0;
    for (Eigen::Index k = 0; k < c; ++k) {
      const long v = rows[i][k];
      if (v != 0 && v != 1) parse_error(path, lines[i], "label row is not one-hot");
      z(i, k) = static_cast<int>(v);
      sum += v;
    }
    if (sum != 1) parse_error(path, lines[i], "label row is not one-hot (sums to " + std::to_string(sum) + ")");
  }
  return z;
}

}  // namespace

Graph load_graph(const fs::path& edge_path, const fs::path& feature_path, const fs::path& label_path,
                 const LoadOptions& options) {
  auto edges = read_edges(edge_path);
  Matrix x = read_features(feature_path, options.features_header);
  LabelMatrix z = read_labels(label_path, options.class_count);
  if (x.rows() != z.rows()) {
    throw ValidationError("dimension mismatch: " + feature_path.string() + " has " +
                          std::to_string(x.rows()) + " rows, " + label_path.string() + " has " +
                          std::to_string(z.rows()));
  }
  for (std::size_t k = 0; k < edges.edges.size(); ++k) {
    const auto& e = edges.edges[k];
    if (e.u >= x.rows() || e.v >= x.rows()) {
      parse_error(edge_path, edges.lines[k],
                  "dimension mismatch: node index exceeds N = " + std::to_string(x.rows()));
    }
  }
  return Graph::checked(std::move(edges.edges), std::move(x), std::move(z));
}

Graph load_graph_dir(const fs::path& dir, const LoadOptions& options) {
  return load_graph(dir / "edges.txt", dir / "features.csv", dir / "labels.csv", options);
}

void save_graph(const Graph& g, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "edges.txt");
    for (const auto& e : g.edges()) out << e.u << ' ' << e.v << '\n';
  }
  {
    std::ofstream out(dir / "features.csv");
    char buf[32];
    for (Eigen::Index i = 0; i < g.features().rows(); ++i) {
      for (Eigen::Index j = 0; j < g.features().cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", g.features()(i, j));
        if (j) out << ',';
        out << buf;
      }
      out << '\n';
    }
  }
  {
    // One-hot rows keep the class count (including empty classes); a single
    // column would read back as class ids, so C = 1 is written as ids.
    std::ofstream out(dir / "labels.csv");
    for (Eigen::Index i = 0; i < g.labels().rows(); ++i) {
      if (g.class_count() < 2) {
        out << g.class_of(static_cast<int>(i)) << '\n';
        continue;
      }
      for (Eigen::Index k = 0; k < g.labels().cols(); ++k) out << (k ? "," : "") << g.labels()(i, k);
      out << '\n';
    }
  }
  if (!fs::exists(dir / "labels.csv")) throw ValidationError("failed to write " + dir.string());
}

}  // namespace acm
