#include "hymech/export.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hymech::io {

std::string format_double(double x) {
  char buf[40];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf, static_cast<std::size_t>(len));
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out;
}

}  // namespace

void write_table(const std::filesystem::path& path, const Table& table) {
  auto out = open_out(path);
  out << join(table.header) << '\n';
  for (const auto& row : table.rows) out << join(row) << '\n';
  finish(out, path);
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": missing header");
  t.header = split_csv(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.rows.push_back(split_csv(line));
  }
  return t;
}

std::vector<std::vector<double>> numeric_rows(const Table& table) {
  std::vector<std::vector<double>> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::vector<double> row;
    for (const auto& cell : table.rows[r]) {
      double x = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), x);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw ValidationError("row " + std::to_string(r + 1) + ": non-numeric cell '" + cell + "'");
      row.push_back(x);
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<TangentState> sample_record(const HybridFlowRecord& record, int n, int samples) {
  if (record.arcs.empty()) throw ValidationError("cannot export an empty record");
  if (samples < 2) throw ValidationError("output.samples must be at least 2");
  const double t0 = record.arcs.front().t_begin();
  const double t1 = record.arcs.back().t_end();
  std::vector<double> grid(samples);
  for (int i = 0; i < samples; ++i) grid[i] = t0 + (t1 - t0) * i / (samples - 1);

  std::vector<TangentState> out;
  auto g = grid.begin();
  for (const auto& arc : record.arcs) {
    out.push_back(state_at(arc, arc.t_begin(), n));
    while (g != grid.end() && *g <= arc.t_begin()) ++g;
    for (; g != grid.end() && *g < arc.t_end(); ++g) out.push_back(state_at(arc, *g, n));
    if (arc.t_end() > arc.t_begin()) out.push_back(state_at(arc, arc.t_end(), n));
  }
  return out;
}

Table trajectory_table(const std::vector<std::string>& labels, const std::vector<TangentState>& states) {
  Table t;
  t.header.push_back("t");
  for (const auto& l : labels) t.header.push_back(l);
  for (const auto& l : labels) t.header.push_back(l + "_dot");
  for (const auto& s : states) {
    std::vector<std::string> row{format_double(s.t)};
    for (Eigen::Index i = 0; i < s.q.size(); ++i) row.push_back(format_double(s.q[i]));
    for (Eigen::Index i = 0; i < s.v.size(); ++i) row.push_back(format_double(s.v[i]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table events_table(const std::vector<std::string>& labels, const std::vector<ImpactEvent>& events) {
  Table t;
  t.header = {"tau", "guard"};
  for (const char* side : {"pre", "post"}) {
    for (const auto& l : labels) t.header.push_back(std::string(side) + "_" + l);
    for (const auto& l : labels) t.header.push_back(std::string(side) + "_" + l + "_dot");
  }
  std::size_t mu_dim = 0;
  for (const auto& e : events) mu_dim = std::max(mu_dim, static_cast<std::size_t>(e.mu_pre.size()));
  for (const char* side : {"mu_pre", "mu_post"})
    for (std::size_t i = 0; i < mu_dim; ++i) t.header.push_back(std::string(side) + "_" + std::to_string(i + 1));

  for (const auto& e : events) {
    std::vector<std::string> row{format_double(e.tau), e.guard_label};
    for (const TangentState* s : {&e.pre_state, &e.post_state}) {
      for (Eigen::Index i = 0; i < s->q.size(); ++i) row.push_back(format_double(s->q[i]));
      for (Eigen::Index i = 0; i < s->v.size(); ++i) row.push_back(format_double(s->v[i]));
    }
    for (const Vector* mu : {&e.mu_pre, &e.mu_post})
      for (std::size_t i = 0; i < mu_dim; ++i)
        row.push_back(static_cast<Eigen::Index>(i) < mu->size() ? format_double((*mu)[i]) : "nan");
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_series(const std::filesystem::path& path, const Series& series) {
  if (series.empty()) throw ValidationError("cannot export an empty series");
  auto out = open_out(path);
  for (const auto& [a, b] : series) out << format_double(a) << ' ' << format_double(b) << '\n';
  finish(out, path);
}

void write_impact_times(const std::filesystem::path& path, const std::vector<ImpactEvent>& events) {
  auto out = open_out(path);
  for (const auto& e : events) out << format_double(e.tau) << ' ' << e.guard_label << '\n';
  finish(out, path);
}

}  // namespace hymech::io
