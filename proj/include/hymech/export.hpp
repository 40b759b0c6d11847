#pragma once

// Text artifacts: comma-separated tables with 17 significant digits, and
// whitespace-separated two-column plot series.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "hymech/hybrid.hpp"

namespace hymech::io {

/// Shortest "%.17g" rendering; parses back to the same double.
std::string format_double(double x);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

void write_table(const std::filesystem::path& path, const Table& table);
Table read_table(const std::filesystem::path& path);
/// Numeric view of a table read back from disk. Throws ValidationError on a non-numeric cell.
std::vector<std::vector<double>> numeric_rows(const Table& table);

/// Uniform grid over the record's span evaluated on the dense output, plus the
/// first and last state of every arc (so each impact appears as a pre and a
/// post row at the same time). `n` selects the leading configuration block.
std::vector<TangentState> sample_record(const HybridFlowRecord& record, int n, int samples);

/// Header t, q labels, then "<label>_dot".
Table trajectory_table(const std::vector<std::string>& labels, const std::vector<TangentState>& states);
Table events_table(const std::vector<std::string>& labels, const std::vector<ImpactEvent>& events);

using Series = std::vector<std::pair<double, double>>;
void write_series(const std::filesystem::path& path, const Series& series);
void write_impact_times(const std::filesystem::path& path, const std::vector<ImpactEvent>& events);

}  // namespace hymech::io
