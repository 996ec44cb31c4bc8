#pragma once

#include <string>
#include <vector>

#include "kdwbc/metrics.hpp"

namespace kdwbc {

// Locale-independent CSV of the run log: one header row naming every column
// (with units), one row per tick, shortest round-trip double formatting.
void exportCsv(const std::vector<LogRecord>& log, int nv, int n_j, const std::string& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 if absent
};

CsvTable readCsv(const std::string& path);

// Rebuilds metrics from an exported CSV (solve-time fields stay zero: wall
// times are not exported).
Metrics metricsFromCsv(const std::string& path);

}  // namespace kdwbc
