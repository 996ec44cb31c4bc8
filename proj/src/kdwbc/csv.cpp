#include "kdwbc/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kdwbc {

namespace {

void appendDouble(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

std::vector<std::string> csvSchema(int nv, int n_j) {
  std::vector<std::string> h;
  h.push_back("t_s");
  auto block = [&](const std::string& base, int n, const std::string& unit) {
    for (int i = 0; i < n; ++i) h.push_back(base + std::to_string(i) + "_" + unit);
  };
  block("q", nv, "si");
  block("v", nv, "si");
  block("xplan", 12 + n_j, "si");
  block("uplan", 12 + n_j, "si");
  block("xi", nv + 12, "si");
  block("tau", n_j, "Nm");
  block("fsim", 12, "N");
  block("hqp_res", 4, "norm");
  h.push_back("planner_tick_flag");
  h.push_back("plan_cost");
  h.push_back("plan_iterations");
  h.push_back("swing_foot_err_m");
  h.push_back("cmd_vx_mps");
  h.push_back("cmd_vy_mps");
  h.push_back("cmd_yawrate_rps");
  h.push_back("cmd_height_m");
  h.push_back("ref_x_m");
  h.push_back("ref_y_m");
  h.push_back("ref_yaw_rad");
  h.push_back("ref_z_m");
  return h;
}

}  // namespace

void exportCsv(const std::vector<LogRecord>& log, int nv, int n_j, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("exportCsv: cannot open '" + path + "'");

  const std::vector<std::string> header = csvSchema(nv, n_j);
  std::string line;
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) line += ',';
    line += header[i];
  }
  line += '\n';
  f << line;

  for (const LogRecord& r : log) {
    line.clear();
    appendDouble(line, r.t);
    auto emit = [&](const vector_t& v) {
      for (int i = 0; i < v.size(); ++i) {
        line += ',';
        appendDouble(line, v[i]);
      }
    };
    emit(r.q);
    emit(r.v);
    emit(r.x_plan);
    emit(r.u_plan);
    emit(r.xi);
    emit(r.tau);
    emit(r.contact_forces);
    for (double x : r.hqp_residuals) {
      line += ',';
      appendDouble(line, x);
    }
    line += ',';
    appendDouble(line, static_cast<double>(r.planner_tick));
    line += ',';
    appendDouble(line, r.plan_cost);
    line += ',';
    appendDouble(line, static_cast<double>(r.plan_iterations));
    line += ',';
    appendDouble(line, r.swing_foot_err);
    for (int i = 0; i < 4; ++i) {
      line += ',';
      appendDouble(line, r.cmd[i]);
    }
    for (int i = 0; i < 4; ++i) {
      line += ',';
      appendDouble(line, r.ref_pose[i]);
    }
    line += '\n';
    f << line;
  }
  if (!f) throw std::runtime_error("exportCsv: write failed for '" + path + "'");
}

int CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable readCsv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("readCsv: cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("readCsv: empty file");
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) table.header.push_back(cell);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(table.header.size());
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) throw std::runtime_error("readCsv: bad number in '" + path + "'");
      row.push_back(v);
      p = res.ptr;
      if (p < end && *p == ',') ++p;
    }
    if (row.size() != table.header.size()) throw std::runtime_error("readCsv: ragged row in '" + path + "'");
    table.rows.push_back(std::move(row));
  }
  return table;
}

Metrics metricsFromCsv(const std::string& path) {
  const CsvTable t = readCsv(path);
  // reconstruct the minimal LogRecord fields the metrics use
  const int iq2 = t.column("q2_si");
  const int iq3 = t.column("q3_si");
  if (iq2 < 0 || iq3 < 0) throw std::runtime_error("metricsFromCsv: schema mismatch");
  // infer nv from the q block span: columns q0.. up to v0..
  int nv = 0;
  while (t.column("q" + std::to_string(nv) + "_si") >= 0) ++nv;
  const int n_j = nv - 6;

  std::vector<LogRecord> log;
  log.reserve(t.rows.size());
  const int it = t.column("t_s");
  const int iv0 = t.column("v0_si");
  const int ix0 = t.column("xplan0_si");
  const int iswing = t.column("swing_foot_err_m");
  const int icmd = t.column("cmd_vx_mps");
  const int iref = t.column("ref_x_m");
  for (const std::vector<double>& row : t.rows) {
    LogRecord r;
    r.t = row[static_cast<size_t>(it)];
    r.q = vector_t::Zero(nv);
    r.v = vector_t::Zero(nv);
    for (int i = 0; i < nv; ++i) {
      r.q[i] = row[static_cast<size_t>(1 + i)];
      r.v[i] = row[static_cast<size_t>(iv0 + i)];
    }
    r.x_plan = vector_t::Zero(12 + n_j);
    for (int i = 0; i < 12 + n_j; ++i) r.x_plan[i] = row[static_cast<size_t>(ix0 + i)];
    r.swing_foot_err = row[static_cast<size_t>(iswing)];
    for (int i = 0; i < 4; ++i) {
      r.cmd[i] = row[static_cast<size_t>(icmd + i)];
      r.ref_pose[i] = row[static_cast<size_t>(iref + i)];
    }
    log.push_back(std::move(r));
  }
  return computeMetrics(log, n_j, false);
}

}  // namespace kdwbc
