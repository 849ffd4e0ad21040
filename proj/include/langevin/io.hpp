#pragma once

// CSV and JSON serialization. Reals are written in shortest round-trip form.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "langevin/counterexample.hpp"
#include "langevin/error.hpp"
#include "langevin/impact.hpp"
#include "langevin/skorohod.hpp"
#include "langevin/stat_tests.hpp"

namespace langevin {

inline std::string format_real(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  if (res.ec != std::errc{}) throw Error("format_real: conversion failed");
  return std::string(buf, res.ptr);
}

inline double parse_real(std::string_view s) {
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw Error("parse_real: invalid number \"" + std::string(s) + "\"");
  }
  return x;
}

// Column table; shorter columns are padded with empty cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  void add(std::string name, std::vector<double> values) {
    header.push_back(std::move(name));
    columns.push_back(std::move(values));
  }

  std::string str() const {
    std::string out;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c) out += ',';
      out += header[c];
    }
    out += '\n';
    std::size_t rows = 0;
    for (const auto& col : columns) rows = std::max(rows, col.size());
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < columns.size(); ++c) {
        if (c) out += ',';
        if (r < columns[c].size()) out += format_real(columns[c][r]);
      }
      out += '\n';
    }
    return out;
  }
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

inline std::vector<double> grid_times(const TimeGrid& g, std::size_t count) {
  std::vector<double> t(count);
  for (std::size_t i = 0; i < count; ++i) t[i] = g.time(i);
  return t;
}

// Original grid (t, W, Y, I), clock grid (s, X, V, A, B), dual grid (s_prime, Bp).
inline CsvTable bundle_csv(const PathBundle& b) {
  CsvTable t;
  t.add("t", grid_times(b.W.grid, b.W.size()));
  t.add("W", b.W.values);
  t.add("Y", b.Y.values);
  t.add("I", b.I.values);
  t.add("s", grid_times(b.clock_grid, b.X.size()));
  t.add("X", b.X.values);
  t.add("V", b.V.values);
  t.add("A", b.A.values);
  t.add("B", b.B.values);
  t.add("s_prime", grid_times(b.Bp.grid, b.Bp.size()));
  t.add("Bp", b.Bp.values);
  return t;
}

inline CsvTable trace_csv(const SolutionTrace& tr) {
  CsvTable t;
  t.add("t", grid_times(tr.X.grid, tr.X.size()));
  t.add("X", tr.X.values);
  t.add("V", tr.V.values);
  t.add("A", tr.A.values);
  t.add("B", tr.B.values);
  return t;
}

inline CsvTable events_csv(const std::vector<ImpactEvent>& events) {
  CsvTable t;
  std::vector<double> time, v_in, jump;
  for (const auto& e : events) {
    time.push_back(e.time);
    v_in.push_back(e.v_in);
    jump.push_back(e.jump);
  }
  t.add("time", std::move(time));
  t.add("v_in", std::move(v_in));
  t.add("jump", std::move(jump));
  return t;
}

inline nlohmann::ordered_json to_json(const TestReport& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["statistic"] = r.statistic;
  j["p_value"] = r.p_value ? nlohmann::ordered_json(*r.p_value) : nlohmann::ordered_json(nullptr);
  j["threshold"] = r.threshold;
  j["pass"] = r.pass;
  j["n"] = r.n;
  if (!r.components.empty()) {
    j["components"] = nlohmann::ordered_json::array();
    for (const auto& c : r.components) j["components"].push_back(to_json(c));
  }
  return j;
}

inline nlohmann::ordered_json to_json(const InclusionReport& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["residual_a"] = r.residual_a;
  j["residual_b"] = r.residual_b;
  j["residual_c"] = r.residual_c;
  j["residual_c_second_difference"] = r.residual_c_fd;
  j["residual_d"] = r.residual_d;
  j["grid_points"] = r.grid_points;
  j["pass"] = r.pass;
  j["failures"] = r.failures;
  return j;
}

inline nlohmann::ordered_json to_json(const PhiAudit& a) {
  nlohmann::ordered_json j;
  j["audit_points"] = a.points;
  j["min_gap"] = a.min_gap;
  j["min_gap_at"] = a.min_gap_at;
  j["contact_residual"] = a.contact_residual;
  j["slope_residual"] = a.slope_residual;
  j["gluing_residual"] = a.gluing_residual;
  j["max_abs_phi2"] = a.max_abs_phi2;
  j["force_min"] = a.min_force;
  j["force_max"] = a.max_force;
  j["smoothness"] = a.smoothness;
  return j;
}

inline std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace langevin
