#include "wavelab/report_io.hpp"

#include <cstdio>
#include <fstream>

#include "wavelab/errors.hpp"

namespace wavelab {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string schema_line(std::string_view name) {
  return "#schema=wavelab." + std::string(name) + "/" + std::to_string(csv_schema_version) + "\n";
}

void row(std::string& out, std::initializer_list<std::string> cells) {
  bool first = true;
  for (const std::string& c : cells) {
    if (!first) {
      out += ',';
    }
    out += c;
    first = false;
  }
  out += '\n';
}

}  // namespace

std::string equivalence_csv(const EquivalenceReport& report) {
  std::string out = schema_line("compare");
  out += "step,t,disc_q,disc_v,disc_sigma,H_A,H_B\n";
  for (const StepDiscrepancy& d : report.per_step) {
    row(out, {std::to_string(d.step), format_double(d.t), format_double(d.q), format_double(d.v),
              format_double(d.sigma), format_double(d.energy_a), format_double(d.energy_b)});
  }
  return out;
}

std::string trajectory_csv(const Trajectory& run, double dt) {
  std::string out = schema_line("run");
  out += "step,t,energy,instantaneous_energy\n";
  for (std::size_t n = 0; n < run.energy.size(); ++n) {
    row(out, {std::to_string(n), format_double(static_cast<double>(n) * dt), format_double(run.energy[n]),
              format_double(run.instantaneous_energy[n])});
  }
  return out;
}

std::string energy_csv(const EnergyTrace& trace, double dt) {
  std::string out = schema_line("energy");
  out += "step,t,energy,instantaneous_energy\n";
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    row(out, {std::to_string(trace.steps[i]), format_double(static_cast<double>(trace.steps[i]) * dt),
              format_double(trace.energy[i]), format_double(trace.instantaneous[i])});
  }
  return out;
}

std::string state_csv(const SchemeState& state) {
  std::string out = schema_line("state");
  out += "field,stamp2,index,value\n";
  for (const FieldSlot& slot : state.slots()) {
    const std::string name(to_string(slot.field));
    const std::string stamp = std::to_string(slot.stamp2);
    for (std::size_t i = 0; i < slot.values.size(); ++i) {
      row(out, {name, stamp, std::to_string(i), format_double(slot.values[i])});
    }
  }
  return out;
}

std::string cfl_csv(const StabilityMap& map) {
  std::string out = schema_line("cfl");
  out += "dt,ratio_to_predicted,stable\n";
  for (std::size_t i = 0; i < map.dt.size(); ++i) {
    const double ratio = map.predicted > 0.0 ? map.dt[i] / map.predicted : 0.0;
    row(out, {format_double(map.dt[i]), format_double(ratio), map.stable[i] ? "1" : "0"});
  }
  return out;
}

std::string convergence_csv(const ConvergenceTable& table) {
  std::string out = schema_line("converge");
  out += "cells,h,dt,steps,error_" + table.field + ",order\n";
  for (const ConvergenceRow& r : table.rows) {
    row(out, {std::to_string(r.cells), format_double(r.h), format_double(r.dt), std::to_string(r.steps),
              format_double(r.error), format_double(r.order)});
  }
  return out;
}

std::string key_value_csv(std::string_view schema, const std::vector<std::pair<std::string, double>>& rows) {
  std::string out = schema_line(schema);
  out += "name,value\n";
  for (const auto& [name, value] : rows) {
    row(out, {name, format_double(value)});
  }
  return out;
}

std::string matrix_market(const SparseMatrix& m) {
  std::string out = "%%MatrixMarket matrix coordinate real general\n";
  out += std::to_string(m.rows()) + " " + std::to_string(m.cols()) + " " + std::to_string(m.nnz()) + "\n";
  const auto offsets = m.row_offsets();
  const auto cols = m.col_indices();
  const auto vals = m.values();
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index k = offsets[static_cast<std::size_t>(i)]; k < offsets[static_cast<std::size_t>(i) + 1]; ++k) {
      out += std::to_string(i + 1) + " " + std::to_string(cols[static_cast<std::size_t>(k)] + 1) + " " +
             format_double(vals[static_cast<std::size_t>(k)]) + "\n";
    }
  }
  return out;
}

OutputSet::OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

OutputSet::~OutputSet() {
  if (!committed_) {
    discard();
  }
}

std::filesystem::path OutputSet::write(const std::string& name, std::string_view content) {
  std::error_code ec;
  if (!std::filesystem::exists(dir_, ec)) {
    if (!std::filesystem::create_directories(dir_, ec) || ec) {
      throw IoError("cannot create output directory", dir_.string());
    }
    created_dir_ = true;
  }
  const std::filesystem::path target = dir_ / name;
  std::filesystem::path tmp = target;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot open output file", tmp.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) {
      std::filesystem::remove(tmp, ec);
      throw IoError("cannot write output file", tmp.string());
    }
  }
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output file into place", target.string());
  }
  files_.push_back(target);
  return target;
}

void OutputSet::discard() noexcept {
  std::error_code ec;
  for (const auto& f : files_) {
    std::filesystem::remove(f, ec);
  }
  files_.clear();
  if (created_dir_ && std::filesystem::is_empty(dir_, ec)) {
    std::filesystem::remove(dir_, ec);
  }
}

}  // namespace wavelab
