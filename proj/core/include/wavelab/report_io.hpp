#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wavelab/integrators.hpp"
#include "wavelab/sparse.hpp"
#include "wavelab/verification.hpp"

namespace wavelab {

// Every CSV starts with "#schema=<name>/<version>" followed by the header row.
// Numbers are printed with %.17g so that repeated runs compare byte for byte.

inline constexpr int csv_schema_version = 1;

std::string format_double(double x);

std::string equivalence_csv(const EquivalenceReport& report);
/// step, t, energy, instantaneous_energy
std::string trajectory_csv(const Trajectory& run, double dt);
std::string energy_csv(const EnergyTrace& trace, double dt);
/// field, stamp2, index, value for every slot of the state.
std::string state_csv(const SchemeState& state);
std::string cfl_csv(const StabilityMap& map);
std::string convergence_csv(const ConvergenceTable& table);
/// name, value rows.
std::string key_value_csv(std::string_view schema, const std::vector<std::pair<std::string, double>>& rows);

/// Coordinate Matrix Market text of a sparse matrix.
std::string matrix_market(const SparseMatrix& m);

/// Files of one command. Each file is written to a temporary name and
/// renamed into place; everything written is removed again unless commit()
/// is called before destruction.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir);
  ~OutputSet();
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;

  /// Throws IoError naming the path.
  std::filesystem::path write(const std::string& name, std::string_view content);
  void commit() noexcept { committed_ = true; }
  void discard() noexcept;
  const std::vector<std::filesystem::path>& files() const noexcept { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> files_;
  bool created_dir_ = false;
  bool committed_ = false;
};

}  // namespace wavelab
