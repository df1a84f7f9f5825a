#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "trimer/classical.hpp"
#include "trimer/coherent.hpp"
#include "trimer/pipeline.hpp"
#include "trimer/stability.hpp"

namespace trimer {

inline constexpr const char* kVersion = "0.1.0";

/// Shortest round-trip decimal form; NaN and missing values print as empty cells.
std::string format_number(double x);
std::string format_number(const std::optional<double>& x);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
  void write(const std::filesystem::path& path) const;
};

CsvTable spectrum_map_table(const SpectrumMap& map);
CsvTable records_table(const Tomography& tomo);
CsvTable moment_map_table(const MomentMaps& maps);
CsvTable sp_track_table(std::span<const SpTrackPoint> points);
CsvTable section_table(const SectionPointSet& section);
CsvTable husimi_table(const HusimiGrid& grid);
CsvTable skeleton_table(const Skeleton& skeleton);
CsvTable hybridization_table(const Tomography& tomo, const EnergyShell& shell);
CsvTable tail_table(const IntensitySuite& suite);
CsvTable lineshape_table(const IntensitySuite& suite);
CsvTable scaling_table(std::span<const ScalingResult> results);
CsvTable stability_table(std::span<const StabilityReport> reports);

nlohmann::json to_json(const ModelParams& params);

/// Settings and library versions of one run. The hash covers everything except
/// outputs, warnings and results, so equal settings map to the same output directory.
struct Manifest {
  std::string command;
  ModelParams params;
  nlohmann::json settings = nlohmann::json::object();
  std::vector<std::string> outputs;
  std::vector<std::string> warnings;
  /// Summary numbers of the run; written out but not hashed.
  nlohmann::json results = nlohmann::json::object();

  nlohmann::json to_json() const;
  std::string hash() const;
  std::filesystem::path directory(const std::filesystem::path& out_root) const;
  void write(const std::filesystem::path& dir) const;
};

}  // namespace trimer
