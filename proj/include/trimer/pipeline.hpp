#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trimer/classical.hpp"
#include "trimer/coherent.hpp"
#include "trimer/measures.hpp"
#include "trimer/spectral.hpp"

namespace trimer {

enum class StateClass { HardChaotic, MixedChaotic, Island, SpSupported, Hybrid, RegularEdge };

std::string to_string(StateClass label);
StateClass state_class_from_string(const std::string& name);

/// Per-eigenstate tuple behind the tomography scatter plots.
struct EigenstateRecord {
  std::size_t index = 0;
  double E = 0.0;
  double e_tilde = 0.0;
  double n2 = 0.0;
  double M2 = 0.0;
  double M10 = 0.0;
  double ratio = 0.0;
  double Q_sp = 0.0;
  /// NaN until an island projection has been attached.
  double Q_island = std::numeric_limits<double>::quiet_NaN();
  std::optional<StateClass> label;
};

struct Tomography {
  ModelParams params;
  EnergyScale scale;
  /// Rescaled position of E_SP = N u omega / 4.
  double e_tilde_sp = 0.0;
  std::size_t sp_index = 0;
  std::vector<EigenstateRecord> records;
};

Tomography tomography(const Spectrum& spectrum);

/// Bin averages of M2/D, M10/D and M10/M2 over rescaled energy (D = Hilbert dimension).
struct MomentMaps {
  std::size_t nbins = 0;
  std::vector<std::optional<double>> m2;
  std::vector<std::optional<double>> m10;
  std::vector<std::optional<double>> ratio;
};

MomentMaps moment_maps(const Tomography& tomo, std::size_t nbins = 100);

/// Mean of a record field over e_tilde in [lo, hi]; nullopt if no record falls inside.
std::optional<double> window_mean(const Tomography& tomo, double lo, double hi, double EigenstateRecord::* field);

struct SpectrumMapColumn {
  double u = 0.0;
  /// Bin-averaged M2/D.
  std::vector<std::optional<double>> participation;
  double e_tilde_sp = 0.0;
};

struct SpectrumMap {
  ModelParams base;
  std::size_t nbins = 100;
  std::vector<SpectrumMapColumn> columns;
  /// Horizontal markers: lower instability edge 2v, chaos onset (annotation), upper edge.
  double u_lower = 0.0;
  double u_chaos_onset = 1.1;
  double u_upper = 0.0;
};

SpectrumMap spectrum_map(const ModelParams& base, std::span<const double> u_grid, std::size_t nbins,
                         const std::filesystem::path& cache_dir = {});

struct SpTrackPoint {
  int N = 0;
  double u = 0.0;
  std::size_t index = 0;
  double e_tilde = 0.0;
  double purity = 0.0;
  double Q_sp = 0.0;
  double M2_fraction = 0.0;
};

std::vector<SpTrackPoint> sp_track(double v, std::span<const double> u_grid, std::span<const int> N_list,
                                   const std::filesystem::path& cache_dir = {}, double omega = 1.0);

/// Regular-torus coherent states pooled over several classical energies of one shell.
struct IslandUnion {
  ModelParams params;
  std::vector<double> e_tilde_grid;
  std::vector<IslandSet> sets;

  std::size_t tori() const;
  std::vector<Spinor> spinors() const;
};

/// Energies without regular tori are skipped; EmptySelection if all of them are empty.
IslandUnion island_union(const ModelParams& params, std::span<const double> e_tilde_grid,
                         const TorusSelection& selection = {});

/// Summed Husimi overlap with the union, divided by its maximum over eigenstates.
Eigen::VectorXd island_projection(const Spectrum& spectrum, const IslandUnion& islands);

/// Writes Q_island into the records.
void attach_island_projection(Tomography& tomo, const Eigen::VectorXd& Q_island);

struct ClassificationThresholds {
  double island_q = 0.5;
  /// Low participation: M2 below this fraction of the local GOE value.
  double island_m2 = 1.0 / 3.0;
  double chaotic_q = 0.1;
  double chaotic_m2 = 0.8;
  /// Consecutive eigenstates defining the local N_eff.
  std::size_t goe_window = 100;
};

/// N_eff / 3 of an index window of `count` states around nu.
double local_goe_m2(const Spectrum& spectrum, std::size_t nu, std::size_t count);

/// Labels every record. A state is regular-edge if the skeleton slice nearest in
/// classical energy has no chaotic trajectory; the SP-supported state is the
/// argmax of Q_SP; within chaotic slices the island and chaotic corners are cut
/// by the thresholds (chaotic below E_SP is hard, above it mixed) and the rest
/// is hybrid. Throws InvalidArgument when a state falls outside the skeleton grid.
void classify_states(Tomography& tomo, const Spectrum& spectrum, const Skeleton& skeleton,
                     const ClassificationThresholds& thresholds = {});

struct LabelCounts {
  std::size_t hard_chaotic = 0, mixed_chaotic = 0, island = 0, sp_supported = 0, hybrid = 0, regular_edge = 0;
  std::size_t total() const { return hard_chaotic + mixed_chaotic + island + sp_supported + hybrid + regular_edge; }
};

LabelCounts count_labels(const Tomography& tomo);

/// Fractions of a shell's states in the island corner, the chaotic corner and neither.
struct HybridizationSummary {
  std::size_t states = 0;
  double goe_m2 = 0.0;
  std::size_t island_corner = 0;
  std::size_t chaotic_corner = 0;
  std::size_t neither = 0;
};

HybridizationSummary hybridization(const Tomography& tomo, const EnergyShell& shell,
                                   const ClassificationThresholds& thresholds = {});

enum class ExclusionMode { EigenstateLevel, HusimiMass };

std::string to_string(ExclusionMode mode);
ExclusionMode exclusion_mode_from_string(const std::string& name);

struct IntensitySuiteSettings {
  EnergyWindow hard{0.35, 0.45};
  EnergyWindow mixed{0.55, 0.65};
  ExclusionMode mode = ExclusionMode::EigenstateLevel;
  /// Eigenstate-level mode drops states with Q_island above this.
  double q_island_cut = 0.1;
  /// Husimi-mass mode drops states with more than this share of section weight on island cells.
  double husimi_mass_cut = 0.5;
  HusimiGridSpec grid{};
  std::vector<double> thresholds = default_tail_thresholds();
};

struct IntensityGroup {
  std::string name;
  std::vector<std::size_t> states;
  double n_eff = 0.0;
  InverseCumulative curve;
  /// Mean of the states' sorted lineshapes, truncated to the shortest one.
  std::vector<double> lineshape;
};

struct IntensitySuite {
  IntensityGroup hard;
  IntensityGroup mixed;
  IntensityGroup mixed_without_island;
  std::vector<std::size_t> excluded;
};

/// Share of on-shell section Husimi weight that sits on cells visited by island crossings.
double island_husimi_mass(const Spectrum& spectrum, std::size_t nu, const IslandUnion& islands,
                          const HusimiGridSpec& grid = {});

/// `islands` and `Q_island` may be null/empty only when no exclusion is needed;
/// EmptySelection when a group ends up empty.
IntensitySuite intensity_suite(const Spectrum& spectrum, const Eigen::VectorXd& Q_island, const IslandUnion* islands,
                               const IntensitySuiteSettings& settings = {});

enum class ScalingClass { HardChaotic, MixedChaotic, Island, SpSupported };

std::string to_string(ScalingClass cls);
ScalingClass scaling_class_from_string(const std::string& name);

struct ScalingSettings {
  EnergyWindow hard{0.35, 0.45};
  EnergyWindow mixed{0.55, 0.65};
  ClassificationThresholds thresholds{};
  double omega = 1.0;
};

struct ScalingSample {
  int N = 0;
  std::size_t states = 0;
  double M2 = 0.0;
  double ratio = 0.0;
};

struct ScalingResult {
  ScalingClass cls = ScalingClass::HardChaotic;
  double u = 0.0;
  double v = 0.0;
  std::vector<ScalingSample> samples;
  std::optional<ScalingFit> fit;
  std::vector<std::string> warnings;
};

/// Mean M2 and M10/M2 of the class at each N, and the ln M2 vs ln N fit.
/// Chaotic classes pool their energy window, the island class the states in the
/// island corner, the SP class the single SP-supported state. N values where
/// the class is absent are skipped with a warning. The island class needs `islands`.
ScalingResult scaling_study(double v, double u, std::span<const int> N_list, ScalingClass cls,
                            const ScalingSettings& settings = {}, const IslandUnion* islands = nullptr,
                            const std::filesystem::path& cache_dir = {});

}  // namespace trimer
