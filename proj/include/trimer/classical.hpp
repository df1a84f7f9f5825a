#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trimer/fock.hpp"
#include "trimer/integrator.hpp"
#include "trimer/phase_space.hpp"

namespace trimer {

/// Classical energy per particle h = H_cl / N.
double hcl(const PhasePoint& point, const ModelParams& params);

struct PhaseRates {
  double q1_dot = 0.0;
  double q2_dot = 0.0;
  double p1_dot = 0.0;
  double p2_dot = 0.0;
};

/// Hamilton's equations q_dot = dh/dp, p_dot = -dh/dq. On a simplex face the
/// terms carrying 1/sqrt(p_k) are kept only when their numerator vanishes
/// (as at the dark SP); the rate of an angle whose modulus is zero is reported
/// as 0. Otherwise GradientSingularity is thrown.
PhaseRates eom(const PhasePoint& point, const ModelParams& params);

/// Cartesian amplitudes (Re a1, Im a1, Re a2, Im a2, Re a3, Im a3).
using Amplitudes = Eigen::Matrix<double, 6, 1>;

Amplitudes to_amplitudes(const PhasePoint& point);
Amplitudes to_amplitudes(const Spinor& alpha);
Spinor to_spinor(const Amplitudes& y);
PhasePoint to_phasepoint(const Amplitudes& y);

/// Flow a_dot = i (H0 + u diag|a_i|^2) a, the same orbits as Hamilton's equations
/// in (q, p) but regular on the whole simplex.
Amplitudes amplitude_rhs(const Amplitudes& y, const ModelParams& params);

/// h evaluated directly on amplitudes (assumed normalized).
double amplitude_energy(const Amplitudes& y, const ModelParams& params);

/// min over global phase of |a - e^{i theta} b|.
double gauge_distance(const Amplitudes& a, const Amplitudes& b);

enum class Regularity { Unclassified, Regular, Chaotic, Uncertain };

const char* to_string(Regularity label);

enum class CrossingDirection { Upward, Downward, Both };

struct SectionSpec {
  double plane_p1 = 0.5;
  CrossingDirection direction = CrossingDirection::Upward;
};

struct LyapunovOptions {
  double separation = 1e-8;
  double renorm_interval = 1.0;
  double window = 2000.0;
  /// lambda * window at or above this is chaotic, below `regular_below` regular,
  /// in between uncertain.
  double chaotic_at = 25.0;
  double regular_below = 10.0;
};

struct TrajectoryOptions {
  IntegratorOptions tolerances{};
  /// Time averages cover [transient, T].
  double transient = 0.0;
  /// Spacing of stored samples; 0 stores none.
  double sample_interval = 0.0;
  std::optional<SectionSpec> section;
  std::optional<LyapunovOptions> lyapunov;
};

struct Crossing {
  double t = 0.0;
  PhasePoint point;
  /// +1 for p1 increasing, -1 decreasing.
  int direction = 1;
};

struct Trajectory {
  PhasePoint initial;
  double h0 = 0.0;
  double t_end = 0.0;
  std::vector<double> times;
  std::vector<PhasePoint> samples;
  std::vector<Crossing> crossings;
  double max_energy_drift = 0.0;
  double max_norm_drift = 0.0;
  double mean_p1 = 0.0;
  double mean_p2 = 0.0;
  /// Finite-time maximal Lyapunov estimate over the window, when tracked.
  std::optional<double> lyapunov;
  double lyapunov_window = 0.0;
  Regularity label = Regularity::Unclassified;
  bool failed = false;
  std::string failure;
  long steps = 0;
};

/// Integrate from `initial` to time T. Step-size collapse returns a partial
/// trajectory with `failed` set.
Trajectory integrate(const PhasePoint& initial, const ModelParams& params, double T, const TrajectoryOptions& options = {});
Trajectory integrate(const Amplitudes& initial, const ModelParams& params, double T, const TrajectoryOptions& options = {});

/// Amplitudes along a trajectory sampled every `dt` up to T (inclusive of t = 0).
std::vector<Amplitudes> sample_amplitudes(const Amplitudes& initial, const ModelParams& params, double T, double dt,
                                          const IntegratorOptions& tolerances = {});

/// Independent trajectories, run in parallel; output order follows input order.
std::vector<Trajectory> integrate_ensemble(std::span<const PhasePoint> initials, const ModelParams& params, double T,
                                           const TrajectoryOptions& options);

/// Label from the Lyapunov estimate; throws InvalidArgument if it was not tracked
/// over the full window.
Regularity classify_trajectory(const Trajectory& trajectory, const LyapunovOptions& options = {});

struct SectionPoint {
  std::size_t trajectory = 0;
  double t = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  int direction = 1;
  /// Colour value: time average of p1 over the source trajectory.
  double mean_p1 = 0.0;
};

struct SectionPointSet {
  double h_target = 0.0;
  SectionSpec spec;
  std::vector<SectionPoint> points;
  std::vector<Trajectory> trajectories;
};

/// Every initial must satisfy hcl = h_target within 1e-10 (DomainError otherwise).
SectionPointSet poincare_section(std::span<const PhasePoint> initials, const ModelParams& params, double h_target,
                                 double T, TrajectoryOptions options = {});

/// Extremes of h over the simplex and angles.
struct ClassicalRange {
  double h_min = 0.0;
  double h_max = 0.0;
  PhasePoint argmin;
  PhasePoint argmax;

  double rescale(double h) const { return (h - h_min) / (h_max - h_min); }
  double restore(double e_tilde) const { return h_min + e_tilde * (h_max - h_min); }
};

ClassicalRange classical_range(const ModelParams& params);

enum class SeedMode { Section, Interior };

struct SeedSettings {
  std::size_t count = 100;
  std::uint64_t seed = 1;
  SeedMode mode = SeedMode::Section;
  double plane_p1 = 0.5;
  std::size_t max_attempts = 200000;
};

/// Section mode: (q2, p2) uniform on the plane p1 = plane_p1, q1 solved on the
/// branch with p1 increasing. Interior mode: (p1, p2) uniform on the simplex,
/// q2 uniform, q1 on a random branch. At the classical minimum the minimizer
/// itself is returned. EmptySelection when the energy is out of range or no
/// sample lands on the shell.
std::vector<PhasePoint> seed_on_shell(const ModelParams& params, double h_target, const SeedSettings& settings = {});

/// q1 on the section plane with p1 increasing (sin(q1 - q2) < 0), if the shell reaches (q2, p2).
std::optional<double> section_q1(const ModelParams& params, double q2, double p1, double p2, double h_target);

struct SkeletonSettings {
  std::size_t seeds_per_energy = 24;
  std::uint64_t seed = 1;
  double T = 5000.0;
  double transient = 100.0;
  LyapunovOptions lyapunov{};
  IntegratorOptions tolerances{1e-10, 1e-10};
};

struct SkeletonPoint {
  double e_tilde = 0.0;
  double h = 0.0;
  double mean_n2 = 0.0;
  Regularity label = Regularity::Unclassified;
  /// Regular torus coexisting with chaos at the same energy.
  bool island = false;
  PhasePoint seed;
  double lyapunov_exponent = 0.0;
};

struct SkeletonSlice {
  double e_tilde = 0.0;
  double h = 0.0;
  std::optional<double> chaotic_mean;
  double chaotic_spread = 0.0;
  std::vector<SkeletonPoint> points;
};

struct Skeleton {
  ClassicalRange range;
  std::vector<SkeletonSlice> slices;
};

/// Energy grid in classical rescaled units.
Skeleton build_skeleton(const ModelParams& params, std::span<const double> e_tilde_grid, const SkeletonSettings& settings = {});

struct TorusSelection {
  /// Seeds of the tori to use; when empty, section seeds at the energy are classified
  /// and the regular ones kept.
  std::vector<PhasePoint> tori;
  SkeletonSettings search{};
  /// Integration time per torus and a cap on the crossings kept from each.
  double T = 1000.0;
  std::size_t crossings_per_torus = 60;
};

struct IslandSet {
  double h = 0.0;
  std::vector<PhasePoint> points;
  std::vector<Spinor> spinors;
  std::size_t tori = 0;
};

/// Coherent spinors at the section crossings of regular tori at energy h.
/// EmptySelection when no regular torus is found or none crosses the plane.
IslandSet island_coherent_set(const ModelParams& params, double h, const TorusSelection& selection = {});

/// Toroidal embedding (radius p2 + p1 cos q1 about the axis, height p1 sin q1).
std::array<double, 3> toroidal_embed(const PhasePoint& point);

/// Early-time growth rate of |delta a| for an orbit launched at SP + epsilon.
struct GrowthFit {
  double rate = 0.0;
  double t_start = 0.0;
  double t_stop = 0.0;
  std::size_t samples = 0;
  double max_distance = 0.0;
};

GrowthFit sp_perturbation_growth(const ModelParams& params, double epsilon = 1e-6, double T = 60.0,
                                 std::uint64_t seed = 7);

}  // namespace trimer
