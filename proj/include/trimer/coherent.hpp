#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trimer/fock.hpp"
#include "trimer/phase_space.hpp"
#include "trimer/spectral.hpp"

namespace trimer {

/// SU(3) coherent state |alpha> = (alpha . a^dag)^N |0> / sqrt(N!).
struct CoherentState {
  Spinor alpha{};
  int N = 1;
};

CoherentState coherent_state(const PhasePoint& point, int N);

/// <n|alpha> = sqrt(N! / (n1! n2! n3!)) alpha1^n1 alpha2^n2 alpha3^n3, evaluated in
/// log-magnitude / phase form so N! never materializes.
Complex fock_overlap(const CoherentState& state, const FockState& n);

/// <n|alpha> for every basis state, in basis order.
Eigen::VectorXcd fock_amplitudes(const CoherentState& state, const FockBasis& basis);

/// Q_nu(alpha) = |<alpha|E_nu>|^2.
double husimi(const Spectrum& spectrum, std::size_t nu, const PhasePoint& point);
double husimi(const Spectrum& spectrum, std::size_t nu, const CoherentState& state);

/// Q_nu(alpha) for all eigenstates at once.
Eigen::VectorXd husimi_all(const Spectrum& spectrum, const CoherentState& state);

/// sum_j Q_nu(alpha_j) for all eigenstates; the island projection before normalization.
Eigen::VectorXd summed_husimi(const Spectrum& spectrum, std::span<const Spinor> spinors);

/// Overlap of every eigenstate with the dark coherent state and the index of the maximum.
struct SpOverlap {
  std::size_t supported_index = 0;
  Eigen::VectorXd overlaps;
};

SpOverlap sp_overlap_all(const Spectrum& spectrum);

/// One-particle density rho_ij = <a_i^dag a_j> / N.
struct SinglePtlDensity {
  Eigen::Matrix3cd rho = Eigen::Matrix3cd::Zero();

  double trace() const { return rho.trace().real(); }
};

SinglePtlDensity one_particle_density(const Spectrum& spectrum, std::size_t nu);
SinglePtlDensity one_particle_density(const FockBasis& basis, const Eigen::Ref<const Eigen::VectorXcd>& state);

/// Tr[rho^2], within [1/3, 1].
double purity(const SinglePtlDensity& density);

/// <n2> / N.
double site2_expectation(const Spectrum& spectrum, std::size_t nu);

enum class HusimiNormalization { Raw, MaxRescaled };

std::string to_string(HusimiNormalization mode);

/// Uniform grid on the p1 = 1/2 plane.
struct HusimiGridSpec {
  std::size_t q2_points = 64;
  std::size_t p2_points = 32;
  double plane_p1 = 0.5;
  HusimiNormalization normalization = HusimiNormalization::Raw;
};

struct HusimiSample {
  double q2 = 0.0;
  double p2 = 0.0;
  double q1 = 0.0;
  double Q = 0.0;
  /// false where no q1 reaches the target energy and q1 = pi was used instead.
  bool on_shell = false;
};

struct HusimiGrid {
  std::size_t nu = 0;
  double energy = 0.0;
  HusimiNormalization normalization = HusimiNormalization::Raw;
  std::vector<HusimiSample> samples;
};

/// Section-plane angle q1 on the energy shell h(q1, q2, p1, p2) = h_target that
/// lies closest to q1 = pi; nullopt when the shell misses this (q2, p1, p2).
std::optional<double> q1_on_shell(const ModelParams& params, double q2, double p1, double p2, double h_target);

/// Husimi distribution of eigenstate nu on the section grid. q1 is pinned to the
/// energy shell h = E_nu / N, branch nearest pi; off-shell cells fall back to q1 = pi.
HusimiGrid husimi_grid(const Spectrum& spectrum, std::size_t nu, const HusimiGridSpec& spec = {});

}  // namespace trimer
