#pragma once

#include <array>
#include <complex>
#include <utility>

#include <Eigen/Dense>

#include "trimer/fock.hpp"
#include "trimer/phase_space.hpp"

namespace trimer {

/// Normalized mean-field spinor with its chemical potential.
struct MeanFieldState {
  Spinor a{};
  double mu = 0.0;
};

enum class Verdict { Stable, Unstable };

const char* to_string(Verdict verdict);

/// Frequencies are stored as (|Re|, |Im|) representatives of each +-omega pair.
struct StabilityReport {
  double u = 0.0;
  double v = 0.0;
  std::complex<double> omega0{};
  std::complex<double> omega_plus{};
  std::complex<double> omega_minus{};
  Verdict verdict = Verdict::Stable;

  double max_imag() const;
};

/// Imaginary parts above this count as unstable.
inline constexpr double kInstabilityTolerance = 1e-10;

/// One-particle hopping matrix H0 for bias v (in units of Omega).
Eigen::Matrix3d single_particle_hamiltonian(double v, double omega = 1.0);

/// Dark-state SP and mu = u/2; throws NumericalFailure if (H0 + uP)a != mu a.
MeanFieldState sp_state(const ModelParams& params);

/// 6x6 matrix [[A, -B], [B, -A]] with A = H0 + 2uP - mu, B = uP, P = diag(|a_i|^2).
/// Throws DomainError unless the state is stationary.
Eigen::Matrix<double, 6, 6> bogoliubov_matrix(const MeanFieldState& state, const ModelParams& params);

/// Closed-form omega+ and omega- at the dark SP, principal complex branch, Omega = 1.
std::pair<std::complex<double>, std::complex<double>> closed_form_frequencies(double u, double v);

/// Closed form valid only at v = 0.
std::pair<std::complex<double>, std::complex<double>> closed_form_frequencies_v0(double u);

/// Closed-form report; omega0 is exactly zero.
StabilityReport frequencies(double u, double v);

/// Report from numerical eigenvalues of the Bogoliubov matrix. The particle-number
/// pair sits in a Jordan block, so it is split off analytically and omega0 is
/// taken from that 2x2 block; the other two pairs come from the 4x4 remainder.
StabilityReport numerical_frequencies(double u, double v);

/// Raw eigenvalues of the 6x6 matrix, unsorted.
Eigen::Matrix<std::complex<double>, 6, 1> bogoliubov_eigenvalues(double u, double v);

/// Lower and upper edges of the instability window for bias v within [u_min, u_max],
/// located by bisection to `tolerance`. Throws DomainError if either edge is missing.
std::pair<double, double> find_thresholds(double v, double u_min = 0.0, double u_max = 6.0, double tolerance = 1e-9);

}  // namespace trimer
