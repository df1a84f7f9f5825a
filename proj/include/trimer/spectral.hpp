#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "trimer/fock.hpp"

namespace trimer {

/// All eigenpairs of one Hamiltonian, energies ascending, eigenvector nu in column nu.
///
/// Each eigenvector's largest-magnitude component is positive. Inside exactly
/// degenerate subspaces the basis is whatever the eigensolver returned.
struct Spectrum {
  ModelParams params;
  Eigen::VectorXd energies;
  Eigen::MatrixXd eigenvectors;
  std::uint64_t basis_fingerprint = 0;

  std::size_t dimension() const { return static_cast<std::size_t>(energies.size()); }
  Eigen::Ref<const Eigen::VectorXd> eigenvector(std::size_t nu) const;
};

struct DiagonalizationOptions {
  /// Residual bound relative to ||H||_max; violations raise NumericalFailure.
  double residual_tolerance = 1e-8;
  /// Full V^T V - I check up to this dimension, random probe vectors above it.
  std::size_t full_orthogonality_check_limit = 4000;
};

Spectrum diagonalize(const HamiltonianMatrix& H, const DiagonalizationOptions& options = {});
/// Reuses the matrix storage as eigensolver workspace; needed at N = 150.
Spectrum diagonalize(HamiltonianMatrix&& H, const DiagonalizationOptions& options = {});

/// Largest |H v - E v|_2 over all eigenpairs, evaluated with the sparse structure of H.
double max_residual(const FockBasis& basis, const Spectrum& spectrum);

/// Affine map E -> (E - E_min) / (E_max - E_min).
struct EnergyScale {
  double e_min = 0.0;
  double e_max = 1.0;

  double rescale(double E) const { return (E - e_min) / (e_max - e_min); }
  double restore(double e_tilde) const { return e_min + e_tilde * (e_max - e_min); }
};

EnergyScale rescale_energies(const Spectrum& spectrum);

/// Rescaled energy of every eigenstate.
std::vector<double> rescaled_energies(const Spectrum& spectrum);

/// Mean of `values` over equal-width bins in rescaled energy; bin b covers
/// [b/nbins, (b+1)/nbins) and the last bin is closed. Empty bins are nullopt.
std::vector<std::optional<double>> bin_average(std::span<const double> rescaled, std::size_t nbins,
                                               std::span<const double> values);
std::vector<std::optional<double>> bin_average(const Spectrum& spectrum, std::size_t nbins,
                                               std::span<const double> values);

/// Bin containing a rescaled energy under the bin_average convention.
std::size_t bin_of(double e_tilde, std::size_t nbins);

/// `count` consecutive eigenstates centred on the state nearest `center` (rescaled energy).
struct IndexWindow {
  double center = 0.5;
  std::size_t count = 100;
};

/// Closed interval of rescaled energy.
struct EnergyWindow {
  double lo = 0.0;
  double hi = 1.0;
};

using ShellWindow = std::variant<IndexWindow, EnergyWindow>;

/// Eigenstates in a narrow window together with their mean Fock intensities.
struct EnergyShell {
  double e_tilde_lo = 0.0;
  double e_tilde_hi = 0.0;
  std::vector<std::size_t> members;
  Eigen::VectorXd mean_intensities;
  /// [sum_n mean_intensity_n^2]^-1
  double n_eff = 0.0;
};

EnergyShell energy_shell(const Spectrum& spectrum, const ShellWindow& window);

}  // namespace trimer
