#include "trimer/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Sparse>
#include <lapacke.h>

#include "trimer/errors.hpp"

namespace trimer {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;

// Flip each column so that its largest-magnitude entry is positive. Entries
// within a relative 1e-12 of the maximum count as ties and the lowest index wins,
// which keeps mirror-(anti)symmetric vectors stable.
void fix_signs(Eigen::MatrixXd& V) {
  for (Eigen::Index c = 0; c < V.cols(); ++c) {
    const double peak = V.col(c).cwiseAbs().maxCoeff();
    for (Eigen::Index r = 0; r < V.rows(); ++r) {
      if (std::abs(V(r, c)) >= peak * (1.0 - 1e-12)) {
        if (V(r, c) < 0.0) V.col(c) *= -1.0;
        break;
      }
    }
  }
}

double block_residual(const SparseMatrix& H, const Eigen::VectorXd& E, const Eigen::MatrixXd& V) {
  double worst = 0.0;
  constexpr Eigen::Index kBlock = 256;
  for (Eigen::Index c0 = 0; c0 < V.cols(); c0 += kBlock) {
    const Eigen::Index width = std::min(kBlock, V.cols() - c0);
    Eigen::MatrixXd R = H * V.middleCols(c0, width);
    R -= V.middleCols(c0, width) * E.segment(c0, width).asDiagonal();
    worst = std::max(worst, R.colwise().norm().maxCoeff());
  }
  return worst;
}

double orthogonality_defect(const Eigen::MatrixXd& V, std::size_t full_limit) {
  const auto n = static_cast<std::size_t>(V.cols());
  if (n <= full_limit) {
    Eigen::MatrixXd G = V.transpose() * V;
    G.diagonal().array() -= 1.0;
    return G.cwiseAbs().maxCoeff();
  }
  // V orthogonal <=> V^T V x = x for all x; probe with a few fixed random vectors.
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> gauss;
  double worst = 0.0;
  for (int probe = 0; probe < 4; ++probe) {
    Eigen::VectorXd x(V.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = gauss(rng);
    x.normalize();
    const Eigen::VectorXd y = V.transpose() * (V * x);
    worst = std::max(worst, (y - x).cwiseAbs().maxCoeff());
  }
  return worst;
}

Spectrum solve(const ModelParams& params, const SparseMatrix& H_sparse, Eigen::MatrixXd&& work,
               const DiagonalizationOptions& options) {
  const auto n = static_cast<lapack_int>(work.rows());
  Eigen::VectorXd energies(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, work.data(), n, energies.data());
  if (info != 0)
    throw NumericalFailure("dsyevd failed with info=" + std::to_string(info), std::numeric_limits<double>::quiet_NaN());

  Spectrum spectrum;
  spectrum.params = params;
  spectrum.energies = std::move(energies);
  spectrum.eigenvectors = std::move(work);
  spectrum.basis_fingerprint = FockBasis(params.N).fingerprint();
  fix_signs(spectrum.eigenvectors);

  const double scale = std::max({1.0, std::abs(spectrum.energies(0)), std::abs(spectrum.energies(n - 1))});
  const double residual = block_residual(H_sparse, spectrum.energies, spectrum.eigenvectors);
  if (!(residual <= options.residual_tolerance * scale))
    throw NumericalFailure("eigenpair residual exceeds tolerance", residual);
  const double defect = orthogonality_defect(spectrum.eigenvectors, options.full_orthogonality_check_limit);
  if (!(defect <= options.residual_tolerance))
    throw NumericalFailure("eigenvectors are not orthonormal", defect);
  return spectrum;
}

}  // namespace

Eigen::Ref<const Eigen::VectorXd> Spectrum::eigenvector(std::size_t nu) const {
  if (nu >= dimension())
    throw InvalidArgument("eigenstate index " + std::to_string(nu) + " out of range for dimension " +
                          std::to_string(dimension()));
  return eigenvectors.col(static_cast<Eigen::Index>(nu));
}

Spectrum diagonalize(const HamiltonianMatrix& H, const DiagonalizationOptions& options) {
  Eigen::MatrixXd work = H.matrix;
  return diagonalize(HamiltonianMatrix{H.params, std::move(work)}, options);
}

Spectrum diagonalize(HamiltonianMatrix&& H, const DiagonalizationOptions& options) {
  if (H.matrix.rows() != H.matrix.cols() || H.matrix.rows() == 0)
    throw InvalidArgument("diagonalize: matrix must be square and nonempty");
  for (Eigen::Index c = 0; c < H.matrix.cols(); ++c)
    for (Eigen::Index r = 0; r < c; ++r)
      if (H.matrix(r, c) != H.matrix(c, r)) throw InvalidArgument("diagonalize: matrix is not symmetric");
  const SparseMatrix H_sparse = H.matrix.sparseView();
  return solve(H.params, H_sparse, std::move(H.matrix), options);
}

double max_residual(const FockBasis& basis, const Spectrum& spectrum) {
  const auto dim = static_cast<Eigen::Index>(basis.size());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(5 * basis.size());
  assemble_hamiltonian(basis, spectrum.params, [&](std::size_t i, std::size_t j, double value) {
    triplets.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j), value);
  });
  SparseMatrix H(dim, dim);
  H.setFromTriplets(triplets.begin(), triplets.end());
  return block_residual(H, spectrum.energies, spectrum.eigenvectors);
}

EnergyScale rescale_energies(const Spectrum& spectrum) {
  const auto n = spectrum.energies.size();
  if (n < 2) throw InvalidArgument("rescale_energies: need at least two eigenstates");
  const EnergyScale scale{spectrum.energies(0), spectrum.energies(n - 1)};
  if (!(scale.e_max > scale.e_min)) throw InvalidArgument("rescale_energies: spectrum is fully degenerate");
  return scale;
}

std::vector<double> rescaled_energies(const Spectrum& spectrum) {
  const EnergyScale scale = rescale_energies(spectrum);
  std::vector<double> out(spectrum.dimension());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale.rescale(spectrum.energies(static_cast<Eigen::Index>(i)));
  // Pin the endpoints; (E_max - E_min) / (E_max - E_min) may round below 1.
  out.front() = 0.0;
  out.back() = 1.0;
  return out;
}

std::size_t bin_of(double e_tilde, std::size_t nbins) {
  if (nbins == 0) throw InvalidArgument("bin_of: nbins must be >= 1");
  const double scaled = std::floor(e_tilde * static_cast<double>(nbins));
  if (scaled <= 0.0) return 0;
  return std::min(nbins - 1, static_cast<std::size_t>(scaled));
}

std::vector<std::optional<double>> bin_average(std::span<const double> rescaled, std::size_t nbins,
                                               std::span<const double> values) {
  if (nbins == 0) throw InvalidArgument("bin_average: nbins must be >= 1");
  if (rescaled.size() != values.size())
    throw InvalidArgument("bin_average: " + std::to_string(values.size()) + " values for " +
                          std::to_string(rescaled.size()) + " states");
  std::vector<double> sum(nbins, 0.0);
  std::vector<std::size_t> count(nbins, 0);
  for (std::size_t i = 0; i < rescaled.size(); ++i) {
    const std::size_t b = bin_of(rescaled[i], nbins);
    sum[b] += values[i];
    ++count[b];
  }
  std::vector<std::optional<double>> means(nbins);
  for (std::size_t b = 0; b < nbins; ++b)
    if (count[b] > 0) means[b] = sum[b] / static_cast<double>(count[b]);
  return means;
}

std::vector<std::optional<double>> bin_average(const Spectrum& spectrum, std::size_t nbins,
                                               std::span<const double> values) {
  const std::vector<double> rescaled = rescaled_energies(spectrum);
  return bin_average(rescaled, nbins, values);
}

EnergyShell energy_shell(const Spectrum& spectrum, const ShellWindow& window) {
  const std::vector<double> e_tilde = rescaled_energies(spectrum);
  EnergyShell shell;
  if (const auto* w = std::get_if<IndexWindow>(&window)) {
    if (w->count == 0) throw EmptySelection("energy_shell: index window of zero states");
    const auto nearest = std::min_element(e_tilde.begin(), e_tilde.end(), [&](double a, double b) {
      return std::abs(a - w->center) < std::abs(b - w->center);
    });
    const std::size_t count = std::min(w->count, e_tilde.size());
    const auto centre = static_cast<std::size_t>(nearest - e_tilde.begin());
    std::size_t first = centre >= count / 2 ? centre - count / 2 : 0;
    first = std::min(first, e_tilde.size() - count);
    for (std::size_t i = first; i < first + count; ++i) shell.members.push_back(i);
  } else {
    const auto& ew = std::get<EnergyWindow>(window);
    for (std::size_t i = 0; i < e_tilde.size(); ++i)
      if (e_tilde[i] >= ew.lo && e_tilde[i] <= ew.hi) shell.members.push_back(i);
    if (shell.members.empty())
      throw EmptySelection("energy_shell: no eigenstate in [" + std::to_string(ew.lo) + ", " +
                           std::to_string(ew.hi) + "]");
  }
  shell.e_tilde_lo = e_tilde[shell.members.front()];
  shell.e_tilde_hi = e_tilde[shell.members.back()];
  shell.mean_intensities = Eigen::VectorXd::Zero(spectrum.eigenvectors.rows());
  for (std::size_t nu : shell.members)
    shell.mean_intensities += spectrum.eigenvectors.col(static_cast<Eigen::Index>(nu)).cwiseAbs2();
  shell.mean_intensities /= static_cast<double>(shell.members.size());
  shell.n_eff = 1.0 / shell.mean_intensities.squaredNorm();
  return shell;
}

}  // namespace trimer
