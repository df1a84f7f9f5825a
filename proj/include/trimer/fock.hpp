#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace trimer {

/// Model parameters of the three-site Bose-Hubbard chain.
///
/// The dimensionless interaction u = N U / Omega and bias v = V / Omega are the
/// user-facing knobs; U and V are derived on demand.
struct ModelParams {
  int N = 1;
  double u = 0.0;
  double v = 0.0;
  double omega = 1.0;

  double U() const { return u * omega / N; }
  double V() const { return v * omega; }

  /// Throws InvalidArgument unless N >= 1, omega > 0 and u, v are finite.
  void validate() const;

  bool operator==(const ModelParams&) const = default;
};

/// Occupation triple with n1 + n2 + n3 = N.
struct FockState {
  int n1 = 0;
  int n2 = 0;
  int n3 = 0;

  int total() const { return n1 + n2 + n3; }
  FockState mirrored() const { return {n3, n2, n1}; }
  bool operator==(const FockState&) const = default;
};

/// Hilbert-space dimension (N+1)(N+2)/2 of N bosons on three sites.
std::size_t dimension(int N);

/// Fock basis ordered lexicographically in (n1, n2).
///
/// Index arithmetic is closed form: states with a given n1 occupy a contiguous
/// block of length N - n1 + 1, so index(n) = n1 (N + 1) - n1 (n1 - 1) / 2 + n2.
class FockBasis {
 public:
  /// Version tag of the ordering; part of every on-disk eigenvector layout.
  static constexpr std::uint64_t kOrderingVersion = 1;

  explicit FockBasis(int N);

  int particles() const { return N_; }
  std::size_t size() const { return states_.size(); }
  const FockState& state(std::size_t index) const { return states_.at(index); }
  const std::vector<FockState>& states() const { return states_; }

  /// Position of a state; throws InvalidArgument if the occupations do not sum to N.
  std::size_t index(const FockState& s) const;

  /// Position of the site-1 <-> site-3 image of the state at `index`.
  std::size_t mirror_index(std::size_t index) const;

  /// Stable 64-bit identity of (N, ordering version).
  std::uint64_t fingerprint() const;

 private:
  int N_;
  std::vector<FockState> states_;
};

FockBasis build_basis(int N);

/// Dense real-symmetric many-body Hamiltonian in the Fock basis.
struct HamiltonianMatrix {
  ModelParams params;
  Eigen::MatrixXd matrix;

  std::size_t dimension() const { return static_cast<std::size_t>(matrix.rows()); }
};

/// Emits every nonzero entry of H: once per diagonal element and once per
/// ordered off-diagonal pair, so a sink that stores (row, col, value) receives
/// a symmetric matrix.
template <typename Sink>
void assemble_hamiltonian(const FockBasis& basis, const ModelParams& params, Sink&& set_entry) {
  const double U = params.U();
  const double V = params.V();
  const double hop = -0.5 * params.omega;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const FockState& s = basis.state(i);
    const double n1 = s.n1, n2 = s.n2, n3 = s.n3;
    set_entry(i, i, V * n2 + 0.5 * U * (n1 * n1 + n2 * n2 + n3 * n3));
    // a2^dag a1 : (n1, n2, n3) -> (n1 - 1, n2 + 1, n3)
    if (s.n1 > 0) {
      const std::size_t j = basis.index({s.n1 - 1, s.n2 + 1, s.n3});
      const double value = hop * std::sqrt(n1 * (n2 + 1.0));
      set_entry(i, j, value);
      set_entry(j, i, value);
    }
    // a3^dag a2 : (n1, n2, n3) -> (n1, n2 - 1, n3 + 1)
    if (s.n2 > 0) {
      const std::size_t j = basis.index({s.n1, s.n2 - 1, s.n3 + 1});
      const double value = hop * std::sqrt(n2 * (n3 + 1.0));
      set_entry(i, j, value);
      set_entry(j, i, value);
    }
  }
}

HamiltonianMatrix build_hamiltonian(const FockBasis& basis, const ModelParams& params);

}  // namespace trimer
