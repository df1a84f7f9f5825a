#include "trimer/fock.hpp"

#include <cmath>
#include <string>

#include "trimer/errors.hpp"

namespace trimer {

void ModelParams::validate() const {
  if (N < 1) throw InvalidArgument("particle number N must be >= 1, got " + std::to_string(N));
  if (!(omega > 0.0) || !std::isfinite(omega)) throw InvalidArgument("hopping omega must be positive and finite");
  if (!std::isfinite(u) || !std::isfinite(v)) throw InvalidArgument("u and v must be finite");
}

std::size_t dimension(int N) {
  if (N < 1) throw InvalidArgument("dimension: N must be >= 1, got " + std::to_string(N));
  const auto n = static_cast<std::size_t>(N);
  return (n + 1) * (n + 2) / 2;
}

FockBasis::FockBasis(int N) : N_(N) {
  states_.reserve(dimension(N));
  for (int n1 = 0; n1 <= N; ++n1)
    for (int n2 = 0; n1 + n2 <= N; ++n2) states_.push_back({n1, n2, N - n1 - n2});
}

std::size_t FockBasis::index(const FockState& s) const {
  if (s.n1 < 0 || s.n2 < 0 || s.n3 < 0 || s.total() != N_)
    throw InvalidArgument("Fock state does not belong to the N=" + std::to_string(N_) + " basis");
  const auto n1 = static_cast<std::size_t>(s.n1);
  const auto N = static_cast<std::size_t>(N_);
  return n1 * (N + 1) - n1 * (n1 - (n1 > 0 ? 1 : 0)) / 2 + static_cast<std::size_t>(s.n2);
}

std::size_t FockBasis::mirror_index(std::size_t i) const { return index(state(i).mirrored()); }

std::uint64_t FockBasis::fingerprint() const {
  // FNV-1a over (N, ordering version)
  std::uint64_t h = 1469598103934665603ULL;
  for (std::uint64_t word : {static_cast<std::uint64_t>(N_), kOrderingVersion})
    for (int b = 0; b < 8; ++b) {
      h ^= (word >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  return h;
}

FockBasis build_basis(int N) {
  dimension(N);  // validates N
  return FockBasis(N);
}

HamiltonianMatrix build_hamiltonian(const FockBasis& basis, const ModelParams& params) {
  params.validate();
  if (basis.particles() != params.N)
    throw InvalidArgument("basis has N=" + std::to_string(basis.particles()) + " but params have N=" +
                          std::to_string(params.N));
  const auto dim = static_cast<Eigen::Index>(basis.size());
  HamiltonianMatrix H{params, Eigen::MatrixXd::Zero(dim, dim)};
  assemble_hamiltonian(basis, params, [&](std::size_t i, std::size_t j, double value) {
    H.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
  });
  return H;
}

}  // namespace trimer
