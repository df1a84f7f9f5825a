#include "trimer/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "trimer/errors.hpp"

namespace trimer {

using cd = std::complex<double>;

const char* to_string(Verdict verdict) { return verdict == Verdict::Stable ? "stable" : "unstable"; }

double StabilityReport::max_imag() const {
  return std::max({std::abs(omega0.imag()), std::abs(omega_plus.imag()), std::abs(omega_minus.imag())});
}

Eigen::Matrix3d single_particle_hamiltonian(double v, double omega) {
  Eigen::Matrix3d h0;
  h0 << 0.0, -omega / 2, 0.0, -omega / 2, v * omega, -omega / 2, 0.0, -omega / 2, 0.0;
  return h0;
}

namespace {

Eigen::Vector3d real_part(const Spinor& a) { return {a[0].real(), a[1].real(), a[2].real()}; }

Eigen::Matrix3d density_matrix(const Spinor& a) {
  return Eigen::Vector3d(std::norm(a[0]), std::norm(a[1]), std::norm(a[2])).asDiagonal();
}

void require_stationary(const MeanFieldState& state, const ModelParams& params, double tol) {
  Eigen::Vector3cd a(state.a[0], state.a[1], state.a[2]);
  const Eigen::Matrix3d g = single_particle_hamiltonian(params.v, params.omega) + params.u * params.omega * density_matrix(state.a);
  const double residual = (g.cast<cd>() * a - state.mu * a).norm();
  if (residual > tol) throw DomainError("mean-field state is not stationary (residual " + std::to_string(residual) + ")");
}

cd representative(cd z) { return {std::abs(z.real()), std::abs(z.imag())}; }

Verdict verdict_of(const StabilityReport& r) {
  return r.max_imag() > kInstabilityTolerance ? Verdict::Unstable : Verdict::Stable;
}

}  // namespace

MeanFieldState sp_state(const ModelParams& params) {
  params.validate();
  MeanFieldState state{dark_spinor(), params.u * params.omega / 2.0};
  Eigen::Vector3d a = real_part(state.a);
  const Eigen::Matrix3d g =
      single_particle_hamiltonian(params.v, params.omega) + params.u * params.omega * density_matrix(state.a);
  const double residual = (g * a - state.mu * a).norm();
  if (residual > 1e-12) throw NumericalFailure("dark state fails the stationarity condition", residual);
  return state;
}

Eigen::Matrix<double, 6, 6> bogoliubov_matrix(const MeanFieldState& state, const ModelParams& params) {
  require_stationary(state, params, 1e-10);
  const double u = params.u * params.omega;
  const Eigen::Matrix3d P = density_matrix(state.a);
  const Eigen::Matrix3d A =
      single_particle_hamiltonian(params.v, params.omega) + 2.0 * u * P - state.mu * Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d B = u * P;
  Eigen::Matrix<double, 6, 6> L;
  L << A, -B, B, -A;
  return L;
}

std::pair<cd, cd> closed_form_frequencies(double u, double v) {
  const cd d = u - 2.0 * v;
  const cd inner_plus = std::sqrt(std::pow(d * d + 4.0, 2) - 16.0 * (u * u - 2.0 * u * v + 1.0));
  const cd plus = std::sqrt(inner_plus + u * u - 4.0 * u * v + 4.0 * v * v + 4.0) / (2.0 * std::numbers::sqrt2);
  const cd inner_minus = std::sqrt(d * (u * u * u - 6.0 * u * u * v + 4.0 * u * (3.0 * v * v - 2.0) - 8.0 * v * (v * v + 2.0)));
  const cd minus = std::sqrt(-inner_minus + d * d + 4.0) / (2.0 * std::numbers::sqrt2);
  return {plus, minus};
}

std::pair<cd, cd> closed_form_frequencies_v0(double u) {
  const cd root = u * std::sqrt(cd(u * u - 8.0));
  const cd plus = std::sqrt(4.0 + u * u + root) / (2.0 * std::numbers::sqrt2);
  const cd minus = std::sqrt(4.0 + u * u - root) / (2.0 * std::numbers::sqrt2);
  return {plus, minus};
}

StabilityReport frequencies(double u, double v) {
  if (!std::isfinite(u) || !std::isfinite(v)) throw InvalidArgument("frequencies: u and v must be finite");
  StabilityReport r;
  r.u = u;
  r.v = v;
  const auto [plus, minus] = closed_form_frequencies(u, v);
  r.omega0 = 0.0;
  r.omega_plus = representative(plus);
  r.omega_minus = representative(minus);
  r.verdict = verdict_of(r);
  return r;
}

Eigen::Matrix<cd, 6, 1> bogoliubov_eigenvalues(double u, double v) {
  const ModelParams params{1, u, v, 1.0};
  const auto L = bogoliubov_matrix(sp_state(params), params);
  Eigen::EigenSolver<Eigen::Matrix<double, 6, 6>> es(L, false);
  return es.eigenvalues();
}

StabilityReport numerical_frequencies(double u, double v) {
  const ModelParams params{1, u, v, 1.0};
  const MeanFieldState state = sp_state(params);
  const auto L = bogoliubov_matrix(state, params);
  // (a; a) and (a; -a) span the gauge/number pair; {e2, (e1+e3)/sqrt2} complement a
  // in R^3 and the doubled complement is invariant under L for a real SP.
  const Eigen::Vector3d a = real_part(state.a);
  Eigen::Matrix<double, 3, 2> Q;
  Q << 0.0, 1.0 / std::numbers::sqrt2, 1.0, 0.0, 0.0, 1.0 / std::numbers::sqrt2;
  const Eigen::Matrix3d A = L.topLeftCorner<3, 3>();
  const Eigen::Matrix3d B = L.bottomLeftCorner<3, 3>();
  Eigen::Matrix4d reduced;
  reduced << Q.transpose() * A * Q, -Q.transpose() * B * Q, Q.transpose() * B * Q, -Q.transpose() * A * Q;
  Eigen::Matrix<double, 6, 2> gauge;
  gauge << a, a, a, -a;
  // L(a;a) = 0 and L(a;-a) = u (a;a): the block is upper triangular, so its
  // eigenvalues are the diagonal entries
  const Eigen::Matrix2d g = gauge.transpose() * L * gauge / 2.0;
  if (std::abs(g(1, 0)) > 1e-12) throw NumericalFailure("gauge block of the Bogoliubov matrix is not triangular", std::abs(g(1, 0)));
  Eigen::EigenSolver<Eigen::Matrix4d> rs(reduced, false);

  std::vector<cd> ev(rs.eigenvalues().data(), rs.eigenvalues().data() + 4);
  for (auto& z : ev) z = representative(z);
  std::sort(ev.begin(), ev.end(), [](cd x, cd y) { return std::abs(x) != std::abs(y) ? std::abs(x) > std::abs(y) : x.real() > y.real(); });
  // four eigenvalues collapse to two +- pairs (or one complex quartet); keep one per pair
  std::vector<cd> reps;
  for (const cd& z : ev) {
    bool seen = false;
    for (const cd& r : reps) seen = seen || std::abs(r - z) < 1e-7 * std::max(1.0, std::abs(z));
    if (!seen) reps.push_back(z);
  }
  while (reps.size() < 2) reps.push_back(reps.empty() ? cd{} : reps.back());

  StabilityReport r;
  r.u = u;
  r.v = v;
  r.omega0 = std::max(std::abs(g(0, 0)), std::abs(g(1, 1)));
  // match the closed-form labeling: omega+ is the pair with the larger real part
  const auto [cp, cm] = closed_form_frequencies(u, v);
  const cd rp = representative(cp);
  const cd rm = representative(cm);
  if (std::abs(reps[0] - rp) + std::abs(reps[1] - rm) <= std::abs(reps[0] - rm) + std::abs(reps[1] - rp)) {
    r.omega_plus = reps[0];
    r.omega_minus = reps[1];
  } else {
    r.omega_plus = reps[1];
    r.omega_minus = reps[0];
  }
  r.verdict = verdict_of(r);
  return r;
}

std::pair<double, double> find_thresholds(double v, double u_min, double u_max, double tolerance) {
  if (!(u_max > u_min)) throw InvalidArgument("find_thresholds: empty u range");
  auto unstable = [v](double u) { return frequencies(u, v).verdict == Verdict::Unstable; };
  auto bisect = [&](double lo, double hi) {
    const bool lo_state = unstable(lo);
    while (hi - lo > tolerance) {
      const double mid = 0.5 * (lo + hi);
      (unstable(mid) == lo_state ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  constexpr int kScan = 4000;
  const double du = (u_max - u_min) / kScan;
  std::optional<double> lower, upper;
  bool prev = unstable(u_min);
  if (prev) throw DomainError("find_thresholds: range starts inside the instability window");
  for (int i = 1; i <= kScan; ++i) {
    const double u = u_min + i * du;
    const bool now = unstable(u);
    if (now && !prev && !lower) lower = bisect(u - du, u);
    if (!now && prev) upper = bisect(u - du, u);
    prev = now;
  }
  if (!lower || !upper) throw DomainError("find_thresholds: no stability change bracketed in the u range");
  return {*lower, *upper};
}

}  // namespace trimer
