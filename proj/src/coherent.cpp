#include "trimer/coherent.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "trimer/classical.hpp"
#include "trimer/errors.hpp"

namespace trimer {

void check_simplex(const PhasePoint& point, double slack) {
  if (!(point.p1 >= -slack) || !(point.p2 >= -slack) || !(point.p1 + point.p2 <= 1.0 + slack))
    throw DomainError("phase point (p1=" + std::to_string(point.p1) + ", p2=" + std::to_string(point.p2) +
                      ") lies outside the simplex");
}

Spinor phasepoint_to_spinor(const PhasePoint& point) {
  check_simplex(point);
  const double p1 = std::max(point.p1, 0.0);
  const double p2 = std::max(point.p2, 0.0);
  const double p3 = std::max(1.0 - p1 - p2, 0.0);
  return {std::polar(std::sqrt(p1), point.q1), std::polar(std::sqrt(p2), point.q2), Complex(std::sqrt(p3), 0.0)};
}

PhasePoint spinor_to_phasepoint(const Spinor& alpha) {
  const double norm2 = std::norm(alpha[0]) + std::norm(alpha[1]) + std::norm(alpha[2]);
  if (!(norm2 > 0.0)) throw InvalidArgument("spinor_to_phasepoint: zero spinor");
  const double ref = std::abs(alpha[2]) > 0.0 ? std::arg(alpha[2]) : 0.0;
  auto rel = [&](const Complex& a) { return std::abs(a) > 0.0 ? wrap_angle(std::arg(a) - ref) : 0.0; };
  return {rel(alpha[0]), rel(alpha[1]), std::norm(alpha[0]) / norm2, std::norm(alpha[1]) / norm2};
}

double spinor_norm(const Spinor& alpha) {
  return std::sqrt(std::norm(alpha[0]) + std::norm(alpha[1]) + std::norm(alpha[2]));
}

double spinor_fidelity(const Spinor& a, const Spinor& b) {
  const Complex overlap = std::conj(a[0]) * b[0] + std::conj(a[1]) * b[1] + std::conj(a[2]) * b[2];
  return std::norm(overlap);
}

Spinor dark_spinor() {
  const double s = 1.0 / std::numbers::sqrt2;
  return {Complex(s, 0.0), Complex(0.0, 0.0), Complex(-s, 0.0)};
}

double wrap_angle(double angle) {
  double a = std::fmod(angle, 2.0 * std::numbers::pi);
  if (a < 0.0) a += 2.0 * std::numbers::pi;
  return a;
}

CoherentState coherent_state(const PhasePoint& point, int N) {
  if (N < 1) throw InvalidArgument("coherent_state: N must be >= 1");
  return {phasepoint_to_spinor(point), N};
}

namespace {

struct LogSpinor {
  std::array<double, 3> log_mod{};
  std::array<double, 3> phase{};
  std::array<bool, 3> zero{};
};

LogSpinor log_form(const Spinor& alpha) {
  const double norm = spinor_norm(alpha);
  if (std::abs(norm - 1.0) > 1e-10) throw InvalidArgument("coherent state spinor is not normalized");
  LogSpinor ls;
  for (int i = 0; i < 3; ++i) {
    const double m = std::abs(alpha[static_cast<std::size_t>(i)]);
    ls.zero[static_cast<std::size_t>(i)] = (m == 0.0);
    ls.log_mod[static_cast<std::size_t>(i)] = m > 0.0 ? std::log(m) : 0.0;
    ls.phase[static_cast<std::size_t>(i)] = std::arg(alpha[static_cast<std::size_t>(i)]);
  }
  return ls;
}

Complex amplitude(const LogSpinor& ls, double log_norm_factor, const std::array<int, 3>& n) {
  double log_amp = log_norm_factor;
  double phase = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    if (n[i] == 0) continue;
    if (ls.zero[i]) return {0.0, 0.0};
    log_amp += n[i] * ls.log_mod[i] - 0.5 * std::lgamma(n[i] + 1.0);
    phase += n[i] * ls.phase[i];
  }
  return std::polar(std::exp(log_amp), phase);
}

}  // namespace

Complex fock_overlap(const CoherentState& state, const FockState& n) {
  if (n.n1 < 0 || n.n2 < 0 || n.n3 < 0 || n.total() != state.N)
    throw InvalidArgument("fock_overlap: occupations do not sum to N");
  const LogSpinor ls = log_form(state.alpha);
  return amplitude(ls, 0.5 * std::lgamma(state.N + 1.0), {n.n1, n.n2, n.n3});
}

Eigen::VectorXcd fock_amplitudes(const CoherentState& state, const FockBasis& basis) {
  if (basis.particles() != state.N) throw InvalidArgument("fock_amplitudes: basis and coherent state disagree on N");
  const LogSpinor ls = log_form(state.alpha);
  const double log_norm_factor = 0.5 * std::lgamma(state.N + 1.0);
  Eigen::VectorXcd c(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const FockState& s = basis.state(i);
    c(static_cast<Eigen::Index>(i)) = amplitude(ls, log_norm_factor, {s.n1, s.n2, s.n3});
  }
  return c;
}

double husimi(const Spectrum& spectrum, std::size_t nu, const CoherentState& state) {
  const auto v = spectrum.eigenvector(nu);
  const Eigen::VectorXcd c = fock_amplitudes(state, FockBasis(spectrum.params.N));
  return std::norm(c.dot(v.cast<Complex>()));
}

double husimi(const Spectrum& spectrum, std::size_t nu, const PhasePoint& point) {
  return husimi(spectrum, nu, coherent_state(point, spectrum.params.N));
}

Eigen::VectorXd husimi_all(const Spectrum& spectrum, const CoherentState& state) {
  const Eigen::VectorXcd c = fock_amplitudes(state, FockBasis(spectrum.params.N));
  // <alpha|E_nu> = sum_n conj(c_n) v_n(nu); V is real so split c into parts.
  const Eigen::VectorXd re = spectrum.eigenvectors.transpose() * c.real();
  const Eigen::VectorXd im = spectrum.eigenvectors.transpose() * c.imag();
  return re.cwiseAbs2() + im.cwiseAbs2();
}

Eigen::VectorXd summed_husimi(const Spectrum& spectrum, std::span<const Spinor> spinors) {
  const FockBasis basis(spectrum.params.N);
  const auto dim = static_cast<Eigen::Index>(basis.size());
  Eigen::VectorXd total = Eigen::VectorXd::Zero(dim);
  constexpr std::size_t kBlock = 64;
  for (std::size_t j0 = 0; j0 < spinors.size(); j0 += kBlock) {
    const std::size_t width = std::min(kBlock, spinors.size() - j0);
    Eigen::MatrixXd re(dim, static_cast<Eigen::Index>(width));
    Eigen::MatrixXd im(dim, static_cast<Eigen::Index>(width));
    for (std::size_t j = 0; j < width; ++j) {
      const Eigen::VectorXcd c = fock_amplitudes({spinors[j0 + j], spectrum.params.N}, basis);
      re.col(static_cast<Eigen::Index>(j)) = c.real();
      im.col(static_cast<Eigen::Index>(j)) = c.imag();
    }
    const Eigen::MatrixXd pr = spectrum.eigenvectors.transpose() * re;
    const Eigen::MatrixXd pi = spectrum.eigenvectors.transpose() * im;
    total += (pr.cwiseAbs2() + pi.cwiseAbs2()).rowwise().sum();
  }
  return total;
}

SpOverlap sp_overlap_all(const Spectrum& spectrum) {
  SpOverlap out;
  out.overlaps = husimi_all(spectrum, {dark_spinor(), spectrum.params.N});
  Eigen::Index best = 0;
  out.overlaps.maxCoeff(&best);
  out.supported_index = static_cast<std::size_t>(best);
  return out;
}

SinglePtlDensity one_particle_density(const FockBasis& basis, const Eigen::Ref<const Eigen::VectorXcd>& psi) {
  if (static_cast<std::size_t>(psi.size()) != basis.size())
    throw InvalidArgument("one_particle_density: state length does not match basis");
  SinglePtlDensity d;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const FockState& s = basis.state(k);
    const std::array<int, 3> n{s.n1, s.n2, s.n3};
    const Complex amp = psi(static_cast<Eigen::Index>(k));
    if (amp == Complex(0.0, 0.0)) continue;
    for (int i = 0; i < 3; ++i) d.rho(i, i) += std::norm(amp) * static_cast<double>(n[static_cast<std::size_t>(i)]);
    // <a_i^dag a_j> picks up conj(psi(m)) psi(n) sqrt(n_j (n_i + 1)) with m = n + e_i - e_j
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        if (i == j || n[static_cast<std::size_t>(j)] == 0) continue;
        std::array<int, 3> m = n;
        --m[static_cast<std::size_t>(j)];
        ++m[static_cast<std::size_t>(i)];
        const std::size_t mk = basis.index({m[0], m[1], m[2]});
        const double factor =
            std::sqrt(static_cast<double>(n[static_cast<std::size_t>(j)]) * (n[static_cast<std::size_t>(i)] + 1.0));
        d.rho(i, j) += std::conj(psi(static_cast<Eigen::Index>(mk))) * amp * factor;
      }
  }
  d.rho /= static_cast<double>(basis.particles());
  return d;
}

SinglePtlDensity one_particle_density(const Spectrum& spectrum, std::size_t nu) {
  const Eigen::VectorXcd psi = spectrum.eigenvector(nu).cast<Complex>();
  return one_particle_density(FockBasis(spectrum.params.N), psi);
}

double purity(const SinglePtlDensity& density) { return (density.rho * density.rho).trace().real(); }

double site2_expectation(const Spectrum& spectrum, std::size_t nu) {
  const auto v = spectrum.eigenvector(nu);
  const FockBasis basis(spectrum.params.N);
  double total = 0.0;
  for (std::size_t k = 0; k < basis.size(); ++k) total += v(static_cast<Eigen::Index>(k)) * v(static_cast<Eigen::Index>(k)) * basis.state(k).n2;
  return total / spectrum.params.N;
}

std::string to_string(HusimiNormalization mode) {
  return mode == HusimiNormalization::Raw ? "raw" : "max-rescaled";
}

std::optional<double> q1_on_shell(const ModelParams& params, double q2, double p1, double p2, double h_target) {
  // h depends on q1 only through -omega sqrt(p1 p2) cos(q1 - q2)
  const double coupling = params.omega * std::sqrt(std::max(p1 * p2, 0.0));
  const double rest = hcl({q2, q2, p1, p2}, params) + coupling;  // value with the q1 term removed
  if (!(coupling > 0.0)) return std::nullopt;
  const double c = (rest - h_target) / coupling;
  if (c < -1.0 || c > 1.0) return std::nullopt;
  const double delta = std::acos(c);
  const double a = wrap_angle(q2 + delta);
  const double b = wrap_angle(q2 - delta);
  auto distance_to_pi = [](double q) { return std::abs(std::remainder(q - std::numbers::pi, 2.0 * std::numbers::pi)); };
  return distance_to_pi(a) <= distance_to_pi(b) ? a : b;
}

HusimiGrid husimi_grid(const Spectrum& spectrum, std::size_t nu, const HusimiGridSpec& spec) {
  if (spec.q2_points == 0 || spec.p2_points == 0) throw InvalidArgument("husimi_grid: empty grid");
  if (!(spec.plane_p1 > 0.0 && spec.plane_p1 < 1.0)) throw InvalidArgument("husimi_grid: plane must satisfy 0 < p1 < 1");
  HusimiGrid grid;
  grid.nu = nu;
  const auto v = spectrum.eigenvector(nu);
  grid.energy = spectrum.energies(static_cast<Eigen::Index>(nu));
  grid.normalization = spec.normalization;
  const double h_target = grid.energy / spectrum.params.N;
  const double p2_max = 1.0 - spec.plane_p1;
  const FockBasis basis(spectrum.params.N);
  grid.samples.resize(spec.q2_points * spec.p2_points);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < grid.samples.size(); ++k) {
    const std::size_t iq = k / spec.p2_points;
    const std::size_t ip = k % spec.p2_points;
    HusimiSample s;
    s.q2 = 2.0 * std::numbers::pi * (static_cast<double>(iq) + 0.5) / static_cast<double>(spec.q2_points);
    s.p2 = p2_max * (static_cast<double>(ip) + 0.5) / static_cast<double>(spec.p2_points);
    const auto q1 = q1_on_shell(spectrum.params, s.q2, spec.plane_p1, s.p2, h_target);
    s.on_shell = q1.has_value();
    s.q1 = q1.value_or(std::numbers::pi);
    const Eigen::VectorXcd c = fock_amplitudes(coherent_state({s.q1, s.q2, spec.plane_p1, s.p2}, spectrum.params.N), basis);
    s.Q = std::norm(c.dot(v.cast<Complex>()));
    grid.samples[k] = s;
  }
  if (spec.normalization == HusimiNormalization::MaxRescaled) {
    double peak = 0.0;
    for (const auto& s : grid.samples) peak = std::max(peak, s.Q);
    if (peak > 0.0)
      for (auto& s : grid.samples) s.Q /= peak;
  }
  return grid;
}

}  // namespace trimer
