#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "trimer/classical.hpp"
#include "trimer/coherent.hpp"
#include "trimer/errors.hpp"
#include "trimer/measures.hpp"

using namespace trimer;

namespace {

constexpr double kPi = std::numbers::pi;

Spectrum solve(const ModelParams& p) { return diagonalize(build_hamiltonian(FockBasis(p.N), p)); }

PhasePoint random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double a = unit(rng), b = unit(rng);
  if (a + b > 1.0) {
    a = 1.0 - a;
    b = 1.0 - b;
  }
  return {2 * kPi * unit(rng), 2 * kPi * unit(rng), a, b};
}

// Gauss-Legendre nodes and weights on [0, 1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5)), dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[static_cast<std::size_t>(i)] = 0.5 * (1 - z);
    w[static_cast<std::size_t>(i)] = 1.0 / ((1 - z * z) * dp * dp);
  }
}

}  // namespace

TEST_CASE("phase point to spinor") {
  const auto dark = phasepoint_to_spinor({kPi, 1.234, 0.5, 0.0});
  CHECK(dark[0].real() == doctest::Approx(-1 / std::sqrt(2.0)));
  CHECK(std::abs(dark[0].imag()) < 1e-15);
  CHECK(std::abs(dark[1]) == 0.0);
  CHECK(dark[2].real() == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(spinor_fidelity(dark, dark_spinor()) == doctest::Approx(1.0));
  const auto e1 = phasepoint_to_spinor({0, 0, 1, 0});
  CHECK(e1[0] == Complex(1, 0));
  CHECK(std::abs(e1[1]) + std::abs(e1[2]) == 0.0);
  const auto a = phasepoint_to_spinor({0.3, 0.0, 0.4, 0.0});
  const auto b = phasepoint_to_spinor({0.3, 2.5, 0.4, 0.0});
  for (int i = 0; i < 3; ++i) CHECK(a[static_cast<std::size_t>(i)] == b[static_cast<std::size_t>(i)]);
  CHECK_THROWS_AS(phasepoint_to_spinor({0, 0, 0.7, 0.4}), DomainError);
  CHECK_THROWS_AS(phasepoint_to_spinor({0, 0, -0.1, 0.4}), DomainError);

  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto p = random_point(rng);
    const auto back = spinor_to_phasepoint(phasepoint_to_spinor(p));
    CHECK(back.p1 == doctest::Approx(p.p1));
    CHECK(back.p2 == doctest::Approx(p.p2));
    CHECK(back.q1 == doctest::Approx(p.q1));
    CHECK(back.q2 == doctest::Approx(p.q2));
  }
}

TEST_CASE("Fock overlaps") {
  const int N = 150;
  CHECK(std::abs(fock_overlap({{Complex(1, 0), 0, 0}, N}, {N, 0, 0}) - Complex(1, 0)) < 1e-14);
  const FockBasis b(N);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 5; ++i) {
    const auto c = fock_amplitudes(coherent_state(random_point(rng), N), b);
    CHECK(c.squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));
  }
  const CoherentState sp{dark_spinor(), N};
  for (int k : {0, 1, 40, 75, 150}) {
    const double expected = std::exp(std::lgamma(N + 1.0) - std::lgamma(k + 1.0) - std::lgamma(N - k + 1.0) - N * std::log(2.0));
    CHECK(std::norm(fock_overlap(sp, {k, 0, N - k})) == doctest::Approx(expected).epsilon(1e-10));
  }
  CHECK(std::abs(fock_overlap(sp, {3, 1, N - 4})) == 0.0);
  CHECK_THROWS_AS(fock_overlap(sp, {3, 1, 1}), InvalidArgument);
  CHECK_THROWS_AS(fock_amplitudes({{Complex(1, 0), Complex(1, 0), 0}, 4}, FockBasis(4)), InvalidArgument);
  // all particles on site 2 share no Fock support with the dark state
  const auto site2 = fock_amplitudes({{0, Complex(1, 0), 0}, 6}, FockBasis(6));
  const auto dark = fock_amplitudes({dark_spinor(), 6}, FockBasis(6));
  CHECK(std::abs(site2.dot(dark)) == 0.0);
}

TEST_CASE("dark condensate is an eigenstate at u = 0") {
  const auto s = solve({8, 0.0, 0.1, 1.0});
  const auto sp = sp_overlap_all(s);
  CHECK(sp.overlaps(static_cast<Eigen::Index>(sp.supported_index)) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(s.energies(static_cast<Eigen::Index>(sp.supported_index))) < 1e-10);
  CHECK(sp.overlaps.sum() == doctest::Approx(1.0));
  CHECK(husimi(s, sp.supported_index, PhasePoint{kPi, 0.0, 0.5, 0.0}) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("Husimi resolution of identity") {
  // N_dim * int Q dp1 dp2 dq1 dq2 / (2 pi^2) = 1. Angles on a uniform grid of
  // 2N + 1 points are exact for the degree-N trigonometric polynomial; the
  // simplex uses collapsed Gauss-Legendre.
  const int N = 8;
  const auto s = solve({N, 3.0, 0.1, 1.0});
  const std::size_t nu = 17;
  std::vector<double> x, w;
  gauss_legendre(N / 2 + 4, x, w);
  const int na = 2 * N + 1;
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double p1 = x[i], p2 = (1 - x[i]) * x[j], jac = (1 - x[i]) * w[i] * w[j];
      for (int a = 0; a < na; ++a)
        for (int c = 0; c < na; ++c)
          total += jac * husimi(s, nu, PhasePoint{2 * kPi * a / na, 2 * kPi * c / na, p1, p2}) * (2 * kPi / na) * (2 * kPi / na);
    }
  CHECK(static_cast<double>(dimension(N)) * total / (2 * kPi * kPi) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("gauge invariance and mirror covariance of Husimi overlaps") {
  const auto s = solve({10, 1.0, 0.1, 1.0});
  std::mt19937_64 rng(4);
  for (int t = 0; t < 5; ++t) {
    const auto p = random_point(rng);
    Spinor a = phasepoint_to_spinor(p);
    Spinor rotated = a;
    for (auto& z : rotated) z *= std::polar(1.0, 0.77);
    const auto q1 = husimi_all(s, {a, 10});
    const auto q2 = husimi_all(s, {rotated, 10});
    CHECK((q1 - q2).cwiseAbs().maxCoeff() < 1e-13);
    const Spinor mirrored{a[2], a[1], a[0]};
    const auto q3 = husimi_all(s, {mirrored, 10});
    CHECK((q1 - q3).cwiseAbs().maxCoeff() < 1e-12);
    const auto rho = one_particle_density(FockBasis(10), fock_amplitudes({a, 10}, FockBasis(10)));
    const auto rho_rot = one_particle_density(FockBasis(10), fock_amplitudes({rotated, 10}, FockBasis(10)));
    CHECK((rho.rho - rho_rot.rho).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("one-particle density and purity") {
  const int N = 12;
  const FockBasis b(N);
  std::mt19937_64 rng(6);
  const Spinor a = phasepoint_to_spinor(random_point(rng));
  const auto d = one_particle_density(b, fock_amplitudes({a, N}, b));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(std::abs(d.rho(i, j) - std::conj(a[static_cast<std::size_t>(i)]) * a[static_cast<std::size_t>(j)]) < 1e-12);
  CHECK(purity(d) == doctest::Approx(1.0));

  const FockBasis b3(3);
  Eigen::VectorXcd fock = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(b3.size()));
  fock(static_cast<Eigen::Index>(b3.index({1, 1, 1}))) = 1.0;
  CHECK(purity(one_particle_density(b3, fock)) == doctest::Approx(1.0 / 3));

  const auto s = solve({N, 2.0, 0.1, 1.0});
  for (std::size_t nu = 0; nu < s.dimension(); nu += 7) {
    const auto r = one_particle_density(s, nu);
    CHECK(r.trace() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((r.rho - r.rho.adjoint()).cwiseAbs().maxCoeff() < 1e-13);
    const double S = purity(r);
    CHECK(S >= 1.0 / 3 - 1e-12);
    CHECK(S <= 1.0 + 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(r.rho);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
  }
}

TEST_CASE("site-2 occupation") {
  const auto g = solve({1, 0.0, 0.0, 1.0});
  CHECK(site2_expectation(g, 0) == doctest::Approx(0.5));
  Spectrum fock;
  const FockBasis b(5);
  fock.params = {5, 0.0, 0.0, 1.0};
  fock.energies = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(b.size()), 0, 1);
  fock.eigenvectors = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(b.size()), static_cast<Eigen::Index>(b.size()));
  CHECK(site2_expectation(fock, b.index({0, 5, 0})) == doctest::Approx(1.0));
  const auto dark = one_particle_density(b, fock_amplitudes({dark_spinor(), 5}, b));
  CHECK(std::abs(dark.rho(1, 1)) < 1e-15);
}

TEST_CASE("Husimi grid on the section plane") {
  const ModelParams p{10, 3.0, 0.1, 1.0};
  const auto s = solve(p);
  const std::size_t nu = 40;
  const auto raw = husimi_grid(s, nu, {16, 8, 0.5, HusimiNormalization::Raw});
  REQUIRE(raw.samples.size() == 128);
  const double h = s.energies(static_cast<Eigen::Index>(nu)) / p.N;
  std::size_t on = 0;
  for (const auto& x : raw.samples) {
    CHECK(x.Q >= 0.0);
    CHECK(x.Q <= 1.0);
    if (x.on_shell) {
      ++on;
      CHECK(hcl({x.q1, x.q2, 0.5, x.p2}, p) == doctest::Approx(h).epsilon(1e-10));
    } else {
      CHECK(x.q1 == kPi);
    }
  }
  CHECK(on > 0);
  const auto scaled = husimi_grid(s, nu, {16, 8, 0.5, HusimiNormalization::MaxRescaled});
  double peak = 0.0;
  for (const auto& x : scaled.samples) peak = std::max(peak, x.Q);
  CHECK(peak == doctest::Approx(1.0));
  CHECK(to_string(HusimiNormalization::MaxRescaled) == "max-rescaled");
  // branch nearest pi: the other root is never closer
  const auto q1 = q1_on_shell(p, 1.0, 0.5, 0.2, hcl({2.8, 1.0, 0.5, 0.2}, p));
  REQUIRE(q1.has_value());
  CHECK(*q1 == doctest::Approx(2.8));
  CHECK_FALSE(q1_on_shell(p, 1.0, 0.5, 0.2, 50.0).has_value());
}
