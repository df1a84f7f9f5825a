// Acceptance checks. Each criterion prints one PASS/FAIL line listing its sub-checks.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trimer/classical.hpp"
#include "trimer/coherent.hpp"
#include "trimer/errors.hpp"
#include "trimer/measures.hpp"
#include "trimer/pipeline.hpp"
#include "trimer/spectrum_cache.hpp"
#include "trimer/stability.hpp"

using namespace trimer;

namespace {

std::filesystem::path g_cache;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& name, const std::string& values) {
    pass = pass && ok;
    detail << (detail.tellp() > 0 ? "; " : "") << (ok ? "[ok] " : "[FAIL] ") << name << " " << values;
  }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Spectrum spectrum(const ModelParams& p) { return load_or_compute_spectrum(p, g_cache); }

// Second-quantized action of H on one ket, written out term by term.
using Ket = std::array<int, 3>;
std::map<Ket, double> apply_h(const ModelParams& p, const Ket& k) {
  std::map<Ket, double> out;
  double diag = p.V() * k[1];
  for (int i = 0; i < 3; ++i) diag += 0.5 * p.U() * k[i] * k[i];
  out[k] += diag;
  auto hop = [&](int from, int to) {
    if (k[from] == 0) return;
    Ket m = k;
    --m[from];
    ++m[to];
    out[m] += -0.5 * p.omega * std::sqrt(static_cast<double>(k[from]) * (k[to] + 1));
  };
  hop(0, 1);
  hop(1, 0);
  hop(1, 2);
  hop(2, 1);
  return out;
}

Outcome criterion1() {
  Outcome o;
  double worst = 0.0;
  for (double u : {0.0, 0.7, 3.0})
    for (double v : {0.0, 0.1, -0.4}) {
      const ModelParams p{1, u, v, 1.0};
      const auto s = diagonalize(build_hamiltonian(FockBasis(1), p));
      const double r = std::sqrt(v * v + 2.0);
      std::array<double, 3> e{p.U() / 2 + (v - r) / 2, p.U() / 2, p.U() / 2 + (v + r) / 2};
      std::sort(e.begin(), e.end());
      for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(s.energies(i) - e[static_cast<std::size_t>(i)]));
    }
  for (double v : {0.0, 0.1, 0.5}) {
    const double r = std::sqrt(v * v + 2.0);
    const double one[3] = {(v - r) / 2, 0.0, (v + r) / 2};
    std::vector<double> two;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) two.push_back(one[i] + one[j]);
    std::sort(two.begin(), two.end());
    const auto s = diagonalize(build_hamiltonian(FockBasis(2), {2, 0.0, v, 1.0}));
    for (int i = 0; i < 6; ++i) worst = std::max(worst, std::abs(s.energies(i) - two[static_cast<std::size_t>(i)]));
  }
  o.check(worst <= 1e-12, "N=1,2 closed forms", fmt("max|dE|=%.2e", worst));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  double herr = 0.0;
  for (int N = 1; N <= 8; ++N)
    for (int rep = 0; rep < 3; ++rep) {
      const ModelParams p{N, U(rng), U(rng), 0.5 + std::abs(U(rng))};
      const FockBasis b(N);
      const auto H = build_hamiltonian(b, p);
      Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(H.matrix.rows(), H.matrix.cols());
      for (std::size_t j = 0; j < b.size(); ++j) {
        const auto& s = b.state(j);
        for (const auto& [k, c] : apply_h(p, {s.n1, s.n2, s.n3}))
          oracle(static_cast<Eigen::Index>(b.index({k[0], k[1], k[2]})), static_cast<Eigen::Index>(j)) += c;
      }
      herr = std::max(herr, (oracle - H.matrix).cwiseAbs().maxCoeff());
    }
  o.check(herr <= 1e-13, "ladder-operator oracle N<=8", fmt("max|dH|=%.2e", herr));

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double ferr = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const ModelParams p{1, 4.0 * unit(rng), 0.1, 1.0};
    double a = 0, b = 0;
    do {
      a = unit(rng);
      b = unit(rng);
    } while (a + b > 0.98 || a < 0.01 || b < 0.01);
    const PhasePoint x{6.283185307179586 * unit(rng), 6.283185307179586 * unit(rng), a, b};
    const auto r = eom(x, p);
    const double h = 1e-6;
    auto d = [&](int k) {
      PhasePoint lo = x, hi = x;
      double* pl[4] = {&lo.q1, &lo.q2, &lo.p1, &lo.p2};
      double* ph[4] = {&hi.q1, &hi.q2, &hi.p1, &hi.p2};
      *ph[k] += h;
      *pl[k] -= h;
      return (hcl(hi, p) - hcl(lo, p)) / (2 * h);
    };
    const double an[4] = {r.q1_dot, r.q2_dot, r.p1_dot, r.p2_dot};
    const double fd[4] = {d(2), d(3), -d(0), -d(1)};
    for (int k = 0; k < 4; ++k) ferr = std::max(ferr, std::abs(an[k] - fd[k]) / std::max(1.0, std::abs(an[k])));
  }
  o.check(ferr <= 1e-7, "eom vs finite differences", fmt("max rel=%.2e", ferr));
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto [lo1, hi1] = find_thresholds(0.1);
  o.check(std::abs(lo1 - 0.2) <= 1e-4 && std::abs(hi1 - 3.2) <= 0.02, "thresholds v=0.1", fmt("(%.6f, %.6f)", lo1, hi1));
  const auto [lo0, hi0] = find_thresholds(0.0);
  o.check(std::abs(lo0) <= 1e-4 && std::abs(hi0 - 2.8284) <= 1e-4, "thresholds v=0", fmt("(%.6f, %.6f)", lo0, hi0));
  double zero = 0.0, diff = 0.0;
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 20; ++j) {
      const double u = 4.0 * i / 99, v = 0.2 * j / 19;
      const auto cf = frequencies(u, v);
      const auto nm = numerical_frequencies(u, v);
      zero = std::max(zero, std::abs(nm.omega0));
      diff = std::max({diff, std::abs(cf.omega_plus - nm.omega_plus), std::abs(cf.omega_minus - nm.omega_minus)});
    }
  o.check(zero <= 1e-10, "omega0 on 100x20 grid", fmt("max=%.2e", zero));
  o.check(diff <= 1e-10, "closed form vs 6x6", fmt("max=%.2e", diff));
  return o;
}

Outcome criterion3() {
  Outcome o;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal;
  // ensemble moments: R_q = sum X^q averaged over realizations, then M_q = R_q^(-1/(q-1))
  double r2 = 0.0, r10 = 0.0;
  const int dim = 4000, reps = 200;
  Eigen::VectorXcd v(dim);
  for (int r = 0; r < reps; ++r) {
    for (int i = 0; i < dim; ++i) v(i) = normal(rng);
    v.normalize();
    const auto m = moments(intensities_of(v));
    r2 += m.R.at(2.0) / reps;
    r10 += m.R.at(10.0) / reps;
  }
  const double m2 = 1.0 / r2 / dim;
  const double ratio = std::pow(r10, -1.0 / 9.0) * r2;
  o.check(std::abs(m2 * 3.0 - 1.0) <= 0.02, "GOE M2/D", fmt("%.4f", m2));
  o.check(std::abs(ratio / 0.3145 - 1.0) <= 0.02, "GOE M10/M2", fmt("%.4f", ratio));

  auto profile = [](std::vector<double> x) {
    IntensityProfile p;
    p.X = Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    p.X /= p.X.sum();
    return p;
  };
  std::vector<ScalingPoint> dark;
  double dark_ratio = 0.0;
  for (int N : {50, 100, 150, 200, 250, 300, 350, 400}) {
    std::vector<double> x(static_cast<std::size_t>(N) + 1);
    for (int k = 0; k <= N; ++k)
      x[static_cast<std::size_t>(k)] =
          std::exp(std::lgamma(N + 1.0) - std::lgamma(k + 1.0) - std::lgamma(N - k + 1.0) - N * std::log(2.0));
    const auto m = moments(profile(x));
    dark.push_back({static_cast<double>(N), m.M.at(2.0)});
    dark_ratio = m.ratio(10.0, 2.0);
  }
  const double dslope = fit_scaling(dark).slope;
  o.check(std::abs(dslope - 0.5) <= 0.02 && std::abs(dark_ratio - 0.80) <= 0.02, "binomial",
          fmt("slope=%.4f ratio(400)=%.4f", dslope, dark_ratio));

  std::vector<double> g1;
  for (int n = -420; n <= 420; ++n) g1.push_back(std::exp(-0.5 * n * n / (35.0 * 35.0)));
  std::vector<double> g2;
  for (double a : g1)
    for (double b : g1) g2.push_back(a * b);
  const double gr = moments(profile(g2)).ratio(10.0, 2.0);
  o.check(std::abs(gr / 0.646 - 1.0) <= 0.01, "2D Gaussian ratio", fmt("%.4f", gr));

  std::vector<ScalingPoint> pl;
  double rmin = 1.0, rmax = 0.0;
  for (int D : {1000, 2000, 4000, 7000, 10000}) {
    std::vector<double> x(static_cast<std::size_t>(D));
    for (int n = 1; n <= D; ++n) x[static_cast<std::size_t>(n - 1)] = 1.0 / std::sqrt(static_cast<double>(n));
    const auto m = moments(profile(x));
    pl.push_back({static_cast<double>(D), m.M.at(2.0)});
    rmin = std::min(rmin, m.ratio(10.0, 2.0));
    rmax = std::max(rmax, m.ratio(10.0, 2.0));
  }
  const double plslope = fit_scaling(pl).slope;
  const bool pl_ok = rmin >= 0.22 * 0.9 && rmax <= 0.22 * 1.1 && std::abs(plslope - 0.45) <= 0.05;
  o.check(pl_ok, "power law n^-1/2 over D in [1e3,1e4]",
          fmt("ratio in [%.3f, %.3f], M2 exponent %.3f", rmin, rmax, plslope));
  return o;
}

Outcome criterion4() {
  Outcome o;
  const auto s = spectrum({50, 3.0, 0.1, 1.0});
  const Tomography t = tomography(s);
  const double band = *window_mean(t, 0.35, 0.65, &EigenstateRecord::M2);
  const double low = *window_mean(t, 0.0, 0.1, &EigenstateRecord::M2);
  o.check(band >= 3.0 * low, "band/low M2", fmt("%.3f (need >= 3)", band / low));
  const auto maps = moment_maps(t, 100);
  const std::size_t b = bin_of(t.e_tilde_sp, 100);
  const double here = *maps.m2[b], left = *maps.m2[b - 1], right = *maps.m2[b + 1];
  o.check(here < left && here < right, "SP bin dip", fmt("bins %.4f | %.4f | %.4f", left, here, right));
  const double r_hi = *window_mean(t, 0.55, 0.65, &EigenstateRecord::ratio);
  const double r_lo = *window_mean(t, 0.35, 0.45, &EigenstateRecord::ratio);
  o.check(r_hi < r_lo, "M10/M2 above vs below E_SP", fmt("%.4f < %.4f", r_hi, r_lo));
  return o;
}

Outcome criterion5() {
  Outcome o;
  const std::vector<double> us{0.1, 0.3, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0, 3.25, 3.5};
  const std::vector<int> Ns{50};
  const auto track = sp_track(0.1, us, Ns, g_cache);
  auto at = [&](double u) {
    for (const auto& p : track)
      if (std::abs(p.u - u) < 1e-12) return p;
    throw std::logic_error("u not on grid");
  };
  double dip = 1.0;
  for (const auto& p : track)
    if (p.u > 0.2 && p.u < 3.2) dip = std::min(dip, p.purity);
  o.check(at(0.1).purity >= 0.95, "S(0.1)", fmt("%.4f", at(0.1).purity));
  o.check(dip < 0.7, "min S in window", fmt("%.4f", dip));
  o.check(at(3.5).purity > at(2.5).purity, "S(3.5) > S(2.5)", fmt("%.4f > %.4f", at(3.5).purity, at(2.5).purity));
  o.check(at(0.1).Q_sp >= 0.9, "Q_SP(0.1)", fmt("%.4f", at(0.1).Q_sp));
  return o;
}

double fraction(const std::vector<Trajectory>& runs, Regularity label) {
  std::size_t n = 0;
  for (const auto& r : runs) n += r.label == label;
  return static_cast<double>(n) / static_cast<double>(runs.size());
}

Outcome criterion6() {
  Outcome o;
  const ModelParams strong{1, 3.0, 0.1, 1.0};
  const auto range = classical_range(strong);
  {
    const auto seeds = seed_on_shell(strong, range.restore(0.5), {8, 3, SeedMode::Interior});
    const auto runs = integrate_ensemble(seeds, strong, 1000.0, TrajectoryOptions{});
    double drift = 0.0;
    for (const auto& r : runs) drift = std::max(drift, r.failed ? 1.0 : r.max_energy_drift);
    o.check(drift <= 1e-8, "energy drift T=1000", fmt("%.2e", drift));
  }
  double residual = 0.0;
  for (double u : {0.1, 1.0, 3.0}) {
    const auto r = eom({3.141592653589793, 1.0, 0.5, 0.0}, {1, u, 0.1, 1.0});
    residual = std::max({residual, std::abs(r.q1_dot), std::abs(r.q2_dot), std::abs(r.p1_dot), std::abs(r.p2_dot)});
  }
  o.check(residual == 0.0, "SP residual", fmt("%.1e", residual));
  const auto fit = sp_perturbation_growth({1, 1.0, 0.1, 1.0});
  const double rate = frequencies(1.0, 0.1).max_imag();
  o.check(std::abs(fit.rate / rate - 1.0) <= 0.05, "growth rate u=1", fmt("%.5f vs %.5f", fit.rate, rate));

  TrajectoryOptions lyap;
  lyap.lyapunov = LyapunovOptions{};
  lyap.tolerances = {1e-10, 1e-10};
  const double T = lyap.lyapunov->window;
  {
    const auto seeds = seed_on_shell(strong, range.restore(0.4), {50, 2});
    const double f = fraction(integrate_ensemble(seeds, strong, T, lyap), Regularity::Chaotic);
    o.check(f >= 0.9, "u=3 E~0.4 chaotic", fmt("%.2f", f));
  }
  {
    const ModelParams weak{1, 0.1, 0.1, 1.0};
    const auto seeds = seed_on_shell(weak, 0.1 / 4, {50, 2});
    const double f = fraction(integrate_ensemble(seeds, weak, T, lyap), Regularity::Regular);
    o.check(f >= 0.9, "u=0.1 E_SP regular", fmt("%.2f", f));
  }
  {
    const double h = range.restore(0.6);
    const auto seeds = seed_on_shell(strong, h, {100, 2});
    const auto runs = integrate_ensemble(seeds, strong, T, lyap);
    const double fr = fraction(runs, Regularity::Regular), fc = fraction(runs, Regularity::Chaotic);
    // seeds inside the island band of the p1 = 1/2 section
    std::vector<PhasePoint> island;
    for (auto [q2, p2] : {std::pair{2.35, 0.36}, {2.5, 0.34}, {2.65, 0.32}})
      if (auto q1 = section_q1(strong, q2, 0.5, p2, h)) island.push_back({*q1, q2, 0.5, p2});
    const auto iruns = integrate_ensemble(island, strong, T, lyap);
    const bool island_ok = island.size() == 3 && fraction(iruns, Regularity::Regular) == 1.0;
    o.check(fr > 0.0 && fc > 0.0 && island_ok, "u=3 E~0.6 mixed",
            fmt("regular %.2f chaotic %.2f, island seeds regular %.0f/3", fr, fc,
                island.empty() ? 0.0 : fraction(iruns, Regularity::Regular) * 3));
  }
  return o;
}

IslandUnion standard_islands() {
  TorusSelection sel;
  sel.search.seeds_per_energy = 100;
  const std::vector<double> grid{0.60, 0.62, 0.64, 0.66, 0.68, 0.70};
  return island_union({1, 3.0, 0.1, 1.0}, grid, sel);
}

Outcome criterion7() {
  Outcome o;
  const ModelParams cl{1, 3.0, 0.1, 1.0};
  const auto range = classical_range(cl);
  const auto seeds = seed_on_shell(cl, range.restore(0.4), {10, 11});
  TrajectoryOptions opt;
  opt.tolerances = {1e-10, 1e-10};
  opt.transient = 100.0;
  const auto runs = integrate_ensemble(seeds, cl, 5000.0, opt);
  double mean = 0.0, spread = 0.0;
  for (const auto& r : runs) mean += r.mean_p2 / static_cast<double>(runs.size());
  for (const auto& r : runs) spread = std::max(spread, std::abs(r.mean_p2 - mean));
  o.check(spread <= 0.02, "chaotic <n2>/N across 10 seeds", fmt("mean %.4f max dev %.4f", mean, spread));

  const auto s = spectrum({50, 3.0, 0.1, 1.0});
  Tomography t = tomography(s);
  const auto islands = standard_islands();
  attach_island_projection(t, island_projection(s, islands));
  const auto h = hybridization(t, energy_shell(s, EnergyWindow{0.55, 0.65}));
  const double neither = static_cast<double>(h.neither) / static_cast<double>(h.states);
  o.check(h.island_corner > 0, "island corner", fmt("%.0f states", static_cast<double>(h.island_corner)));
  o.check(h.chaotic_corner > 0, "chaotic corner", fmt("%.0f states", static_cast<double>(h.chaotic_corner)));
  o.check(neither >= 0.3, "neither corner", fmt("%.3f of %.0f", neither, static_cast<double>(h.states)));
  return o;
}

Outcome criterion8() {
  Outcome o;
  const auto s = spectrum({50, 3.0, 0.1, 1.0});
  const auto islands = standard_islands();
  const auto suite = intensity_suite(s, island_projection(s, islands), &islands);
  auto tail = [](const IntensityGroup& g) {
    std::size_t k = 0;
    while (g.curve.thresholds[k] < 10.0 - 1e-9) ++k;
    return g.curve.empirical[k];
  };
  const double pt = porter_thomas_tail(10.0);
  const double hc = tail(suite.hard), mc = tail(suite.mixed), il = tail(suite.mixed_without_island);
  o.check(hc > 0 && std::abs(std::log10(hc / pt)) <= 0.5, "HC vs Porter-Thomas at x=10", fmt("%.3e vs %.3e", hc, pt));
  o.check(mc >= 2.0 * hc, "MC >= 2 HC", fmt("%.3e vs %.3e (x%.2f)", mc, hc, mc / hc));
  o.check(il > pt, "MC-IL above Porter-Thomas", fmt("%.3e vs %.3e", il, pt));
  return o;
}

Outcome criterion9() {
  Outcome o;
  const std::vector<int> Ns{30, 40, 50, 60, 70, 80};
  const auto islands = standard_islands();
  auto slope = [&](double u, ScalingClass c) {
    const auto r = scaling_study(0.1, u, Ns, c, {}, &islands, g_cache);
    return r.fit ? r.fit->slope : std::nan("");
  };
  const double hc = slope(3.0, ScalingClass::HardChaotic);
  const double mc = slope(3.0, ScalingClass::MixedChaotic);
  const auto isl = scaling_study(0.1, 3.0, Ns, ScalingClass::Island, {}, &islands, g_cache);
  const double sp = slope(0.1, ScalingClass::SpSupported);
  o.check(hc >= 1.75 && hc <= 2.0, "hard-chaotic slope", fmt("%.3f", hc));
  o.check(mc < hc && mc >= 1.6, "mixed-chaotic slope", fmt("%.3f", mc));
  const double is = isl.fit ? isl.fit->slope : std::nan("");
  o.check(isl.fit && is >= 0.8 && is <= 1.2, "island mean-M2 slope",
          fmt("%.3f over %.0f N values", is, static_cast<double>(isl.samples.size())));
  o.check(std::abs(sp - 0.5) <= 0.1, "SP-supported u=0.1 slope", fmt("%.3f", sp));
  return o;
}

Outcome criterion10() {
  Outcome o;
  const auto s = spectrum({150, 3.0, 0.1, 1.0});
  o.check(s.dimension() == 11476, "dimension", fmt("%.0f", static_cast<double>(s.dimension())));
  const Tomography t = tomography(s);
  const auto maps = moment_maps(t, 100);
  const std::size_t b = bin_of(t.e_tilde_sp, 100);
  o.check(*maps.m2[b] < *maps.m2[b - 1] && *maps.m2[b] < *maps.m2[b + 1], "SP bin dip",
          fmt("%.4f | %.4f | %.4f", *maps.m2[b - 1], *maps.m2[b], *maps.m2[b + 1]));
  const double band = *window_mean(t, 0.3, 0.7, &EigenstateRecord::M2);
  const double outside = (*window_mean(t, 0.0, 0.2, &EigenstateRecord::M2) + *window_mean(t, 0.8, 1.0, &EigenstateRecord::M2)) / 2;
  o.check(band > outside, "chaos band 0.3-0.7", fmt("%.1f vs %.1f", band, outside));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> which;
  std::string cache;
  app.add_option("--criterion", which, "criteria to run (default 1-9)");
  app.add_option("--cache-dir", cache, "eigenpair cache");
  CLI11_PARSE(app, argc, argv);
  g_cache = cache;
  if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  const std::map<int, std::function<Outcome()>> table{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}};
  bool all = true;
  for (int k : which) {
    const auto it = table.find(k);
    if (it == table.end()) {
      std::cerr << "no criterion " << k << '\n';
      return 2;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = it->second();
    } catch (const std::exception& e) {
      out.check(false, "exception", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d: %s (%.1f s) %s\n", k, out.pass ? "PASS" : "FAIL", secs, out.detail.str().c_str());
    std::fflush(stdout);
    all = all && out.pass;
  }
  return all ? 0 : 1;
}
