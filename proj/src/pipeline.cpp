#include "trimer/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <utility>

#include "trimer/errors.hpp"
#include "trimer/spectrum_cache.hpp"
#include "trimer/stability.hpp"

namespace trimer {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::pair<StateClass, const char*> kClassNames[] = {
    {StateClass::HardChaotic, "hard-chaotic"}, {StateClass::MixedChaotic, "mixed-chaotic"},
    {StateClass::Island, "island"},            {StateClass::SpSupported, "SP-supported"},
    {StateClass::Hybrid, "hybrid"},            {StateClass::RegularEdge, "regular-edge"},
};

std::vector<std::size_t> window_members(const Tomography& tomo, const EnergyWindow& w) {
  std::vector<std::size_t> out;
  for (const auto& r : tomo.records)
    if (r.e_tilde >= w.lo && r.e_tilde <= w.hi) out.push_back(r.index);
  return out;
}

std::vector<double> mean_lineshape(const Spectrum& spectrum, std::span<const std::size_t> states) {
  std::vector<std::vector<double>> shapes;
  std::size_t shortest = std::numeric_limits<std::size_t>::max();
  for (std::size_t nu : states) {
    shapes.push_back(sorted_lineshape(intensities(spectrum, nu)));
    shortest = std::min(shortest, shapes.back().size());
  }
  std::vector<double> mean(shapes.empty() ? 0 : shortest, 0.0);
  for (const auto& s : shapes)
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += s[k] / static_cast<double>(shapes.size());
  return mean;
}

IntensityGroup make_group(const Spectrum& spectrum, std::string name, std::vector<std::size_t> states,
                          const EnergyShell& shell, std::span<const double> thresholds) {
  if (states.empty()) throw EmptySelection("intensity_suite: group " + name + " is empty");
  IntensityGroup g;
  g.name = std::move(name);
  g.states = std::move(states);
  g.n_eff = shell.n_eff;
  const auto pooled = rescale_intensities(spectrum, shell, g.states);
  g.curve = inverse_cumulative(pooled.x, thresholds);
  g.lineshape = mean_lineshape(spectrum, g.states);
  return g;
}

}  // namespace

std::string to_string(StateClass label) {
  for (const auto& [c, name] : kClassNames)
    if (c == label) return name;
  throw InvalidArgument("unknown state class");
}

StateClass state_class_from_string(const std::string& name) {
  for (const auto& [c, n] : kClassNames)
    if (name == n) return c;
  throw InvalidArgument("unknown state class '" + name + "'");
}

Tomography tomography(const Spectrum& spectrum) {
  Tomography tomo;
  tomo.params = spectrum.params;
  tomo.scale = rescale_energies(spectrum);
  const auto& p = spectrum.params;
  tomo.e_tilde_sp = tomo.scale.rescale(p.N * p.u * p.omega / 4.0);
  const SpOverlap sp = sp_overlap_all(spectrum);
  tomo.sp_index = sp.supported_index;
  const std::size_t D = spectrum.dimension();
  tomo.records.resize(D);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t nu = 0; nu < D; ++nu) {
    auto& r = tomo.records[nu];
    r.index = nu;
    r.E = spectrum.energies(static_cast<Eigen::Index>(nu));
    r.e_tilde = tomo.scale.rescale(r.E);
    r.n2 = site2_expectation(spectrum, nu);
    const auto m = moments(intensities(spectrum, nu));
    r.M2 = m.M.at(2.0);
    r.M10 = m.M.at(10.0);
    r.ratio = r.M10 / r.M2;
    r.Q_sp = sp.overlaps(static_cast<Eigen::Index>(nu));
    r.Q_island = kNaN;
  }
  return tomo;
}

MomentMaps moment_maps(const Tomography& tomo, std::size_t nbins) {
  const double D = static_cast<double>(tomo.records.size());
  std::vector<double> e, m2, m10, ratio;
  for (const auto& r : tomo.records) {
    e.push_back(r.e_tilde);
    m2.push_back(r.M2 / D);
    m10.push_back(r.M10 / D);
    ratio.push_back(r.ratio);
  }
  return {nbins, bin_average(e, nbins, m2), bin_average(e, nbins, m10), bin_average(e, nbins, ratio)};
}

std::optional<double> window_mean(const Tomography& tomo, double lo, double hi, double EigenstateRecord::* field) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : tomo.records)
    if (r.e_tilde >= lo && r.e_tilde <= hi) {
      sum += r.*field;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

SpectrumMap spectrum_map(const ModelParams& base, std::span<const double> u_grid, std::size_t nbins,
                         const std::filesystem::path& cache_dir) {
  if (u_grid.empty()) throw InvalidArgument("spectrum_map: empty u grid");
  SpectrumMap map;
  map.base = base;
  map.nbins = nbins;
  map.u_lower = 2.0 * base.v;
  map.u_upper = kNaN;
  try {
    map.u_upper = find_thresholds(base.v).second;
  } catch (const DomainError&) {
  }
  for (double u : u_grid) {
    if (!std::isfinite(u)) throw InvalidArgument("spectrum_map: u grid must be finite");
    ModelParams p = base;
    p.u = u;
    const Spectrum s = load_or_compute_spectrum(p, cache_dir);
    const Tomography t = tomography(s);
    SpectrumMapColumn col;
    col.u = u;
    col.participation = moment_maps(t, nbins).m2;
    col.e_tilde_sp = t.e_tilde_sp;
    map.columns.push_back(std::move(col));
  }
  return map;
}

std::vector<SpTrackPoint> sp_track(double v, std::span<const double> u_grid, std::span<const int> N_list,
                                   const std::filesystem::path& cache_dir, double omega) {
  std::vector<SpTrackPoint> out;
  for (int N : N_list)
    for (double u : u_grid) {
      if (!std::isfinite(u)) throw InvalidArgument("sp_track: u grid must be finite");
      const ModelParams p{N, u, v, omega};
      const Spectrum s = load_or_compute_spectrum(p, cache_dir);
      const SpOverlap sp = sp_overlap_all(s);
      const std::size_t nu = sp.supported_index;
      SpTrackPoint pt;
      pt.N = N;
      pt.u = u;
      pt.index = nu;
      pt.e_tilde = rescale_energies(s).rescale(s.energies(static_cast<Eigen::Index>(nu)));
      pt.purity = purity(one_particle_density(s, nu));
      pt.Q_sp = sp.overlaps(static_cast<Eigen::Index>(nu));
      pt.M2_fraction = moments(intensities(s, nu)).M.at(2.0) / static_cast<double>(s.dimension());
      out.push_back(pt);
    }
  return out;
}

std::size_t IslandUnion::tori() const {
  std::size_t n = 0;
  for (const auto& s : sets) n += s.tori;
  return n;
}

std::vector<Spinor> IslandUnion::spinors() const {
  std::vector<Spinor> all;
  for (const auto& s : sets) all.insert(all.end(), s.spinors.begin(), s.spinors.end());
  return all;
}

IslandUnion island_union(const ModelParams& params, std::span<const double> e_tilde_grid,
                         const TorusSelection& selection) {
  IslandUnion u;
  u.params = params;
  const ClassicalRange range = classical_range(params);
  for (double et : e_tilde_grid) {
    try {
      u.sets.push_back(island_coherent_set(params, range.restore(et), selection));
      u.e_tilde_grid.push_back(et);
    } catch (const EmptySelection&) {
    }
  }
  if (u.sets.empty()) throw EmptySelection("island_union: no regular torus at any requested energy");
  return u;
}

Eigen::VectorXd island_projection(const Spectrum& spectrum, const IslandUnion& islands) {
  const auto spinors = islands.spinors();
  Eigen::VectorXd Q = summed_husimi(spectrum, spinors);
  const double peak = Q.maxCoeff();
  if (!(peak > 0.0)) throw NumericalFailure("island_projection: vanishing overlap", peak);
  return Q / peak;
}

void attach_island_projection(Tomography& tomo, const Eigen::VectorXd& Q_island) {
  if (static_cast<std::size_t>(Q_island.size()) != tomo.records.size())
    throw InvalidArgument("attach_island_projection: size mismatch");
  for (auto& r : tomo.records) r.Q_island = Q_island(static_cast<Eigen::Index>(r.index));
}

double local_goe_m2(const Spectrum& spectrum, std::size_t nu, std::size_t count) {
  const auto& E = spectrum.energies;
  const double center = rescale_energies(spectrum).rescale(E(static_cast<Eigen::Index>(nu)));
  return goe_baseline(2.0, energy_shell(spectrum, IndexWindow{center, count}).n_eff);
}

void classify_states(Tomography& tomo, const Spectrum& spectrum, const Skeleton& skeleton,
                     const ClassificationThresholds& thresholds) {
  if (skeleton.slices.empty()) throw InvalidArgument("classify_states: empty skeleton");
  std::vector<double> grid;
  for (const auto& s : skeleton.slices) grid.push_back(s.e_tilde);
  double spacing = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) spacing = std::max(spacing, std::abs(grid[i] - grid[i - 1]));
  if (grid.size() == 1) spacing = 0.1;
  const double reach = 0.5 * spacing + 1e-9;
  const double N = tomo.params.N;
  const double e_sp = tomo.params.N * tomo.params.u * tomo.params.omega / 4.0;

  const std::size_t D = tomo.records.size();
  std::vector<std::size_t> slice_of(D);
  for (auto& r : tomo.records) {
    const double et_cl = skeleton.range.rescale(r.E / N);
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (std::abs(grid[i] - et_cl) < std::abs(grid[best] - et_cl)) best = i;
    // the quantum spectrum sticks out slightly past the classical extremes
    const double clamped = std::clamp(et_cl, 0.0, 1.0);
    if (std::abs(grid[best] - clamped) > reach)
      throw InvalidArgument("classify_states: no skeleton slice near classical energy " + std::to_string(et_cl));
    slice_of[r.index] = best;
  }

  std::vector<StateClass> labels(D, StateClass::RegularEdge);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t i = 0; i < D; ++i) {
    const auto& r = tomo.records[i];
    if (!skeleton.slices[slice_of[r.index]].chaotic_mean) continue;
    const double goe = local_goe_m2(spectrum, r.index, thresholds.goe_window);
    const double q = std::isnan(r.Q_island) ? 0.0 : r.Q_island;
    if (q >= thresholds.island_q && r.M2 <= thresholds.island_m2 * goe)
      labels[i] = StateClass::Island;
    else if (q < thresholds.chaotic_q && r.M2 >= thresholds.chaotic_m2 * goe)
      labels[i] = r.E < e_sp ? StateClass::HardChaotic : StateClass::MixedChaotic;
    else
      labels[i] = StateClass::Hybrid;
  }
  labels[tomo.sp_index] = StateClass::SpSupported;
  for (std::size_t i = 0; i < D; ++i) tomo.records[i].label = labels[i];
}

LabelCounts count_labels(const Tomography& tomo) {
  LabelCounts c;
  for (const auto& r : tomo.records) {
    if (!r.label) throw InvalidArgument("count_labels: unlabeled record");
    switch (*r.label) {
      case StateClass::HardChaotic: ++c.hard_chaotic; break;
      case StateClass::MixedChaotic: ++c.mixed_chaotic; break;
      case StateClass::Island: ++c.island; break;
      case StateClass::SpSupported: ++c.sp_supported; break;
      case StateClass::Hybrid: ++c.hybrid; break;
      case StateClass::RegularEdge: ++c.regular_edge; break;
    }
  }
  return c;
}

HybridizationSummary hybridization(const Tomography& tomo, const EnergyShell& shell,
                                   const ClassificationThresholds& thresholds) {
  if (shell.members.empty()) throw EmptySelection("hybridization: empty shell");
  HybridizationSummary h;
  h.goe_m2 = goe_baseline(2.0, shell.n_eff);
  for (std::size_t nu : shell.members) {
    const auto& r = tomo.records.at(nu);
    if (std::isnan(r.Q_island)) throw InvalidArgument("hybridization: island projection not attached");
    ++h.states;
    if (r.Q_island > thresholds.island_q && r.M2 < thresholds.island_m2 * h.goe_m2)
      ++h.island_corner;
    else if (r.Q_island < thresholds.chaotic_q && r.M2 > thresholds.chaotic_m2 * h.goe_m2)
      ++h.chaotic_corner;
    else
      ++h.neither;
  }
  return h;
}

std::string to_string(ExclusionMode mode) {
  return mode == ExclusionMode::EigenstateLevel ? "eigenstate" : "husimi-mass";
}

ExclusionMode exclusion_mode_from_string(const std::string& name) {
  if (name == "eigenstate") return ExclusionMode::EigenstateLevel;
  if (name == "husimi-mass") return ExclusionMode::HusimiMass;
  throw InvalidArgument("unknown exclusion mode '" + name + "'");
}

double island_husimi_mass(const Spectrum& spectrum, std::size_t nu, const IslandUnion& islands,
                          const HusimiGridSpec& grid) {
  constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
  const double p2_span = 1.0 - grid.plane_p1;
  auto cell = [&](double q2, double p2) {
    const double w = wrap_angle(q2);
    auto i = static_cast<std::size_t>(w / kTwoPi * static_cast<double>(grid.q2_points));
    auto j = static_cast<std::size_t>(p2 / p2_span * static_cast<double>(grid.p2_points));
    return std::pair{std::min(i, grid.q2_points - 1), std::min(j, grid.p2_points - 1)};
  };
  std::set<std::pair<std::size_t, std::size_t>> occupied;
  for (const auto& s : islands.sets)
    for (const auto& x : s.points)
      if (std::abs(x.p1 - grid.plane_p1) <= 1e-8) occupied.insert(cell(x.q2, x.p2));
  HusimiGridSpec raw = grid;
  raw.normalization = HusimiNormalization::Raw;
  const HusimiGrid g = husimi_grid(spectrum, nu, raw);
  double inside = 0.0, total = 0.0;
  for (const auto& s : g.samples) {
    if (!s.on_shell) continue;
    total += s.Q;
    if (occupied.count(cell(s.q2, s.p2))) inside += s.Q;
  }
  return total > 0.0 ? inside / total : 0.0;
}

IntensitySuite intensity_suite(const Spectrum& spectrum, const Eigen::VectorXd& Q_island, const IslandUnion* islands,
                               const IntensitySuiteSettings& settings) {
  const Tomography tomo = tomography(spectrum);
  const EnergyShell hard_shell = energy_shell(spectrum, settings.hard);
  const EnergyShell mixed_shell = energy_shell(spectrum, settings.mixed);
  IntensitySuite suite;
  suite.hard = make_group(spectrum, "HC", window_members(tomo, settings.hard), hard_shell, settings.thresholds);
  const auto mixed = window_members(tomo, settings.mixed);
  suite.mixed = make_group(spectrum, "MC", mixed, mixed_shell, settings.thresholds);

  std::vector<std::size_t> kept;
  if (settings.mode == ExclusionMode::EigenstateLevel) {
    if (static_cast<std::size_t>(Q_island.size()) != spectrum.dimension())
      throw InvalidArgument("intensity_suite: eigenstate-level exclusion needs Q_island for every state");
    for (std::size_t nu : mixed)
      (Q_island(static_cast<Eigen::Index>(nu)) > settings.q_island_cut ? suite.excluded : kept).push_back(nu);
  } else {
    if (!islands) throw InvalidArgument("intensity_suite: Husimi-mass exclusion needs the island set");
    std::vector<double> mass(mixed.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t k = 0; k < mixed.size(); ++k)
      mass[k] = island_husimi_mass(spectrum, mixed[k], *islands, settings.grid);
    for (std::size_t k = 0; k < mixed.size(); ++k)
      (mass[k] > settings.husimi_mass_cut ? suite.excluded : kept).push_back(mixed[k]);
  }
  suite.mixed_without_island = make_group(spectrum, "MC-IL", std::move(kept), mixed_shell, settings.thresholds);
  return suite;
}

std::string to_string(ScalingClass cls) {
  switch (cls) {
    case ScalingClass::HardChaotic: return "hard-chaotic";
    case ScalingClass::MixedChaotic: return "mixed-chaotic";
    case ScalingClass::Island: return "island";
    case ScalingClass::SpSupported: return "SP-supported";
  }
  throw InvalidArgument("unknown scaling class");
}

ScalingClass scaling_class_from_string(const std::string& name) {
  for (auto c : {ScalingClass::HardChaotic, ScalingClass::MixedChaotic, ScalingClass::Island, ScalingClass::SpSupported})
    if (to_string(c) == name) return c;
  throw InvalidArgument("unknown scaling class '" + name + "'");
}

ScalingResult scaling_study(double v, double u, std::span<const int> N_list, ScalingClass cls,
                            const ScalingSettings& settings, const IslandUnion* islands,
                            const std::filesystem::path& cache_dir) {
  if (N_list.size() < 3) throw InvalidArgument("scaling_study: need at least 3 N values");
  if (cls == ScalingClass::Island && !islands) throw InvalidArgument("scaling_study: island class needs the island set");
  ScalingResult res;
  res.cls = cls;
  res.u = u;
  res.v = v;
  for (int N : N_list) {
    const ModelParams p{N, u, v, settings.omega};
    const Spectrum s = load_or_compute_spectrum(p, cache_dir);
    Tomography tomo = tomography(s);
    std::vector<std::size_t> members;
    switch (cls) {
      case ScalingClass::HardChaotic: members = window_members(tomo, settings.hard); break;
      case ScalingClass::MixedChaotic: members = window_members(tomo, settings.mixed); break;
      case ScalingClass::SpSupported: members = {tomo.sp_index}; break;
      case ScalingClass::Island: {
        attach_island_projection(tomo, island_projection(s, *islands));
        for (const auto& r : tomo.records)
          if (r.Q_island >= settings.thresholds.island_q &&
              r.M2 <= settings.thresholds.island_m2 * local_goe_m2(s, r.index, settings.thresholds.goe_window))
            members.push_back(r.index);
        break;
      }
    }
    if (members.empty()) {
      res.warnings.push_back("N=" + std::to_string(N) + ": no " + to_string(cls) + " states, point skipped");
      continue;
    }
    ScalingSample sample;
    sample.N = N;
    sample.states = members.size();
    for (std::size_t nu : members) {
      sample.M2 += tomo.records[nu].M2;
      sample.ratio += tomo.records[nu].ratio;
    }
    sample.M2 /= static_cast<double>(members.size());
    sample.ratio /= static_cast<double>(members.size());
    res.samples.push_back(sample);
  }
  if (res.samples.size() >= 3) {
    std::vector<ScalingPoint> pts;
    for (const auto& s : res.samples) pts.push_back({static_cast<double>(s.N), s.M2});
    res.fit = fit_scaling(pts);
  } else {
    res.warnings.push_back("fewer than 3 usable N values, no fit");
  }
  return res;
}

}  // namespace trimer
