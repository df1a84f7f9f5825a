// trimer: command-line front end for the three-site Bose-Hubbard experiments.
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>

#include "trimer/classical.hpp"
#include "trimer/coherent.hpp"
#include "trimer/config.hpp"
#include "trimer/errors.hpp"
#include "trimer/pipeline.hpp"
#include "trimer/spectrum_cache.hpp"
#include "trimer/stability.hpp"
#include "trimer/tables.hpp"

using namespace trimer;
namespace fs = std::filesystem;

namespace {

// "a:b:step" (inclusive, tolerant of rounding) or "x,y,z".
std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    double a = 0, b = 0, step = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &a, &b, &step) != 3 || !(step > 0) || b < a)
      throw InvalidArgument("bad grid '" + spec + "', expected start:stop:step");
    const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9));
    for (long k = 0; k <= n; ++k) out.push_back(a + static_cast<double>(k) * step);
    return out;
  }
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto comma = spec.find(',', start);
    const std::string tok = spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InvalidArgument("bad number '" + tok + "' in list '" + spec + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& spec) {
  std::vector<int> out;
  for (double x : parse_grid(spec)) {
    if (x != std::round(x)) throw InvalidArgument("expected integers in '" + spec + "'");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

EnergyWindow parse_window(const std::string& spec) {
  const auto g = parse_grid(spec);
  if (g.size() != 2 || !(g[0] < g[1])) throw InvalidArgument("bad energy window '" + spec + "', expected lo,hi");
  return {g[0], g[1]};
}

struct Globals {
  int N = 50;
  double u = 3.0;
  double v = 0.1;
  double omega = 1.0;
  std::string out_dir = "trimer-out";
  std::string config;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string cache_dir;

  ModelParams params() const {
    ModelParams p{N, u, v, omega};
    p.validate();
    return p;
  }
};

// Values given on the command line win, then the config file, then defaults.
class Settings {
 public:
  void bind(CLI::App* app, const std::string& section) {
    app_ = app;
    section_ = section;
  }
  void set_config(const nlohmann::json* config) { config_ = config; }

  template <typename T>
  void resolve(const std::string& flag, const std::string& key, T& value) {
    const bool given = app_ && app_->get_option_no_throw(flag) && app_->get_option(flag)->count() > 0;
    if (!given && config_) {
      const nlohmann::json* j = config_lookup(*config_, section_.empty() ? key : section_ + "." + key);
      if (j) {
        try {
          value = j->get<T>();
        } catch (const nlohmann::json::exception&) {
          throw InvalidArgument("config key '" + key + "' has the wrong type");
        }
      }
    }
  }

 private:
  CLI::App* app_ = nullptr;
  std::string section_;
  const nlohmann::json* config_ = nullptr;
};

struct Run {
  Manifest manifest;
  fs::path dir;

  Run(const std::string& command, const ModelParams& params, nlohmann::json settings, const Globals& g) {
    manifest.command = command;
    manifest.params = params;
    manifest.settings = std::move(settings);
    manifest.settings["seed"] = g.seed;
    dir = manifest.directory(g.out_dir);
    fs::create_directories(dir);
  }

  void table(const std::string& name, const CsvTable& t) {
    t.write(dir / name);
    manifest.outputs.push_back(name);
  }

  void finish() {
    manifest.write(dir);
    std::cout << dir.string() << '\n';
  }
};

SkeletonSettings skeleton_settings(std::size_t seeds, double T, std::uint64_t seed) {
  SkeletonSettings s;
  s.seeds_per_energy = seeds;
  s.T = T;
  s.seed = seed;
  return s;
}

nlohmann::json thresholds_json(const ClassificationThresholds& t) {
  return {{"island_q", t.island_q},
          {"island_m2", t.island_m2},
          {"chaotic_q", t.chaotic_q},
          {"chaotic_m2", t.chaotic_m2},
          {"goe_window", t.goe_window}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-site Bose-Hubbard chain: spectra, phase space and eigenstate statistics"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--N", g.N, "particle number")->capture_default_str();
  app.add_option("--u", g.u, "interaction u = NU/Omega")->capture_default_str();
  app.add_option("--v", g.v, "bias v = V/Omega")->capture_default_str();
  app.add_option("--omega", g.omega, "hopping Omega")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "root of output directories")->capture_default_str();
  app.add_option("--config", g.config, "TOML or JSON config file");
  app.add_option("--seed", g.seed, "seed for classical initial conditions")->capture_default_str();
  app.add_option("--threads", g.threads, "OpenMP threads (0 = runtime default)")->capture_default_str();
  app.add_option("--cache-dir", g.cache_dir, "eigenpair cache directory (empty disables)");

  std::map<std::string, std::function<void()>> actions;
  std::map<std::string, Settings> settings;
  auto sub = [&](const std::string& name, const std::string& help) {
    CLI::App* s = app.add_subcommand(name, help);
    settings[name].bind(s, name);
    return s;
  };

  // spectrum-map
  std::string map_u_grid = "0:4:0.25";
  std::size_t nbins = 100;
  {
    auto* s = sub("spectrum-map", "bin-averaged M2/D over rescaled energy for a u grid");
    s->add_option("--u-grid", map_u_grid, "u values, start:stop:step or a comma list")->capture_default_str();
    s->add_option("--nbins", nbins, "energy bins")->capture_default_str();
    actions["spectrum-map"] = [&] {
      auto& st = settings["spectrum-map"];
      st.resolve("--u-grid", "u_grid", map_u_grid);
      st.resolve("--nbins", "nbins", nbins);
      const auto grid = parse_grid(map_u_grid);
      Run run("spectrum-map", g.params(), {{"u_grid", grid}, {"nbins", nbins}}, g);
      const auto map = spectrum_map(g.params(), grid, nbins, g.cache_dir);
      run.manifest.results = {{"u_lower", map.u_lower}, {"u_chaos_onset", map.u_chaos_onset}, {"u_upper", map.u_upper}};
      run.table("spectrum_map.csv", spectrum_map_table(map));
      run.finish();
    };
  }

  // tomography
  std::size_t tomo_bins = 100;
  {
    auto* s = sub("tomography", "per-eigenstate table and moment maps");
    s->add_option("--nbins", tomo_bins, "energy bins of the moment maps")->capture_default_str();
    actions["tomography"] = [&] {
      settings["tomography"].resolve("--nbins", "nbins", tomo_bins);
      Run run("tomography", g.params(), {{"nbins", tomo_bins}}, g);
      const Spectrum s = load_or_compute_spectrum(g.params(), g.cache_dir);
      const Tomography t = tomography(s);
      run.manifest.results = {{"dimension", s.dimension()},
                              {"e_tilde_sp", t.e_tilde_sp},
                              {"sp_index", t.sp_index},
                              {"max_residual", max_residual(FockBasis(g.N), s)}};
      run.table("records.csv", records_table(t));
      run.table("moment_maps.csv", moment_map_table(moment_maps(t, tomo_bins)));
      run.finish();
    };
  }

  // sp-track
  std::string track_u_grid = "0.1:3.5:0.2428571428571";
  std::string track_N;
  {
    auto* s = sub("sp-track", "purity, dark-state overlap and M2/D of the SP-supported state");
    s->add_option("--u-grid", track_u_grid, "u values")->capture_default_str();
    s->add_option("--N-list", track_N, "particle numbers (default: --N)");
    actions["sp-track"] = [&] {
      auto& st = settings["sp-track"];
      st.resolve("--u-grid", "u_grid", track_u_grid);
      st.resolve("--N-list", "N_list", track_N);
      const auto grid = parse_grid(track_u_grid);
      const auto Ns = track_N.empty() ? std::vector<int>{g.N} : parse_int_list(track_N);
      Run run("sp-track", g.params(), {{"u_grid", grid}, {"N_list", Ns}}, g);
      run.table("sp_track.csv", sp_track_table(sp_track(g.v, grid, Ns, g.cache_dir, g.omega)));
      run.finish();
    };
  }

  // poincare
  double sec_e = 0.6, sec_T = 2000.0;
  std::size_t sec_seeds = 24;
  bool sec_both = false;
  {
    auto* s = sub("poincare", "section p1 = 1/2 at one classical energy, Lyapunov labels per trajectory");
    s->add_option("--e-tilde", sec_e, "classical rescaled energy")->capture_default_str();
    s->add_option("--seeds", sec_seeds, "trajectories")->capture_default_str();
    s->add_option("--T", sec_T, "integration time")->capture_default_str();
    s->add_flag("--both-directions", sec_both, "keep downward crossings too");
    actions["poincare"] = [&] {
      auto& st = settings["poincare"];
      st.resolve("--e-tilde", "e_tilde", sec_e);
      st.resolve("--seeds", "seeds", sec_seeds);
      st.resolve("--T", "T", sec_T);
      st.resolve("--both-directions", "both_directions", sec_both);
      ModelParams p = g.params();
      Run run("poincare", p, {{"e_tilde", sec_e}, {"seeds", sec_seeds}, {"T", sec_T}, {"both_directions", sec_both}}, g);
      const auto range = classical_range(p);
      const double h = range.restore(sec_e);
      const auto seeds = seed_on_shell(p, h, {sec_seeds, g.seed});
      TrajectoryOptions opt;
      opt.tolerances = {1e-10, 1e-10};
      opt.section = SectionSpec{0.5, sec_both ? CrossingDirection::Both : CrossingDirection::Upward};
      if (sec_T >= LyapunovOptions{}.window) opt.lyapunov = LyapunovOptions{};
      const auto section = poincare_section(seeds, p, h, sec_T, opt);
      std::size_t regular = 0, chaotic = 0;
      for (const auto& tr : section.trajectories) {
        regular += tr.label == Regularity::Regular;
        chaotic += tr.label == Regularity::Chaotic;
      }
      run.manifest.results = {{"h", h}, {"h_min", range.h_min}, {"h_max", range.h_max},
                              {"regular", regular}, {"chaotic", chaotic}, {"points", section.points.size()}};
      run.table("section.csv", section_table(section));
      run.finish();
    };
  }

  // husimi
  long hus_nu = -1;
  double hus_e = -1.0;
  std::string hus_norm = "raw";
  std::size_t hus_q2 = 64, hus_p2 = 32;
  {
    auto* s = sub("husimi", "Husimi distribution of one eigenstate on the p1 = 1/2 plane");
    s->add_option("--nu", hus_nu, "eigenstate index");
    s->add_option("--e-tilde", hus_e, "pick the eigenstate nearest this rescaled energy");
    s->add_option("--normalization", hus_norm, "raw or max-rescaled")->capture_default_str();
    s->add_option("--q2-points", hus_q2)->capture_default_str();
    s->add_option("--p2-points", hus_p2)->capture_default_str();
    actions["husimi"] = [&] {
      auto& st = settings["husimi"];
      st.resolve("--nu", "nu", hus_nu);
      st.resolve("--e-tilde", "e_tilde", hus_e);
      st.resolve("--normalization", "normalization", hus_norm);
      st.resolve("--q2-points", "q2_points", hus_q2);
      st.resolve("--p2-points", "p2_points", hus_p2);
      HusimiGridSpec spec{hus_q2, hus_p2, 0.5, HusimiNormalization::Raw};
      if (hus_norm == "max-rescaled") spec.normalization = HusimiNormalization::MaxRescaled;
      else if (hus_norm != "raw") throw InvalidArgument("normalization must be raw or max-rescaled");
      const Spectrum s = load_or_compute_spectrum(g.params(), g.cache_dir);
      std::size_t nu = 0;
      if (hus_nu >= 0) {
        nu = static_cast<std::size_t>(hus_nu);
      } else if (hus_e >= 0.0) {
        const auto et = rescaled_energies(s);
        for (std::size_t k = 1; k < et.size(); ++k)
          if (std::abs(et[k] - hus_e) < std::abs(et[nu] - hus_e)) nu = k;
      } else {
        nu = sp_overlap_all(s).supported_index;
      }
      if (nu >= s.dimension()) throw InvalidArgument("eigenstate index out of range");
      Run run("husimi", g.params(), {{"nu", nu}, {"normalization", hus_norm}, {"q2_points", hus_q2}, {"p2_points", hus_p2}}, g);
      const HusimiGrid grid = husimi_grid(s, nu, spec);
      run.manifest.results = {{"nu", nu},
                              {"E", grid.energy},
                              {"e_tilde", rescale_energies(s).rescale(grid.energy)},
                              {"normalization", to_string(grid.normalization)}};
      run.table("husimi.csv", husimi_table(grid));
      run.finish();
    };
  }

  // skeleton
  std::string skel_grid = "0:1:0.05";
  std::size_t skel_seeds = 24;
  double skel_T = 5000.0;
  {
    auto* s = sub("skeleton", "time-averaged n2/N of regular and chaotic trajectories across energy");
    s->add_option("--e-tilde-grid", skel_grid, "classical rescaled energies")->capture_default_str();
    s->add_option("--seeds-per-energy", skel_seeds)->capture_default_str();
    s->add_option("--T", skel_T, "integration time")->capture_default_str();
    actions["skeleton"] = [&] {
      auto& st = settings["skeleton"];
      st.resolve("--e-tilde-grid", "e_tilde_grid", skel_grid);
      st.resolve("--seeds-per-energy", "seeds_per_energy", skel_seeds);
      st.resolve("--T", "T", skel_T);
      const auto grid = parse_grid(skel_grid);
      Run run("skeleton", g.params(), {{"e_tilde_grid", grid}, {"seeds_per_energy", skel_seeds}, {"T", skel_T}}, g);
      const auto sk = build_skeleton(g.params(), grid, skeleton_settings(skel_seeds, skel_T, g.seed));
      run.manifest.results = {{"h_min", sk.range.h_min}, {"h_max", sk.range.h_max}};
      run.table("skeleton.csv", skeleton_table(sk));
      run.finish();
    };
  }

  // classify
  std::string cls_skel_grid = "0:1:0.05", cls_island_grid = "0.6:0.7:0.02", cls_shell = "0.55,0.65";
  std::size_t cls_seeds = 16, cls_island_seeds = 100;
  ClassificationThresholds thr;
  {
    auto* s = sub("classify", "label every eigenstate against the classical skeleton and island set");
    s->add_option("--skeleton-grid", cls_skel_grid)->capture_default_str();
    s->add_option("--skeleton-seeds", cls_seeds)->capture_default_str();
    s->add_option("--island-grid", cls_island_grid, "classical energies searched for regular tori")->capture_default_str();
    s->add_option("--island-seeds", cls_island_seeds, "section seeds per island energy")->capture_default_str();
    s->add_option("--shell", cls_shell, "rescaled energy window of the hybridization scatter")->capture_default_str();
    s->add_option("--island-q", thr.island_q)->capture_default_str();
    s->add_option("--island-m2", thr.island_m2, "fraction of the GOE value")->capture_default_str();
    s->add_option("--chaotic-q", thr.chaotic_q)->capture_default_str();
    s->add_option("--chaotic-m2", thr.chaotic_m2, "fraction of the GOE value")->capture_default_str();
    actions["classify"] = [&] {
      auto& st = settings["classify"];
      st.resolve("--skeleton-grid", "skeleton_grid", cls_skel_grid);
      st.resolve("--skeleton-seeds", "skeleton_seeds", cls_seeds);
      st.resolve("--island-grid", "island_grid", cls_island_grid);
      st.resolve("--island-seeds", "island_seeds", cls_island_seeds);
      st.resolve("--shell", "shell", cls_shell);
      st.resolve("--island-q", "island_q", thr.island_q);
      st.resolve("--island-m2", "island_m2", thr.island_m2);
      st.resolve("--chaotic-q", "chaotic_q", thr.chaotic_q);
      st.resolve("--chaotic-m2", "chaotic_m2", thr.chaotic_m2);
      const ModelParams p = g.params();
      const auto sgrid = parse_grid(cls_skel_grid);
      const auto igrid = parse_grid(cls_island_grid);
      const auto shell_window = parse_window(cls_shell);
      Run run("classify", p,
              {{"skeleton_grid", sgrid}, {"skeleton_seeds", cls_seeds}, {"island_grid", igrid},
               {"island_seeds", cls_island_seeds}, {"shell", {shell_window.lo, shell_window.hi}},
               {"thresholds", thresholds_json(thr)}},
              g);
      const Spectrum s = load_or_compute_spectrum(p, g.cache_dir);
      Tomography t = tomography(s);
      const ModelParams classical{1, p.u, p.v, p.omega};
      const auto sk = build_skeleton(classical, sgrid, skeleton_settings(cls_seeds, 5000.0, g.seed));
      TorusSelection sel;
      sel.search.seeds_per_energy = cls_island_seeds;
      sel.search.seed = g.seed;
      std::optional<IslandUnion> islands;
      try {
        islands = island_union(classical, igrid, sel);
        attach_island_projection(t, island_projection(s, *islands));
      } catch (const EmptySelection& e) {
        run.manifest.warnings.push_back(e.what());
      }
      classify_states(t, s, sk, thr);
      const auto c = count_labels(t);
      run.manifest.results = {{"hard-chaotic", c.hard_chaotic}, {"mixed-chaotic", c.mixed_chaotic},
                              {"island", c.island},             {"SP-supported", c.sp_supported},
                              {"hybrid", c.hybrid},             {"regular-edge", c.regular_edge},
                              {"island_tori", islands ? islands->tori() : 0}};
      run.table("records.csv", records_table(t));
      run.table("skeleton.csv", skeleton_table(sk));
      if (islands) {
        const EnergyShell shell = energy_shell(s, shell_window);
        const auto h = hybridization(t, shell, thr);
        run.manifest.results["shell"] = {{"states", h.states},
                                         {"goe_m2", h.goe_m2},
                                         {"island_corner", h.island_corner},
                                         {"chaotic_corner", h.chaotic_corner},
                                         {"neither", h.neither}};
        run.table("hybridization.csv", hybridization_table(t, shell));
      }
      run.finish();
    };
  }

  // intensity-stats
  std::string int_hc = "0.35,0.45", int_mc = "0.55,0.65", int_mode = "eigenstate", int_island_grid = "0.6:0.7:0.02";
  double int_qcut = 0.1, int_mass = 0.5;
  std::size_t int_island_seeds = 100;
  {
    auto* s = sub("intensity-stats", "pooled inverse-cumulative intensity curves for HC, MC and MC-IL");
    s->add_option("--hc-window", int_hc)->capture_default_str();
    s->add_option("--mc-window", int_mc)->capture_default_str();
    s->add_option("--exclusion", int_mode, "eigenstate or husimi-mass")->capture_default_str();
    s->add_option("--q-cut", int_qcut, "eigenstate-level Q_island cut")->capture_default_str();
    s->add_option("--mass-cut", int_mass, "Husimi-mass cut")->capture_default_str();
    s->add_option("--island-grid", int_island_grid)->capture_default_str();
    s->add_option("--island-seeds", int_island_seeds)->capture_default_str();
    actions["intensity-stats"] = [&] {
      auto& st = settings["intensity-stats"];
      st.resolve("--hc-window", "hc_window", int_hc);
      st.resolve("--mc-window", "mc_window", int_mc);
      st.resolve("--exclusion", "exclusion", int_mode);
      st.resolve("--q-cut", "q_cut", int_qcut);
      st.resolve("--mass-cut", "mass_cut", int_mass);
      st.resolve("--island-grid", "island_grid", int_island_grid);
      st.resolve("--island-seeds", "island_seeds", int_island_seeds);
      IntensitySuiteSettings is;
      is.hard = parse_window(int_hc);
      is.mixed = parse_window(int_mc);
      is.mode = exclusion_mode_from_string(int_mode);
      is.q_island_cut = int_qcut;
      is.husimi_mass_cut = int_mass;
      const ModelParams p = g.params();
      const auto igrid = parse_grid(int_island_grid);
      Run run("intensity-stats", p,
              {{"hc_window", {is.hard.lo, is.hard.hi}}, {"mc_window", {is.mixed.lo, is.mixed.hi}},
               {"exclusion", int_mode}, {"q_cut", int_qcut}, {"mass_cut", int_mass},
               {"island_grid", igrid}, {"island_seeds", int_island_seeds}},
              g);
      const Spectrum s = load_or_compute_spectrum(p, g.cache_dir);
      TorusSelection sel;
      sel.search.seeds_per_energy = int_island_seeds;
      sel.search.seed = g.seed;
      const auto islands = island_union({1, p.u, p.v, p.omega}, igrid, sel);
      const auto suite = intensity_suite(s, island_projection(s, islands), &islands, is);
      nlohmann::json res;
      for (const auto* grp : {&suite.hard, &suite.mixed, &suite.mixed_without_island}) {
        std::size_t k = 0;
        while (k + 1 < grp->curve.thresholds.size() && grp->curve.thresholds[k] < 10.0 - 1e-9) ++k;
        res[grp->name] = {{"states", grp->states.size()}, {"n_eff", grp->n_eff}, {"tail_at_10", grp->curve.empirical[k]}};
      }
      res["porter_thomas_at_10"] = porter_thomas_tail(10.0);
      res["excluded"] = suite.excluded.size();
      run.manifest.results = res;
      run.table("tails.csv", tail_table(suite));
      run.table("lineshapes.csv", lineshape_table(suite));
      run.finish();
    };
  }

  // scaling
  std::string sc_N = "30,40,50,60,70,80", sc_class = "all", sc_island_grid = "0.6:0.7:0.02";
  std::size_t sc_island_seeds = 100;
  {
    auto* s = sub("scaling", "ln M2 vs ln N slopes per state class");
    s->add_option("--N-list", sc_N)->capture_default_str();
    s->add_option("--class", sc_class, "hard-chaotic, mixed-chaotic, island, SP-supported or all")->capture_default_str();
    s->add_option("--island-grid", sc_island_grid)->capture_default_str();
    s->add_option("--island-seeds", sc_island_seeds)->capture_default_str();
    actions["scaling"] = [&] {
      auto& st = settings["scaling"];
      st.resolve("--N-list", "N_list", sc_N);
      st.resolve("--class", "class", sc_class);
      st.resolve("--island-grid", "island_grid", sc_island_grid);
      st.resolve("--island-seeds", "island_seeds", sc_island_seeds);
      const auto Ns = parse_int_list(sc_N);
      std::vector<ScalingClass> classes;
      if (sc_class == "all")
        classes = {ScalingClass::HardChaotic, ScalingClass::MixedChaotic, ScalingClass::Island, ScalingClass::SpSupported};
      else
        classes = {scaling_class_from_string(sc_class)};
      const auto igrid = parse_grid(sc_island_grid);
      Run run("scaling", g.params(),
              {{"N_list", Ns}, {"class", sc_class}, {"island_grid", igrid}, {"island_seeds", sc_island_seeds}}, g);
      std::optional<IslandUnion> islands;
      std::vector<ScalingResult> results;
      for (auto c : classes) {
        if (c == ScalingClass::Island && !islands) {
          TorusSelection sel;
          sel.search.seeds_per_energy = sc_island_seeds;
          sel.search.seed = g.seed;
          islands = island_union({1, g.u, g.v, g.omega}, igrid, sel);
        }
        ScalingSettings ss;
        ss.omega = g.omega;
        results.push_back(scaling_study(g.v, g.u, Ns, c, ss, islands ? &*islands : nullptr, g.cache_dir));
        const auto& r = results.back();
        run.manifest.results[to_string(c)] = r.fit ? nlohmann::json{{"slope", r.fit->slope}, {"residual", r.fit->residual}}
                                                   : nlohmann::json(nullptr);
        for (const auto& w : r.warnings) run.manifest.warnings.push_back(to_string(c) + ": " + w);
      }
      run.table("scaling.csv", scaling_table(results));
      run.finish();
    };
  }

  // stability
  std::string stab_grid = "0:4:0.01";
  {
    auto* s = sub("stability", "Bogoliubov frequencies of the dark-state SP along u");
    s->add_option("--u-grid", stab_grid)->capture_default_str();
    actions["stability"] = [&] {
      settings["stability"].resolve("--u-grid", "u_grid", stab_grid);
      const auto grid = parse_grid(stab_grid);
      Run run("stability", g.params(), {{"u_grid", grid}}, g);
      std::vector<StabilityReport> reports;
      for (double u : grid) reports.push_back(frequencies(u, g.v));
      try {
        const auto [lo, hi] = find_thresholds(g.v);
        run.manifest.results = {{"u_lower", lo}, {"u_upper", hi}};
      } catch (const DomainError& e) {
        run.manifest.warnings.push_back(e.what());
      }
      run.table("stability.csv", stability_table(reports));
      run.finish();
    };
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    nlohmann::json config;
    if (!g.config.empty()) {
      config = load_config(g.config);
      Settings root;
      root.bind(&app, "");
      root.set_config(&config);
      root.resolve("--N", "N", g.N);
      root.resolve("--u", "u", g.u);
      root.resolve("--v", "v", g.v);
      root.resolve("--omega", "omega", g.omega);
      root.resolve("--out-dir", "out_dir", g.out_dir);
      root.resolve("--seed", "seed", g.seed);
      root.resolve("--threads", "threads", g.threads);
      root.resolve("--cache-dir", "cache_dir", g.cache_dir);
      for (auto& [name, st] : settings) st.set_config(&config);
    }
    if (g.threads > 0) omp_set_num_threads(g.threads);
    for (auto* s : app.get_subcommands()) actions.at(s->get_name())();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
