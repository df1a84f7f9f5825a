#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "trimer/errors.hpp"
#include "trimer/pipeline.hpp"
#include "trimer/spectrum_cache.hpp"
#include "trimer/tables.hpp"

using namespace trimer;

namespace {

Spectrum spectrum_of(const ModelParams& p) { return diagonalize(build_hamiltonian(FockBasis(p.N), p)); }

// Every slice chaotic except those listed as regular.
Skeleton synthetic_skeleton(const ModelParams& p, std::vector<double> regular = {}) {
  Skeleton sk;
  sk.range = classical_range({1, p.u, p.v, p.omega});
  for (int i = 0; i <= 20; ++i) {
    SkeletonSlice s;
    s.e_tilde = i / 20.0;
    const bool reg = std::find(regular.begin(), regular.end(), s.e_tilde) != regular.end();
    if (!reg) s.chaotic_mean = 0.3;
    sk.slices.push_back(s);
  }
  return sk;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("tomography records match the underlying measures") {
  const ModelParams p{16, 3.0, 0.1, 1.0};
  const Spectrum s = spectrum_of(p);
  const Tomography t = tomography(s);
  REQUIRE(t.records.size() == s.dimension());
  const SpOverlap sp = sp_overlap_all(s);
  CHECK(t.sp_index == sp.supported_index);
  for (std::size_t nu = 0; nu < s.dimension(); nu += 7) {
    const auto& r = t.records[nu];
    const auto m = moments(intensities(s, nu));
    CHECK(r.index == nu);
    CHECK(r.M2 == m.M.at(2.0));
    CHECK(r.M10 == m.M.at(10.0));
    CHECK(r.Q_sp == sp.overlaps(static_cast<Eigen::Index>(nu)));
    CHECK(r.n2 == doctest::Approx(site2_expectation(s, nu)));
    CHECK(std::isnan(r.Q_island));
    CHECK_FALSE(r.label.has_value());
  }
  CHECK(t.e_tilde_sp == doctest::Approx(t.scale.rescale(16 * 3.0 / 4)));
  const auto maps = moment_maps(t, 10);
  CHECK(maps.m2.size() == 10);
  CHECK(maps.ratio[0].has_value());
  CHECK(window_mean(t, 0.0, 1.0, &EigenstateRecord::M2).has_value());
  CHECK_FALSE(window_mean(t, 2.0, 3.0, &EigenstateRecord::M2).has_value());
}

TEST_CASE("classification partitions the spectrum") {
  const ModelParams p{14, 3.0, 0.1, 1.0};
  const Spectrum s = spectrum_of(p);
  Tomography t = tomography(s);
  Eigen::VectorXd Q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.dimension()));
  Q(5) = 1.0;
  Q(60) = 0.7;
  attach_island_projection(t, Q);
  classify_states(t, s, synthetic_skeleton(p, {0.0, 0.05, 1.0}));
  const auto c = count_labels(t);
  CHECK(c.total() == s.dimension());
  CHECK(c.sp_supported == 1);
  CHECK(*t.records[t.sp_index].label == StateClass::SpSupported);
  CHECK(*t.records[0].label == StateClass::RegularEdge);
  for (const auto& r : t.records) {
    if (r.index == t.sp_index || *r.label == StateClass::RegularEdge) continue;
    if (*r.label == StateClass::HardChaotic) CHECK(r.E < p.N * p.u / 4);
    if (*r.label == StateClass::MixedChaotic) CHECK(r.E > p.N * p.u / 4);
    if (*r.label == StateClass::Island) CHECK(r.Q_island >= 0.5);
  }
  CHECK_THROWS_AS(attach_island_projection(t, Eigen::VectorXd::Zero(3)), InvalidArgument);

  Skeleton narrow;
  narrow.range = classical_range({1, p.u, p.v, p.omega});
  narrow.slices = {SkeletonSlice{0.5, 0.0, 0.3, 0.0, {}}};
  CHECK_THROWS_AS(classify_states(t, s, narrow), InvalidArgument);
  CHECK_THROWS_AS(classify_states(t, s, Skeleton{}), InvalidArgument);
}

TEST_CASE("integrable limit has no chaotic labels") {
  const ModelParams p{12, 0.0, 0.1, 1.0};
  const Spectrum s = spectrum_of(p);
  Tomography t = tomography(s);
  SkeletonSettings ss;
  ss.seeds_per_energy = 4;
  ss.T = 2500.0;
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
  const Skeleton sk = build_skeleton({1, 0.0, 0.1, 1.0}, grid, ss);
  classify_states(t, s, sk);
  const auto c = count_labels(t);
  CHECK(c.hard_chaotic == 0);
  CHECK(c.mixed_chaotic == 0);
  CHECK(c.hybrid == 0);
  CHECK(c.island == 0);
  CHECK(c.regular_edge + c.sp_supported == s.dimension());
}

TEST_CASE("label names roundtrip") {
  for (auto c : {StateClass::HardChaotic, StateClass::MixedChaotic, StateClass::Island, StateClass::SpSupported,
                 StateClass::Hybrid, StateClass::RegularEdge})
    CHECK(state_class_from_string(to_string(c)) == c);
  CHECK(to_string(StateClass::SpSupported) == "SP-supported");
  CHECK_THROWS_AS(state_class_from_string("chaos"), InvalidArgument);
  CHECK(exclusion_mode_from_string(to_string(ExclusionMode::HusimiMass)) == ExclusionMode::HusimiMass);
  CHECK_THROWS_AS(exclusion_mode_from_string("all"), InvalidArgument);
  CHECK(scaling_class_from_string("island") == ScalingClass::Island);
}

TEST_CASE("hybridization corners") {
  const ModelParams p{20, 3.0, 0.1, 1.0};
  const Spectrum s = spectrum_of(p);
  Tomography t = tomography(s);
  const EnergyShell shell = energy_shell(s, EnergyWindow{0.55, 0.65});
  CHECK_THROWS_AS(hybridization(t, shell), InvalidArgument);
  Eigen::VectorXd Q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.dimension()));
  attach_island_projection(t, Q);
  const auto h = hybridization(t, shell);
  CHECK(h.states == shell.members.size());
  CHECK(h.island_corner == 0);
  CHECK(h.island_corner + h.chaotic_corner + h.neither == h.states);
  CHECK(h.goe_m2 == doctest::Approx(shell.n_eff / 3));
}

TEST_CASE("intensity suite groups and exclusion") {
  const ModelParams p{24, 3.0, 0.1, 1.0};
  const Spectrum s = spectrum_of(p);
  const Tomography t = tomography(s);
  Eigen::VectorXd Q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.dimension()));
  std::size_t flagged = 0;
  for (const auto& r : t.records)
    if (r.e_tilde >= 0.55 && r.e_tilde <= 0.65 && (r.index % 3 == 0)) {
      Q(static_cast<Eigen::Index>(r.index)) = 0.5;
      ++flagged;
    }
  const auto suite = intensity_suite(s, Q, nullptr);
  CHECK(suite.excluded.size() == flagged);
  CHECK(suite.mixed.states.size() == suite.mixed_without_island.states.size() + flagged);
  for (std::size_t nu : suite.hard.states) CHECK(t.records[nu].e_tilde >= 0.35);
  CHECK(suite.hard.curve.empirical.front() <= 1.0);
  CHECK(suite.hard.lineshape.front() == doctest::Approx(1.0));
  const auto& e = suite.hard.curve.empirical;
  CHECK(std::is_sorted(e.rbegin(), e.rend()));

  CHECK_THROWS_AS(intensity_suite(s, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(s.dimension())), nullptr),
                  EmptySelection);
  CHECK_THROWS_AS(intensity_suite(s, Eigen::VectorXd(), nullptr), InvalidArgument);
  IntensitySuiteSettings husimi;
  husimi.mode = ExclusionMode::HusimiMass;
  CHECK_THROWS_AS(intensity_suite(s, Q, nullptr, husimi), InvalidArgument);
}

TEST_CASE("island projection and Husimi mass") {
  const ModelParams p{20, 3.0, 0.1, 1.0};
  const Spectrum s = spectrum_of(p);
  IslandUnion islands;
  islands.params = {1, 3.0, 0.1, 1.0};
  IslandSet set;
  const PhasePoint x{2.0, 2.5, 0.5, 0.33};
  set.points = {x};
  set.spinors = {phasepoint_to_spinor(x)};
  set.tori = 1;
  islands.sets = {set};
  islands.e_tilde_grid = {0.6};
  const auto Q = island_projection(s, islands);
  CHECK(Q.maxCoeff() == doctest::Approx(1.0));
  CHECK(Q.minCoeff() >= 0.0);
  const CoherentState cs = coherent_state(x, p.N);
  Eigen::Index best = 0;
  husimi_all(s, cs).maxCoeff(&best);
  CHECK(Q(best) == doctest::Approx(1.0));
  const double m = island_husimi_mass(s, static_cast<std::size_t>(best), islands, {16, 8});
  CHECK(m > 0.0);
  CHECK(m <= 1.0);
  CHECK(islands.tori() == 1);
  CHECK(islands.spinors().size() == 1);
}

TEST_CASE("SP tracking and scaling at small N") {
  const std::vector<double> us{0.1};
  const std::vector<int> Ns{20};
  const auto track = sp_track(0.1, us, Ns);
  REQUIRE(track.size() == 1);
  CHECK(track[0].purity >= 0.95);
  CHECK(track[0].Q_sp >= 0.9);

  const std::vector<int> few{10, 20};
  CHECK_THROWS_AS(scaling_study(0.1, 0.1, few, ScalingClass::SpSupported), InvalidArgument);
  const std::vector<int> three{16, 24, 32};
  CHECK_THROWS_AS(scaling_study(0.1, 3.0, three, ScalingClass::Island), InvalidArgument);
  const auto sp = scaling_study(0.1, 0.1, three, ScalingClass::SpSupported);
  REQUIRE(sp.fit.has_value());
  CHECK(sp.fit->slope == doctest::Approx(0.5).epsilon(0.2));
  for (const auto& x : sp.samples) CHECK(x.ratio == doctest::Approx(0.78).epsilon(0.03));
}

TEST_CASE("spectrum map columns") {
  const std::vector<double> us{0.0, 3.0};
  const auto map = spectrum_map({10, 0.0, 0.1, 1.0}, us, 10);
  REQUIRE(map.columns.size() == 2);
  CHECK(map.columns[1].e_tilde_sp > 0.0);
  CHECK(map.u_lower == doctest::Approx(0.2));
  CHECK(map.u_upper == doctest::Approx(3.2).epsilon(0.01));
  CHECK_THROWS_AS(spectrum_map({10, 0.0, 0.1, 1.0}, std::vector<double>{}, 10), InvalidArgument);
  const std::vector<double> bad{NAN};
  CHECK_THROWS_AS(spectrum_map({10, 0.0, 0.1, 1.0}, bad, 10), InvalidArgument);
}

TEST_CASE("tables and manifests are deterministic") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_number(std::nan("")) == "");
  CHECK(format_number(std::optional<double>{}) == "");
  CsvTable bad{{"a", "b"}, {}};
  CHECK_THROWS_AS(bad.add({"1"}), InvalidArgument);

  const auto dir = std::filesystem::temp_directory_path() / "trimer_table_test";
  std::filesystem::remove_all(dir);
  const ModelParams p{12, 3.0, 0.1, 1.0};
  CsvTable quoted{{"x", "note"}, {}};
  quoted.add({"1", "a,b"});
  quoted.write(dir / "q.csv");
  CHECK(slurp(dir / "q.csv") == "x,note\n1,\"a,b\"\n");
  records_table(tomography(spectrum_of(p))).write(dir / "a.csv");
  records_table(tomography(spectrum_of(p))).write(dir / "b.csv");
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));

  Manifest m;
  m.command = "tomography";
  m.params = p;
  m.settings = {{"nbins", 100}};
  Manifest m2 = m;
  m2.outputs = {"records.csv"};
  m2.results = {{"x", 1}};
  CHECK(m.hash() == m2.hash());
  m2.settings["nbins"] = 50;
  CHECK(m.hash() != m2.hash());
  m.write(dir / "run");
  const auto j = nlohmann::json::parse(slurp(dir / "run" / "manifest.json"));
  CHECK(j["hash"] == m.hash());
  CHECK(j["params"]["N"] == 12);
  CHECK(j["version"] == kVersion);
  CHECK(m.directory("out") == std::filesystem::path("out") / ("tomography-" + m.hash()));
  std::filesystem::remove_all(dir);
}
