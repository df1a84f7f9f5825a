#include "trimer/tables.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <boost/version.hpp>
#include <gsl/gsl_version.h>

#include "trimer/errors.hpp"
#include "trimer/spectrum_cache.hpp"

namespace trimer {

namespace {

std::string num(double x) { return format_number(x); }
std::string num(std::size_t x) { return std::to_string(x); }
std::string num(int x) { return std::to_string(x); }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

double bin_center(std::size_t b, std::size_t nbins) { return (static_cast<double>(b) + 0.5) / static_cast<double>(nbins); }

// FNV-1a, 64 bit.
std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string format_number(const std::optional<double>& x) { return x ? format_number(*x) : std::string(); }

void CsvTable::add(std::vector<std::string> row) {
  if (row.size() != header.size()) throw InvalidArgument("CsvTable: row width does not match header");
  rows.push_back(std::move(row));
}

void CsvTable::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_escape(cells[i]);
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

CsvTable spectrum_map_table(const SpectrumMap& map) {
  CsvTable t{{"u", "bin", "e_tilde_center", "M2_over_D", "e_tilde_sp", "u_lower", "u_chaos_onset", "u_upper"}, {}};
  for (const auto& c : map.columns)
    for (std::size_t b = 0; b < c.participation.size(); ++b)
      t.add({num(c.u), num(b), num(bin_center(b, map.nbins)), format_number(c.participation[b]), num(c.e_tilde_sp),
             num(map.u_lower), num(map.u_chaos_onset), num(map.u_upper)});
  return t;
}

CsvTable records_table(const Tomography& tomo) {
  CsvTable t{{"nu", "E", "e_tilde", "n2_over_N", "M2", "M10", "M10_over_M2", "Q_sp", "Q_island", "label"}, {}};
  for (const auto& r : tomo.records)
    t.add({num(r.index), num(r.E), num(r.e_tilde), num(r.n2), num(r.M2), num(r.M10), num(r.ratio), num(r.Q_sp),
           num(r.Q_island), r.label ? to_string(*r.label) : std::string()});
  return t;
}

CsvTable moment_map_table(const MomentMaps& maps) {
  CsvTable t{{"bin", "e_tilde_center", "M2_over_D", "M10_over_D", "M10_over_M2"}, {}};
  for (std::size_t b = 0; b < maps.nbins; ++b)
    t.add({num(b), num(bin_center(b, maps.nbins)), format_number(maps.m2[b]), format_number(maps.m10[b]),
           format_number(maps.ratio[b])});
  return t;
}

CsvTable sp_track_table(std::span<const SpTrackPoint> points) {
  CsvTable t{{"N", "u", "nu", "e_tilde", "purity", "Q_sp", "M2_over_D"}, {}};
  for (const auto& p : points)
    t.add({num(p.N), num(p.u), num(p.index), num(p.e_tilde), num(p.purity), num(p.Q_sp), num(p.M2_fraction)});
  return t;
}

CsvTable section_table(const SectionPointSet& section) {
  CsvTable t{{"trajectory", "t", "q1", "q2", "p1", "p2", "direction", "mean_p1", "label", "x", "y", "z"}, {}};
  for (const auto& p : section.points) {
    const auto xyz = toroidal_embed({p.q1, p.q2, p.p1, p.p2});
    const auto& tr = section.trajectories.at(p.trajectory);
    t.add({num(p.trajectory), num(p.t), num(p.q1), num(p.q2), num(p.p1), num(p.p2), num(p.direction), num(p.mean_p1),
           to_string(tr.label), num(xyz[0]), num(xyz[1]), num(xyz[2])});
  }
  return t;
}

CsvTable husimi_table(const HusimiGrid& grid) {
  CsvTable t{{"q2", "p2", "q1", "Q", "on_shell"}, {}};
  for (const auto& s : grid.samples) t.add({num(s.q2), num(s.p2), num(s.q1), num(s.Q), s.on_shell ? "1" : "0"});
  return t;
}

CsvTable skeleton_table(const Skeleton& skeleton) {
  CsvTable t{{"e_tilde", "h", "mean_n2_over_N", "label", "island", "lyapunov", "q1", "q2", "p1", "p2"}, {}};
  for (const auto& s : skeleton.slices)
    for (const auto& p : s.points)
      t.add({num(p.e_tilde), num(p.h), num(p.mean_n2), to_string(p.label), p.island ? "1" : "0",
             num(p.lyapunov_exponent), num(p.seed.q1), num(p.seed.q2), num(p.seed.p1), num(p.seed.p2)});
  return t;
}

CsvTable hybridization_table(const Tomography& tomo, const EnergyShell& shell) {
  CsvTable t{{"nu", "e_tilde", "M2", "Q_island", "M10_over_M2", "label"}, {}};
  for (std::size_t nu : shell.members) {
    const auto& r = tomo.records.at(nu);
    t.add({num(nu), num(r.e_tilde), num(r.M2), num(r.Q_island), num(r.ratio), r.label ? to_string(*r.label) : ""});
  }
  return t;
}

CsvTable tail_table(const IntensitySuite& suite) {
  CsvTable t{{"group", "threshold", "empirical", "porter_thomas", "samples", "states"}, {}};
  for (const auto* g : {&suite.hard, &suite.mixed, &suite.mixed_without_island})
    for (std::size_t k = 0; k < g->curve.thresholds.size(); ++k)
      t.add({g->name, num(g->curve.thresholds[k]), num(g->curve.empirical[k]), num(g->curve.porter_thomas[k]),
             num(g->curve.samples), num(g->states.size())});
  return t;
}

CsvTable lineshape_table(const IntensitySuite& suite) {
  CsvTable t{{"group", "rank", "intensity_over_max"}, {}};
  for (const auto* g : {&suite.hard, &suite.mixed, &suite.mixed_without_island})
    for (std::size_t k = 0; k < g->lineshape.size(); ++k) t.add({g->name, num(k + 1), num(g->lineshape[k])});
  return t;
}

CsvTable scaling_table(std::span<const ScalingResult> results) {
  CsvTable t{{"class", "u", "v", "N", "states", "mean_M2", "mean_M10_over_M2", "slope", "intercept"}, {}};
  for (const auto& r : results)
    for (const auto& s : r.samples)
      t.add({to_string(r.cls), num(r.u), num(r.v), num(s.N), num(s.states), num(s.M2), num(s.ratio),
             r.fit ? num(r.fit->slope) : "", r.fit ? num(r.fit->intercept) : ""});
  return t;
}

CsvTable stability_table(std::span<const StabilityReport> reports) {
  CsvTable t{{"u", "v", "re_omega_plus", "im_omega_plus", "re_omega_minus", "im_omega_minus", "verdict"}, {}};
  for (const auto& r : reports)
    t.add({num(r.u), num(r.v), num(r.omega_plus.real()), num(r.omega_plus.imag()), num(r.omega_minus.real()),
           num(r.omega_minus.imag()), to_string(r.verdict)});
  return t;
}

nlohmann::json to_json(const ModelParams& params) {
  return {{"N", params.N}, {"u", params.u}, {"v", params.v}, {"omega", params.omega}};
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json j;
  j["tool"] = "trimer";
  j["version"] = kVersion;
  j["command"] = command;
  j["params"] = trimer::to_json(params);
  j["settings"] = settings;
  j["libraries"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)},
                    {"gsl", GSL_VERSION},
                    {"boost", BOOST_LIB_VERSION},
                    {"cache_format", kCacheFormatVersion}};
  return j;
}

std::string Manifest::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json().dump())));
  return buf;
}

std::filesystem::path Manifest::directory(const std::filesystem::path& out_root) const {
  return out_root / (command + "-" + hash());
}

void Manifest::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json j = to_json();
  j["hash"] = hash();
  j["outputs"] = outputs;
  j["warnings"] = warnings;
  j["results"] = results;
  std::ofstream out(dir / "manifest.json");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + (dir / "manifest.json").string());
}

}  // namespace trimer
