#include "trimer/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "trimer/errors.hpp"

namespace trimer {

IntensityProfile intensities(const Spectrum& spectrum, std::size_t nu) {
  const auto v = spectrum.eigenvector(nu);
  IntensityProfile p{nu, v.cwiseAbs2()};
  p.X /= p.X.sum();
  return p;
}

IntensityProfile intensities_of(const Eigen::Ref<const Eigen::VectorXcd>& state) {
  IntensityProfile p{0, state.cwiseAbs2()};
  const double norm = p.X.sum();
  if (!(norm > 0.0)) throw InvalidArgument("intensities_of: zero vector");
  p.X /= norm;
  return p;
}

double participation(const Eigen::Ref<const Eigen::VectorXd>& X, double q) {
  if (!(q > 1.0))
    throw InvalidArgument("participation: q must exceed 1 (use shannon_m1 for q = 1), got " + std::to_string(q));
  double R = 0.0;
  if (q == 2.0) {
    R = X.squaredNorm();
  } else {
    for (Eigen::Index i = 0; i < X.size(); ++i)
      if (X(i) > 0.0) R += std::pow(X(i), q);
  }
  return std::pow(R, -1.0 / (q - 1.0));
}

MomentSet moments(const IntensityProfile& profile, std::span<const double> q_values) {
  std::vector<double> qs{2.0, 10.0};
  qs.insert(qs.end(), q_values.begin(), q_values.end());
  MomentSet m;
  for (double q : qs) {
    const double Mq = participation(profile.X, q);
    m.M[q] = Mq;
    m.R[q] = std::pow(Mq, -(q - 1.0));
  }
  m.M1 = shannon_m1(profile);
  m.entropy = std::log(m.M1);
  return m;
}

double shannon_m1(const IntensityProfile& profile) {
  double entropy = 0.0;
  for (Eigen::Index i = 0; i < profile.X.size(); ++i) {
    const double x = profile.X(i);
    if (x > 0.0) entropy -= x * std::log(x);
  }
  return std::exp(entropy);
}

double goe_baseline(double q, double n_eff) {
  if (!(q > 1.0)) throw InvalidArgument("goe_baseline: q must exceed 1");
  if (!(n_eff > 0.0)) throw InvalidArgument("goe_baseline: N_eff must be positive");
  // ln of 2^q Gamma(q + 1/2) / sqrt(pi), the q-th moment of a chi-squared(1) variable
  const double log_moment = q * std::numbers::ln2 + std::lgamma(q + 0.5) - 0.5 * std::log(std::numbers::pi);
  return std::exp(-log_moment / (q - 1.0)) * n_eff;
}

double porter_thomas_tail(double x) {
  if (x < 0.0) throw InvalidArgument("porter_thomas_tail: x must be non-negative");
  return std::erfc(std::sqrt(0.5 * x));
}

std::vector<double> sorted_lineshape(const IntensityProfile& profile, double floor) {
  if (profile.X.size() == 0) throw InvalidArgument("sorted_lineshape: empty profile");
  const double peak = profile.X.maxCoeff();
  if (!(peak > 0.0)) throw InvalidArgument("sorted_lineshape: all-zero profile");
  std::vector<double> shape;
  shape.reserve(static_cast<std::size_t>(profile.X.size()));
  for (Eigen::Index i = 0; i < profile.X.size(); ++i)
    if (profile.X(i) >= floor * peak) shape.push_back(profile.X(i) / peak);
  std::sort(shape.begin(), shape.end(), std::greater<>());
  return shape;
}

double lineshape_exponent(std::span<const double> lineshape) {
  if (lineshape.size() < 10) throw InvalidArgument("lineshape_exponent: need at least 10 ranks");
  const double mid = 0.5 * std::log10(static_cast<double>(lineshape.size()));
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t r = 1; r <= lineshape.size(); ++r) {
    const double lr = std::log10(static_cast<double>(r));
    if (std::abs(lr - mid) > 0.5 || !(lineshape[r - 1] > 0.0)) continue;
    const double ly = std::log10(lineshape[r - 1]);
    sx += lr;
    sy += ly;
    sxx += lr * lr;
    sxy += lr * ly;
    ++n;
  }
  if (n < 3) throw InvalidArgument("lineshape_exponent: central decade holds fewer than 3 ranks");
  const double dn = static_cast<double>(n);
  return -(dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

double RescaledIntensities::mean() const {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

RescaledIntensities rescale_intensities(const Spectrum& spectrum, const EnergyShell& shell,
                                        std::span<const std::size_t> states) {
  std::span<const std::size_t> pool = states.empty() ? std::span<const std::size_t>(shell.members) : states;
  if (pool.empty()) throw EmptySelection("rescale_intensities: empty state pool");
  RescaledIntensities out;
  out.n_eff = shell.n_eff;
  out.shell_states = pool.size();
  out.x.reserve(pool.size() * spectrum.dimension());
  for (std::size_t nu : pool) {
    const auto v = spectrum.eigenvector(nu);
    for (Eigen::Index i = 0; i < v.size(); ++i) out.x.push_back(shell.n_eff * v(i) * v(i));
  }
  return out;
}

std::vector<double> default_tail_thresholds() {
  constexpr int kBins = 60;
  std::vector<double> t(kBins + 1);
  for (int k = 0; k <= kBins; ++k) t[static_cast<std::size_t>(k)] = std::pow(10.0, -3.0 + 5.0 * k / kBins);
  return t;
}

double empirical_tail(std::span<const double> samples, double x) {
  if (samples.empty()) throw EmptySelection("empirical_tail: empty sample pool");
  const auto above = std::count_if(samples.begin(), samples.end(), [x](double s) { return s > x; });
  return static_cast<double>(above) / static_cast<double>(samples.size());
}

InverseCumulative inverse_cumulative(std::span<const double> x, std::span<const double> thresholds) {
  if (x.empty()) throw EmptySelection("inverse_cumulative: empty intensity pool");
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  InverseCumulative out;
  out.samples = sorted.size();
  out.thresholds.assign(thresholds.begin(), thresholds.end());
  for (double t : thresholds) {
    const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t);
    out.empirical.push_back(static_cast<double>(above) / static_cast<double>(sorted.size()));
    out.porter_thomas.push_back(porter_thomas_tail(t));
  }
  return out;
}

InverseCumulative inverse_cumulative(std::span<const double> x) {
  const auto thresholds = default_tail_thresholds();
  return inverse_cumulative(x, thresholds);
}

InverseCumulative inverse_cumulative(const Spectrum& spectrum, const EnergyShell& shell,
                                     std::span<const std::size_t> states) {
  const RescaledIntensities pooled = rescale_intensities(spectrum, shell, states);
  return inverse_cumulative(pooled.x);
}

ScalingFit fit_scaling(std::span<const ScalingPoint> points) {
  if (points.size() < 3) throw InvalidArgument("fit_scaling: need at least 3 points");
  ScalingFit fit;
  for (const auto& p : points) {
    if (!(p.N > 0.0) || !(p.M2 > 0.0)) throw InvalidArgument("fit_scaling: N and M2 must be positive");
    fit.log_N.push_back(std::log(p.N));
    fit.log_M2.push_back(std::log(p.M2));
  }
  const double n = static_cast<double>(points.size());
  const double mx = std::accumulate(fit.log_N.begin(), fit.log_N.end(), 0.0) / n;
  const double my = std::accumulate(fit.log_M2.begin(), fit.log_M2.end(), 0.0) / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    sxx += (fit.log_N[i] - mx) * (fit.log_N[i] - mx);
    sxy += (fit.log_N[i] - mx) * (fit.log_M2[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("fit_scaling: all N values coincide");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double r = fit.log_M2[i] - (fit.intercept + fit.slope * fit.log_N[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

}  // namespace trimer
