#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "trimer/spectral.hpp"

namespace trimer {

/// Fock-space intensities X_n = |<n|E_nu>|^2 of one eigenstate.
struct IntensityProfile {
  std::size_t index = 0;
  Eigen::VectorXd X;
};

IntensityProfile intensities(const Spectrum& spectrum, std::size_t nu);
/// Profile of an arbitrary normalized real or complex vector.
IntensityProfile intensities_of(const Eigen::Ref<const Eigen::VectorXcd>& state);

/// Generalized participation numbers M_q = R_q^{-1/(q-1)} with R_q = sum_n X_n^q.
struct MomentSet {
  std::map<double, double> R;
  std::map<double, double> M;
  /// Shannon entropy -sum X ln X and M_1 = exp(entropy).
  double entropy = 0.0;
  double M1 = 0.0;

  double ratio(double q_num, double q_den) const { return M.at(q_num) / M.at(q_den); }
};

/// q = 2 and q = 10 are always included. Every q must exceed 1.
MomentSet moments(const IntensityProfile& profile, std::span<const double> q_values = {});

/// Single moment M_q for q > 1.
double participation(const Eigen::Ref<const Eigen::VectorXd>& X, double q);

double shannon_m1(const IntensityProfile& profile);

/// Porter-Thomas expectation [2^q Gamma(q + 1/2) / sqrt(pi)]^{-1/(q-1)} N_eff.
double goe_baseline(double q, double n_eff);

/// Prob(x > threshold) for chi-squared intensities with one degree of freedom.
double porter_thomas_tail(double x);

/// Intensities sorted descending and divided by their maximum. Entries below
/// `floor` times the maximum are dropped.
std::vector<double> sorted_lineshape(const IntensityProfile& profile, double floor = 1e-14);

/// Fitted exponent a of intensity ~ rank^-a over the central decade of ranks
/// (log10 rank within +-1/2 of the midpoint of log10 [1, length]).
double lineshape_exponent(std::span<const double> lineshape);

/// Rescaled intensities x = N_eff X for a shell.
struct RescaledIntensities {
  std::vector<double> x;
  double n_eff = 0.0;
  std::size_t shell_states = 0;

  double mean() const;
};

RescaledIntensities rescale_intensities(const Spectrum& spectrum, const EnergyShell& shell,
                                        std::span<const std::size_t> states);

/// Empirical Prob(x > threshold) on a fixed threshold grid.
struct InverseCumulative {
  std::vector<double> thresholds;
  std::vector<double> empirical;
  std::vector<double> porter_thomas;
  std::size_t samples = 0;
};

/// 61 logarithmic thresholds (60 bins) spanning [1e-3, 1e2].
std::vector<double> default_tail_thresholds();

InverseCumulative inverse_cumulative(std::span<const double> x, std::span<const double> thresholds);
InverseCumulative inverse_cumulative(std::span<const double> x);

/// Pools N_eff-rescaled intensities of `states` (default: all shell members).
InverseCumulative inverse_cumulative(const Spectrum& spectrum, const EnergyShell& shell,
                                     std::span<const std::size_t> states = {});

/// Fraction of samples strictly above x.
double empirical_tail(std::span<const double> samples, double x);

/// Ordinary least squares of ln M2 against ln N.
struct ScalingFit {
  std::vector<double> log_N;
  std::vector<double> log_M2;
  double slope = 0.0;
  double intercept = 0.0;
  /// Root-mean-square residual of the fit in log space.
  double residual = 0.0;
};

struct ScalingPoint {
  double N = 0.0;
  double M2 = 0.0;
};

ScalingFit fit_scaling(std::span<const ScalingPoint> points);

}  // namespace trimer
