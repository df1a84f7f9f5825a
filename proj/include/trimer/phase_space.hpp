#pragma once

#include <array>
#include <complex>

namespace trimer {

using Complex = std::complex<double>;
/// Normalized single-particle amplitudes (alpha_1, alpha_2, alpha_3).
using Spinor = std::array<Complex, 3>;

/// Reduced canonical coordinates: q1 = phi1 - phi3, q2 = phi2 - phi3, p_i = n_i / N.
struct PhasePoint {
  double q1 = 0.0;
  double q2 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;

  double p3() const { return 1.0 - p1 - p2; }
};

/// Throws DomainError unless p1, p2 >= 0 and p1 + p2 <= 1 (within `slack`).
void check_simplex(const PhasePoint& point, double slack = 1e-12);

/// (sqrt(p1) e^{i q1}, sqrt(p2) e^{i q2}, sqrt(p3)), gauge alpha_3 >= 0.
Spinor phasepoint_to_spinor(const PhasePoint& point);

/// Inverse map. Angles are taken relative to alpha_3; undefined phases
/// (zero-modulus components) come back as 0.
PhasePoint spinor_to_phasepoint(const Spinor& alpha);

/// sqrt(sum |alpha_i|^2)
double spinor_norm(const Spinor& alpha);

/// |<a|b>|^2 for normalized spinors; independent of either global phase.
double spinor_fidelity(const Spinor& a, const Spinor& b);

/// Dark single-particle orbital (1, 0, -1) / sqrt(2) carrying the central stationary point.
Spinor dark_spinor();

/// Wrap an angle to [0, 2 pi).
double wrap_angle(double angle);

}  // namespace trimer
