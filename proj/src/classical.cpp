#include "trimer/classical.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <random>

#include <boost/math/tools/roots.hpp>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "trimer/errors.hpp"

namespace trimer {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFaceTolerance = 1e-12;

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

double hcl(const PhasePoint& point, const ModelParams& params) {
  check_simplex(point);
  const double p1 = clamp01(point.p1);
  const double p2 = clamp01(point.p2);
  const double p3 = std::max(1.0 - p1 - p2, 0.0);
  const double w = params.omega;
  return params.v * w * p2 + 0.5 * params.u * w * (p1 * p1 + p2 * p2 + p3 * p3) -
         w * (std::sqrt(p1 * p2) * std::cos(point.q1 - point.q2) + std::sqrt(p2 * p3) * std::cos(point.q2));
}

PhaseRates eom(const PhasePoint& point, const ModelParams& params) {
  check_simplex(point);
  const double p1 = clamp01(point.p1);
  const double p2 = clamp01(point.p2);
  const double p3 = std::max(1.0 - p1 - p2, 0.0);
  const double w = params.omega;
  const double c12 = std::cos(point.q1 - point.q2);
  const double s12 = std::sin(point.q1 - point.q2);
  const double c2 = std::cos(point.q2);
  const double s2 = std::sin(point.q2);
  const double r1 = std::sqrt(p1), r2 = std::sqrt(p2), r3 = std::sqrt(p3);

  // numerator / sqrt(p) with the face convention described in the header
  auto ratio = [](double numerator, double root, const char* face) {
    if (root > 0.0) return numerator / root;
    if (std::abs(numerator) <= kFaceTolerance) return 0.0;
    throw GradientSingularity(std::string("Hamilton's equations diverge on the face ") + face);
  };

  PhaseRates r;
  r.p1_dot = -w * r1 * r2 * s12;
  r.p2_dot = -w * (-r1 * r2 * s12 + r2 * r3 * s2);
  // dh/dp1 = u(p1 - p3) - (1/2) sqrt(p2/p1) cos(q1-q2) + (1/2) sqrt(p2/p3) cos q2
  r.q1_dot = params.u * w * (p1 - p3) - 0.5 * w * ratio(r2 * c12, r1, "p1 = 0") + 0.5 * w * ratio(r2 * c2, r3, "p3 = 0");
  // dh/dp2 = v + u(p2 - p3) - (1/2)(sqrt(p1) cos(q1-q2) + sqrt(p3) cos q2)/sqrt(p2) + (1/2) sqrt(p2/p3) cos q2
  r.q2_dot = params.v * w + params.u * w * (p2 - p3) - 0.5 * w * ratio(r1 * c12 + r3 * c2, r2, "p2 = 0") +
             0.5 * w * ratio(r2 * c2, r3, "p3 = 0");
  if (p1 == 0.0 || p3 == 0.0) r.q1_dot = 0.0;
  if (p2 == 0.0 || p3 == 0.0) r.q2_dot = 0.0;
  return r;
}

Amplitudes to_amplitudes(const Spinor& alpha) {
  Amplitudes y;
  for (int i = 0; i < 3; ++i) {
    y(2 * i) = alpha[static_cast<std::size_t>(i)].real();
    y(2 * i + 1) = alpha[static_cast<std::size_t>(i)].imag();
  }
  return y;
}

Amplitudes to_amplitudes(const PhasePoint& point) { return to_amplitudes(phasepoint_to_spinor(point)); }

Spinor to_spinor(const Amplitudes& y) {
  return {Complex(y(0), y(1)), Complex(y(2), y(3)), Complex(y(4), y(5))};
}

PhasePoint to_phasepoint(const Amplitudes& y) { return spinor_to_phasepoint(to_spinor(y)); }

Amplitudes amplitude_rhs(const Amplitudes& y, const ModelParams& params) {
  const double w = params.omega;
  const double uw = params.u * w;
  const double n1 = y(0) * y(0) + y(1) * y(1);
  const double n2 = y(2) * y(2) + y(3) * y(3);
  const double n3 = y(4) * y(4) + y(5) * y(5);
  // G = H0 + u diag(n); a_dot = i G a, i.e. x_dot = -G y, y_dot = G x
  const double g11 = uw * n1, g22 = params.v * w + uw * n2, g33 = uw * n3, g = -0.5 * w;
  const double gx1 = g11 * y(0) + g * y(2);
  const double gy1 = g11 * y(1) + g * y(3);
  const double gx2 = g * y(0) + g22 * y(2) + g * y(4);
  const double gy2 = g * y(1) + g22 * y(3) + g * y(5);
  const double gx3 = g * y(2) + g33 * y(4);
  const double gy3 = g * y(3) + g33 * y(5);
  Amplitudes d;
  d << -gy1, gx1, -gy2, gx2, -gy3, gx3;
  return d;
}

double amplitude_energy(const Amplitudes& y, const ModelParams& params) {
  const double w = params.omega;
  const double n1 = y(0) * y(0) + y(1) * y(1);
  const double n2 = y(2) * y(2) + y(3) * y(3);
  const double n3 = y(4) * y(4) + y(5) * y(5);
  const double hop12 = y(0) * y(2) + y(1) * y(3);
  const double hop23 = y(2) * y(4) + y(3) * y(5);
  return params.v * w * n2 + 0.5 * params.u * w * (n1 * n1 + n2 * n2 + n3 * n3) - w * (hop12 + hop23);
}

double gauge_distance(const Amplitudes& a, const Amplitudes& b) {
  const Spinor sa = to_spinor(a), sb = to_spinor(b);
  Complex overlap = 0.0;
  for (std::size_t i = 0; i < 3; ++i) overlap += std::conj(sb[i]) * sa[i];
  const Complex phase = std::abs(overlap) > 0.0 ? overlap / std::abs(overlap) : Complex(1.0, 0.0);
  double d2 = 0.0;
  for (std::size_t i = 0; i < 3; ++i) d2 += std::norm(sa[i] - phase * sb[i]);
  return std::sqrt(d2);
}

const char* to_string(Regularity label) {
  switch (label) {
    case Regularity::Regular: return "regular";
    case Regularity::Chaotic: return "chaotic";
    case Regularity::Uncertain: return "uncertain";
    case Regularity::Unclassified: break;
  }
  return "unclassified";
}

namespace {

double p1_fraction(const auto& y) {
  const double n1 = y(0) * y(0) + y(1) * y(1);
  const double total = n1 + y(2) * y(2) + y(3) * y(3) + y(4) * y(4) + y(5) * y(5);
  return n1 / total;
}

/// Unit vector tangent to the sphere at a and orthogonal to the phase direction i a.
Amplitudes transverse_direction(const Amplitudes& a, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Amplitudes w;
  for (int i = 0; i < 6; ++i) w(i) = normal(rng);
  Amplitudes ia;
  ia << -a(1), a(0), -a(3), a(2), -a(5), a(4);
  const double an = a.squaredNorm();
  w -= a * (a.dot(w) / an);
  w -= ia * (ia.dot(w) / an);
  return w.normalized();
}

// [0..5] amplitudes, [6] and [7] running integrals of p1 and p2, [8..13] shadow orbit
template <int Dim>
Trajectory run(const Amplitudes& y0, const ModelParams& params, double T, const TrajectoryOptions& opt) {
  using Solver = Dop853<Dim>;
  using State = typename Solver::State;
  constexpr bool kShadow = Dim == 14;

  Trajectory traj;
  traj.initial = to_phasepoint(y0);
  traj.h0 = amplitude_energy(y0, params);
  const double norm0 = y0.squaredNorm();

  State Y = State::Zero();
  Y.template head<6>() = y0;
  const LyapunovOptions lyap = opt.lyapunov.value_or(LyapunovOptions{});
  if constexpr (kShadow) {
    Amplitudes b = y0 + lyap.separation * transverse_direction(y0, 0x5eedULL);
    b *= std::sqrt(norm0) / b.norm();
    Y.template tail<6>() = b;
  }

  auto rhs = [&params](double, const State& s) {
    State d;
    const Amplitudes a = s.template head<6>();
    d.template head<6>() = amplitude_rhs(a, params);
    d(6) = (a(0) * a(0) + a(1) * a(1));
    d(7) = (a(2) * a(2) + a(3) * a(3));
    if constexpr (kShadow) d.template tail<6>() = amplitude_rhs(s.template tail<6>(), params);
    return d;
  };
  Solver solver(rhs, 0.0, Y, opt.tolerances);

  const double transient = std::clamp(opt.transient, 0.0, T);
  bool transient_done = transient == 0.0;
  double integral_p1_at_transient = 0.0, integral_p2_at_transient = 0.0;

  std::size_t sample_index = 0;
  auto record_samples = [&](double t_hi, bool dense) {
    if (!(opt.sample_interval > 0.0)) return;
    for (;;) {
      const double ts = static_cast<double>(sample_index) * opt.sample_interval;
      if (ts > t_hi + 1e-12 * std::max(1.0, t_hi) || ts > T) break;
      const State s = dense ? solver.dense(std::min(ts, t_hi)) : solver.y();
      traj.times.push_back(ts);
      traj.samples.push_back(to_phasepoint(s.template head<6>()));
      ++sample_index;
    }
  };
  record_samples(0.0, false);

  std::size_t renorm_index = 1;
  double log_sum = 0.0;
  double lyap_time = 0.0;

  while (solver.t() < T) {
    double bound = T;
    if constexpr (kShadow) bound = std::min(bound, static_cast<double>(renorm_index) * lyap.renorm_interval);
    if (!transient_done) bound = std::min(bound, transient);
    if (solver.step(bound) == StepStatus::StepCollapse) {
      traj.failed = true;
      traj.failure = "step size collapsed at t=" + std::to_string(solver.t());
      break;
    }
    ++traj.steps;
    const double t = solver.t();

    if (opt.section) {
      const double plane = opt.section->plane_p1;
      const double g_old = p1_fraction(solver.y_old()) - plane;
      const double g_new = p1_fraction(solver.y()) - plane;
      const bool up = g_old < 0.0 && g_new >= 0.0;
      const bool down = g_old > 0.0 && g_new <= 0.0;
      const auto dir = opt.section->direction;
      if ((up && dir != CrossingDirection::Downward) || (down && dir != CrossingDirection::Upward)) {
        auto g = [&](double tt) { return p1_fraction(solver.dense(tt)) - plane; };
        double t_root = t;
        if (g_new != 0.0) {
          boost::uintmax_t iterations = 200;
          const auto bracket = boost::math::tools::toms748_solve(
              g, solver.t_old(), t, g_old, g_new,
              [](double a, double b) { return std::abs(b - a) <= 4e-16 * std::max(1.0, std::abs(a)); }, iterations);
          t_root = 0.5 * (bracket.first + bracket.second);
          if (std::abs(g(bracket.first)) < std::abs(g(t_root))) t_root = bracket.first;
          if (std::abs(g(bracket.second)) < std::abs(g(t_root))) t_root = bracket.second;
        }
        Crossing c;
        c.t = t_root;
        const Amplitudes a = solver.dense(t_root).template head<6>();
        c.point = to_phasepoint(a);
        c.direction = up ? 1 : -1;
        traj.crossings.push_back(c);
      }
    }

    record_samples(t, true);

    const State& y = solver.y();
    const Amplitudes a = y.template head<6>();
    traj.max_energy_drift = std::max(traj.max_energy_drift, std::abs(amplitude_energy(a, params) - traj.h0));
    traj.max_norm_drift = std::max(traj.max_norm_drift, std::abs(a.squaredNorm() - norm0));
    if (traj.max_norm_drift > 1e-6) {
      traj.failed = true;
      traj.failure = "amplitude norm drifted by " + std::to_string(traj.max_norm_drift) + " at t=" + std::to_string(t);
      break;
    }

    if (!transient_done && t >= transient) {
      integral_p1_at_transient = y(6);
      integral_p2_at_transient = y(7);
      transient_done = true;
    }

    if constexpr (kShadow) {
      const double t_renorm = static_cast<double>(renorm_index) * lyap.renorm_interval;
      if (t >= t_renorm) {
        State s = y;
        const Amplitudes b = s.template tail<6>();
        const Spinor sa = to_spinor(a), sb = to_spinor(b);
        Complex overlap = 0.0;
        for (std::size_t i = 0; i < 3; ++i) overlap += std::conj(sb[i]) * sa[i];
        const Complex phase = std::abs(overlap) > 0.0 ? overlap / std::abs(overlap) : Complex(1.0, 0.0);
        Amplitudes aligned = to_amplitudes(Spinor{phase * sb[0], phase * sb[1], phase * sb[2]});
        Amplitudes diff = aligned - a;
        const double d = diff.norm();
        if (t <= lyap.window * (1.0 + 1e-12)) {
          log_sum += std::log(d / lyap.separation);
          lyap_time = t;
        }
        Amplitudes fresh = a + lyap.separation * (d > 0.0 ? Amplitudes(diff / d) : transverse_direction(a, renorm_index));
        fresh *= a.norm() / fresh.norm();
        s.template tail<6>() = fresh;
        solver.reset(t, s);
        ++renorm_index;
      }
    }
  }

  traj.t_end = solver.t();
  const double span = traj.t_end - transient;
  if (span > 0.0 && transient_done) {
    traj.mean_p1 = (solver.y()(6) - integral_p1_at_transient) / span;
    traj.mean_p2 = (solver.y()(7) - integral_p2_at_transient) / span;
  } else if (traj.t_end > 0.0) {
    traj.mean_p1 = solver.y()(6) / traj.t_end;
    traj.mean_p2 = solver.y()(7) / traj.t_end;
  }
  if constexpr (kShadow) {
    if (lyap_time > 0.0) {
      traj.lyapunov = log_sum / lyap_time;
      traj.lyapunov_window = lyap_time;
    }
  }
  return traj;
}

}  // namespace

Trajectory integrate(const Amplitudes& initial, const ModelParams& params, double T, const TrajectoryOptions& options) {
  params.validate();
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("integrate: horizon T must be positive and finite");
  if (options.lyapunov) {
    const auto& l = *options.lyapunov;
    if (!(l.separation > 0.0) || !(l.renorm_interval > 0.0) || !(l.window > 0.0))
      throw InvalidArgument("integrate: Lyapunov settings must be positive");
    Trajectory t = run<14>(initial, params, T, options);
    if (t.lyapunov && t.lyapunov_window >= l.window * (1.0 - 1e-9)) t.label = classify_trajectory(t, l);
    return t;
  }
  return run<8>(initial, params, T, options);
}

Trajectory integrate(const PhasePoint& initial, const ModelParams& params, double T, const TrajectoryOptions& options) {
  Trajectory t = integrate(to_amplitudes(initial), params, T, options);
  t.initial = initial;
  return t;
}

std::vector<Amplitudes> sample_amplitudes(const Amplitudes& initial, const ModelParams& params, double T, double dt,
                                          const IntegratorOptions& tolerances) {
  if (!(dt > 0.0) || !(T > 0.0)) throw InvalidArgument("sample_amplitudes: T and dt must be positive");
  Dop853<6> solver([&params](double, const Amplitudes& y) { return amplitude_rhs(y, params); }, 0.0, initial, tolerances);
  std::vector<Amplitudes> out{initial};
  std::size_t k = 1;
  while (solver.t() < T) {
    if (solver.step(T) == StepStatus::StepCollapse) throw NumericalFailure("sample_amplitudes: step size collapsed", solver.t());
    for (; static_cast<double>(k) * dt <= solver.t() + 1e-12; ++k) out.push_back(solver.dense(static_cast<double>(k) * dt));
  }
  return out;
}

std::vector<Trajectory> integrate_ensemble(std::span<const PhasePoint> initials, const ModelParams& params, double T,
                                           const TrajectoryOptions& options) {
  std::vector<Trajectory> out(initials.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < initials.size(); ++i) {
    try {
      out[i] = integrate(initials[i], params, T, options);
    } catch (...) {
#pragma omp critical(trimer_ensemble_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

Regularity classify_trajectory(const Trajectory& trajectory, const LyapunovOptions& options) {
  if (!trajectory.lyapunov || trajectory.lyapunov_window < options.window * (1.0 - 1e-9))
    throw InvalidArgument("classify_trajectory: Lyapunov estimate missing or shorter than the window");
  const double growth = *trajectory.lyapunov * trajectory.lyapunov_window;
  if (growth >= options.chaotic_at) return Regularity::Chaotic;
  if (growth < options.regular_below) return Regularity::Regular;
  return Regularity::Uncertain;
}

SectionPointSet poincare_section(std::span<const PhasePoint> initials, const ModelParams& params, double h_target,
                                 double T, TrajectoryOptions options) {
  for (const auto& p : initials) {
    const double h = hcl(p, params);
    if (std::abs(h - h_target) > 1e-10 * std::max(1.0, std::abs(h_target)))
      throw DomainError("poincare_section: initial point off the energy shell by " + std::to_string(h - h_target));
  }
  if (!options.section) options.section = SectionSpec{};
  SectionPointSet set;
  set.h_target = h_target;
  set.spec = *options.section;
  set.trajectories = integrate_ensemble(initials, params, T, options);
  for (std::size_t k = 0; k < set.trajectories.size(); ++k) {
    const auto& tr = set.trajectories[k];
    for (const auto& c : tr.crossings)
      set.points.push_back({k, c.t, c.point.q1, c.point.q2, c.point.p1, c.point.p2, c.direction, tr.mean_p1});
  }
  return set;
}

namespace {

struct ExtremumProblem {
  const ModelParams* params;
  double sign;
};

PhasePoint angles_to_point(const double* x) {
  const double st = std::sin(x[0]);
  const double cp = std::cos(x[1]), sp = std::sin(x[1]);
  return {wrap_angle(x[2]), wrap_angle(x[3]), st * st * cp * cp, st * st * sp * sp};
}

double extremum_objective(const gsl_vector* x, void* data) {
  const auto* prob = static_cast<const ExtremumProblem*>(data);
  const double v[4] = {gsl_vector_get(x, 0), gsl_vector_get(x, 1), gsl_vector_get(x, 2), gsl_vector_get(x, 3)};
  PhasePoint p = angles_to_point(v);
  p.p2 = std::min(p.p2, 1.0 - p.p1);
  return prob->sign * hcl(p, *prob->params);
}

std::pair<double, PhasePoint> refine(const ModelParams& params, double sign, const std::array<double, 4>& start) {
  ExtremumProblem prob{&params, sign};
  gsl_multimin_function fn{&extremum_objective, 4, &prob};
  gsl_vector* x = gsl_vector_alloc(4);
  gsl_vector* step = gsl_vector_alloc(4);
  for (std::size_t i = 0; i < 4; ++i) {
    gsl_vector_set(x, i, start[i]);
    gsl_vector_set(step, i, 0.05);
  }
  gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 4);
  gsl_multimin_fminimizer_set(m, &fn, x, step);
  for (int iter = 0; iter < 20000; ++iter) {
    if (gsl_multimin_fminimizer_iterate(m) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-11) == GSL_SUCCESS) break;
  }
  const double v[4] = {gsl_vector_get(m->x, 0), gsl_vector_get(m->x, 1), gsl_vector_get(m->x, 2), gsl_vector_get(m->x, 3)};
  PhasePoint best = angles_to_point(v);
  best.p2 = std::min(best.p2, 1.0 - best.p1);
  const double value = m->fval;
  gsl_multimin_fminimizer_free(m);
  gsl_vector_free(step);
  gsl_vector_free(x);
  return {sign * value, best};
}

}  // namespace

ClassicalRange classical_range(const ModelParams& params) {
  params.validate();
  constexpr int kSimplex = 13, kAngle = 12, kStarts = 6;
  struct Candidate {
    double value;
    std::array<double, 4> x;
  };
  std::vector<Candidate> grid;
  grid.reserve(kSimplex * kSimplex * kAngle * kAngle);
  for (int a = 0; a < kSimplex; ++a)
    for (int b = 0; b < kSimplex; ++b)
      for (int c = 0; c < kAngle; ++c)
        for (int d = 0; d < kAngle; ++d) {
          const std::array<double, 4> x{0.5 * std::numbers::pi * a / (kSimplex - 1), 0.5 * std::numbers::pi * b / (kSimplex - 1),
                                        kTwoPi * c / kAngle, kTwoPi * d / kAngle};
          PhasePoint p = angles_to_point(x.data());
          p.p2 = std::min(p.p2, 1.0 - p.p1);
          grid.push_back({hcl(p, params), x});
        }
  ClassicalRange range;
  auto search = [&](double sign, double& value, PhasePoint& where) {
    std::partial_sort(grid.begin(), grid.begin() + kStarts, grid.end(),
                      [sign](const Candidate& l, const Candidate& r) { return sign * l.value < sign * r.value; });
    value = grid.front().value;
    where = angles_to_point(grid.front().x.data());
    for (int k = 0; k < kStarts; ++k) {
      const auto [v, p] = refine(params, sign, grid[static_cast<std::size_t>(k)].x);
      if (sign * v < sign * value) {
        value = v;
        where = p;
      }
    }
  };
  search(1.0, range.h_min, range.argmin);
  search(-1.0, range.h_max, range.argmax);
  return range;
}

std::optional<double> section_q1(const ModelParams& params, double q2, double p1, double p2, double h_target) {
  if (p1 < 0.0 || p2 < 0.0 || p1 + p2 > 1.0) return std::nullopt;
  const double coupling = params.omega * std::sqrt(p1 * p2);
  if (!(coupling > 0.0)) return std::nullopt;
  const double rest = hcl({q2, q2, p1, p2}, params) + coupling;
  const double c = (rest - h_target) / coupling;
  if (c < -1.0 || c > 1.0) return std::nullopt;
  return wrap_angle(q2 - std::acos(c));
}

std::vector<PhasePoint> seed_on_shell(const ModelParams& params, double h_target, const SeedSettings& settings) {
  if (settings.count == 0) throw InvalidArgument("seed_on_shell: zero seeds requested");
  const ClassicalRange range = classical_range(params);
  const double tol = 1e-9 * (range.h_max - range.h_min);
  if (h_target < range.h_min - tol || h_target > range.h_max + tol)
    throw EmptySelection("seed_on_shell: energy lies outside the classical range");
  if (h_target <= range.h_min + tol) return {range.argmin};
  if (h_target >= range.h_max - tol) return {range.argmax};

  std::mt19937_64 rng(settings.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<PhasePoint> out;
  const double accept = 1e-11 * std::max(1.0, std::abs(h_target));
  for (std::size_t attempt = 0; attempt < settings.max_attempts && out.size() < settings.count; ++attempt) {
    PhasePoint p;
    if (settings.mode == SeedMode::Section) {
      p.p1 = settings.plane_p1;
      p.q2 = kTwoPi * unit(rng);
      p.p2 = (1.0 - settings.plane_p1) * unit(rng);
      const auto q1 = section_q1(params, p.q2, p.p1, p.p2, h_target);
      if (!q1) continue;
      p.q1 = *q1;
    } else {
      double r1 = unit(rng), r2 = unit(rng);
      if (r1 + r2 > 1.0) {
        r1 = 1.0 - r1;
        r2 = 1.0 - r2;
      }
      p.p1 = r1;
      p.p2 = r2;
      p.q2 = kTwoPi * unit(rng);
      const auto q1 = section_q1(params, p.q2, p.p1, p.p2, h_target);
      if (!q1) continue;
      p.q1 = unit(rng) < 0.5 ? *q1 : wrap_angle(2.0 * p.q2 - *q1);
    }
    if (std::abs(hcl(p, params) - h_target) <= accept) out.push_back(p);
  }
  if (out.empty()) throw EmptySelection("seed_on_shell: no sample reached the energy shell");
  return out;
}

Skeleton build_skeleton(const ModelParams& params, std::span<const double> e_tilde_grid, const SkeletonSettings& settings) {
  Skeleton sk;
  sk.range = classical_range(params);
  TrajectoryOptions opt;
  opt.tolerances = settings.tolerances;
  opt.transient = settings.transient;
  opt.lyapunov = settings.lyapunov;
  const double T = std::max(settings.T, settings.lyapunov.window);
  for (std::size_t k = 0; k < e_tilde_grid.size(); ++k) {
    SkeletonSlice slice;
    slice.e_tilde = e_tilde_grid[k];
    slice.h = sk.range.restore(slice.e_tilde);
    std::vector<PhasePoint> seeds;
    SeedSettings ss{settings.seeds_per_energy, settings.seed + 1000003ULL * k, SeedMode::Section, 0.5, 200000};
    try {
      seeds = seed_on_shell(params, slice.h, ss);
    } catch (const EmptySelection&) {
      ss.mode = SeedMode::Interior;
      try {
        seeds = seed_on_shell(params, slice.h, ss);
      } catch (const EmptySelection&) {
      }
    }
    const auto trajectories = integrate_ensemble(seeds, params, T, opt);
    double sum = 0.0, lo = 1.0, hi = 0.0;
    std::size_t chaotic = 0;
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
      const auto& tr = trajectories[i];
      if (tr.failed) continue;
      SkeletonPoint pt;
      pt.e_tilde = slice.e_tilde;
      pt.h = slice.h;
      pt.mean_n2 = tr.mean_p2;
      pt.label = tr.label;
      pt.seed = seeds[i];
      pt.lyapunov_exponent = tr.lyapunov.value_or(0.0);
      if (pt.label == Regularity::Chaotic) {
        ++chaotic;
        sum += pt.mean_n2;
        lo = std::min(lo, pt.mean_n2);
        hi = std::max(hi, pt.mean_n2);
      }
      slice.points.push_back(pt);
    }
    if (chaotic > 0) {
      slice.chaotic_mean = sum / static_cast<double>(chaotic);
      slice.chaotic_spread = hi - lo;
      for (auto& pt : slice.points) pt.island = pt.label == Regularity::Regular;
    }
    sk.slices.push_back(std::move(slice));
  }
  return sk;
}

IslandSet island_coherent_set(const ModelParams& params, double h, const TorusSelection& selection) {
  std::vector<PhasePoint> tori = selection.tori;
  if (tori.empty()) {
    const SeedSettings ss{selection.search.seeds_per_energy, selection.search.seed, SeedMode::Section, 0.5, 200000};
    const auto seeds = seed_on_shell(params, h, ss);
    TrajectoryOptions opt;
    opt.tolerances = selection.search.tolerances;
    opt.lyapunov = selection.search.lyapunov;
    const auto runs = integrate_ensemble(seeds, params, selection.search.lyapunov.window, opt);
    for (std::size_t i = 0; i < runs.size(); ++i)
      if (!runs[i].failed && runs[i].label == Regularity::Regular) tori.push_back(seeds[i]);
  }
  if (tori.empty()) throw EmptySelection("island_coherent_set: no regular torus at this energy");

  TrajectoryOptions opt;
  opt.tolerances = selection.search.tolerances;
  opt.section = SectionSpec{};
  const auto runs = integrate_ensemble(tori, params, selection.T, opt);
  IslandSet set;
  set.h = h;
  for (const auto& tr : runs) {
    if (tr.crossings.empty()) continue;
    ++set.tori;
    const std::size_t n = tr.crossings.size();
    const std::size_t keep = std::min(n, std::max<std::size_t>(selection.crossings_per_torus, 1));
    for (std::size_t j = 0; j < keep; ++j) {
      const auto& c = tr.crossings[j * n / keep];
      set.points.push_back(c.point);
      set.spinors.push_back(phasepoint_to_spinor(c.point));
    }
  }
  if (set.points.empty()) throw EmptySelection("island_coherent_set: selected tori never cross the section");
  return set;
}

std::array<double, 3> toroidal_embed(const PhasePoint& point) {
  const double radius = point.p2 + point.p1 * std::cos(point.q1);
  return {radius * std::cos(point.q2), radius * std::sin(point.q2), point.p1 * std::sin(point.q1)};
}

GrowthFit sp_perturbation_growth(const ModelParams& params, double epsilon, double T, std::uint64_t seed) {
  if (!(epsilon > 0.0)) throw InvalidArgument("sp_perturbation_growth: epsilon must be positive");
  const Amplitudes sp = to_amplitudes(dark_spinor());
  Amplitudes start = sp + epsilon * transverse_direction(sp, seed);
  start.normalize();
  constexpr double dt = 0.02;
  const auto path = sample_amplitudes(start, params, T, dt);
  GrowthFit fit;
  const double lo = 5.0 * epsilon, hi = 1e-3;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  bool started = false;
  for (std::size_t k = 0; k < path.size(); ++k) {
    const double t = static_cast<double>(k) * dt;
    const double d = gauge_distance(path[k], sp);
    fit.max_distance = std::max(fit.max_distance, d);
    if (!started && d >= lo) {
      started = true;
      fit.t_start = t;
    }
    if (!started) continue;
    if (d > hi) break;
    const double y = std::log(d);
    sx += t;
    sy += y;
    sxx += t * t;
    sxy += t * y;
    ++fit.samples;
    fit.t_stop = t;
  }
  if (fit.samples >= 3) {
    const double n = static_cast<double>(fit.samples);
    fit.rate = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return fit;
}

}  // namespace trimer
