#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

#include "trimer/detail/dop853_tableau.hpp"
#include "trimer/errors.hpp"

namespace trimer {

struct IntegratorOptions {
  double rtol = 1e-12;
  double atol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  /// 0 selects the first step automatically.
  double first_step = 0.0;
};

enum class StepStatus { Accepted, StepCollapse };

/// Explicit Runge-Kutta 8(5,3) with 7th-order dense output, integrating forward in time.
template <int Dim>
class Dop853 {
 public:
  using State = Eigen::Matrix<double, Dim, 1>;
  using Rhs = std::function<State(double, const State&)>;

  Dop853(Rhs rhs, double t0, const State& y0, IntegratorOptions options = {})
      : rhs_(std::move(rhs)), options_(options) {
    if (!(options_.rtol > 0.0) || !(options_.atol >= 0.0)) throw InvalidArgument("Dop853: tolerances must be positive");
    if (!(options_.max_step > 0.0)) throw InvalidArgument("Dop853: max_step must be positive");
    reset(t0, y0);
    h_abs_ = options_.first_step > 0.0 ? options_.first_step : initial_step();
  }

  /// Restart from a new state keeping the current step size.
  void reset(double t, const State& y) {
    t_ = t;
    y_ = y;
    f_ = eval(t_, y_);
    t_old_ = t_;
    y_old_ = y_;
    h_prev_ = 0.0;
    dense_ready_ = false;
  }

  /// One accepted step, never past t_bound.
  StepStatus step(double t_bound) {
    if (!(t_bound > t_)) throw InvalidArgument("Dop853: t_bound must lie ahead of the current time");
    using namespace detail::dop853;
    const double min_step = 10.0 * std::abs(std::nextafter(t_, std::numeric_limits<double>::infinity()) - t_);
    double h_abs = std::clamp(h_abs_, min_step, options_.max_step);
    bool rejected = false;
    for (;;) {
      if (h_abs < min_step) return StepStatus::StepCollapse;
      double t_new = t_ + h_abs;
      if (t_new > t_bound) t_new = t_bound;
      const double h = t_new - t_;
      h_abs = std::abs(h);
      const State y_new = rk_step(h);
      const State f_new = eval(t_new, y_new);
      K_[kStages] = f_new;
      const State scale = (options_.atol + y_.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array() * options_.rtol).matrix();
      const double err = error_norm(h, scale);
      if (err < 1.0) {
        const double factor = err == 0.0 ? kMaxFactor : std::min(kMaxFactor, kSafety * std::pow(err, kExponent));
        h_abs_ = h_abs * (rejected ? std::min(1.0, factor) : factor);
        h_prev_ = h;
        t_old_ = t_;
        y_old_ = y_;
        t_ = t_new;
        y_ = y_new;
        f_ = f_new;
        dense_ready_ = false;
        return StepStatus::Accepted;
      }
      h_abs *= std::max(kMinFactor, kSafety * std::pow(err, kExponent));
      rejected = true;
    }
  }

  /// Interpolated state on the last accepted step [t_old, t].
  State dense(double t) {
    using namespace detail::dop853;
    if (h_prev_ == 0.0) return y_;
    if (!dense_ready_) build_dense();
    const double x = (t - t_old_) / h_prev_;
    State y = State::Zero(y_.size());
    for (int i = 0; i < kInterpolatorPower; ++i) {
      y += F_[static_cast<std::size_t>(kInterpolatorPower - 1 - i)];
      y *= (i % 2 == 0) ? x : (1.0 - x);
    }
    return y + y_old_;
  }

  double t() const { return t_; }
  double t_old() const { return t_old_; }
  const State& y() const { return y_; }
  const State& y_old() const { return y_old_; }
  const State& f() const { return f_; }
  double step_size() const { return h_abs_; }
  long evaluations() const { return evaluations_; }

 private:
  static constexpr double kSafety = 0.9;
  static constexpr double kMinFactor = 0.2;
  static constexpr double kMaxFactor = 10.0;
  static constexpr double kExponent = -1.0 / 8.0;

  State eval(double t, const State& y) {
    ++evaluations_;
    return rhs_(t, y);
  }

  static double rms(const State& x) { return std::sqrt(x.squaredNorm() / static_cast<double>(x.size())); }

  double initial_step() {
    const State scale = (options_.atol + y_.cwiseAbs().array() * options_.rtol).matrix();
    const double d0 = rms(y_.cwiseQuotient(scale));
    const double d1 = rms(f_.cwiseQuotient(scale));
    const double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    const State f1 = eval(t_ + h0, y_ + h0 * f_);
    const double d2 = rms((f1 - f_).cwiseQuotient(scale)) / h0;
    const double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                   : std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
    return std::min({100.0 * h0, h1, options_.max_step});
  }

  State rk_step(double h) {
    using namespace detail::dop853;
    K_[0] = f_;
    for (int s = 1; s < kStages; ++s) {
      State dy = State::Zero(y_.size());
      for (int j = 0; j < s; ++j) dy += A[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)] * K_[static_cast<std::size_t>(j)];
      K_[static_cast<std::size_t>(s)] = eval(t_ + C[static_cast<std::size_t>(s)] * h, y_ + h * dy);
    }
    State incr = State::Zero(y_.size());
    for (int s = 0; s < kStages; ++s) incr += B[static_cast<std::size_t>(s)] * K_[static_cast<std::size_t>(s)];
    return y_ + h * incr;
  }

  double error_norm(double h, const State& scale) const {
    using namespace detail::dop853;
    State e5 = State::Zero(scale.size());
    State e3 = State::Zero(scale.size());
    for (int s = 0; s <= kStages; ++s) {
      e5 += E5[static_cast<std::size_t>(s)] * K_[static_cast<std::size_t>(s)];
      e3 += E3[static_cast<std::size_t>(s)] * K_[static_cast<std::size_t>(s)];
    }
    const double n5 = e5.cwiseQuotient(scale).squaredNorm();
    const double n3 = e3.cwiseQuotient(scale).squaredNorm();
    if (n5 == 0.0 && n3 == 0.0) return 0.0;
    return std::abs(h) * n5 / std::sqrt((n5 + 0.01 * n3) * static_cast<double>(scale.size()));
  }

  void build_dense() {
    using namespace detail::dop853;
    const double h = h_prev_;
    // K_[0..12] still hold the stages of the last accepted step
    for (int s = kStages + 1; s < kStagesExtended; ++s) {
      State dy = State::Zero(y_.size());
      for (int j = 0; j < s; ++j) dy += A[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)] * K_[static_cast<std::size_t>(j)];
      K_[static_cast<std::size_t>(s)] = eval(t_old_ + C[static_cast<std::size_t>(s)] * h, y_old_ + h * dy);
    }
    const State dy = y_ - y_old_;
    const State& f_old = K_[0];
    F_[0] = dy;
    F_[1] = h * f_old - dy;
    F_[2] = 2.0 * dy - h * (f_ + f_old);
    for (int r = 0; r < 4; ++r) {
      State acc = State::Zero(y_.size());
      for (int s = 0; s < kStagesExtended; ++s) acc += D[static_cast<std::size_t>(r)][static_cast<std::size_t>(s)] * K_[static_cast<std::size_t>(s)];
      F_[static_cast<std::size_t>(3 + r)] = h * acc;
    }
    dense_ready_ = true;
  }

  Rhs rhs_;
  IntegratorOptions options_;
  double t_ = 0.0;
  double t_old_ = 0.0;
  double h_abs_ = 0.0;
  double h_prev_ = 0.0;
  State y_, y_old_, f_;
  std::array<State, detail::dop853::kStagesExtended> K_{};
  std::array<State, detail::dop853::kInterpolatorPower> F_{};
  bool dense_ready_ = false;
  long evaluations_ = 0;
};

extern template class Dop853<6>;
extern template class Dop853<12>;

}  // namespace trimer
