#include "constctl/flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <boost/numeric/odeint/stepper/runge_kutta_dopri5.hpp>

#include "constctl/errors.hpp"

namespace constctl {

void IntegratorConfig::validate() const {
  if (!(abs_tol > 0.0 && abs_tol <= rel_tol && rel_tol < 1e-3)) {
    std::ostringstream os;
    os << "integrator tolerances must satisfy 0 < abs_tol <= rel_tol < 1e-3 "
       << "(got abs_tol=" << abs_tol << ", rel_tol=" << rel_tol << ")";
    throw DimensionError(os.str());
  }
  if (max_steps == 0) {
    throw DimensionError("integrator max_steps must be positive");
  }
}

StepSchedule StepSchedule::zero_then(double horizon, double window, Vector u) {
  StepSchedule s;
  s.horizon = horizon;
  s.switch_time = horizon - window;
  s.before = Vector::Zero(u.size());
  s.active = std::move(u);
  s.validate(s.active.size());
  return s;
}

void StepSchedule::validate(Eigen::Index inputs) const {
  if (!(std::isfinite(horizon) && horizon >= 0.0)) {
    throw DimensionError("schedule horizon must be finite and non-negative");
  }
  if (!(switch_time >= 0.0 && switch_time <= horizon)) {
    throw DimensionError("schedule switch time must lie in [0, horizon]");
  }
  if (before.size() != inputs || active.size() != inputs) {
    throw DimensionError("schedule segment values must have length " +
                         std::to_string(inputs));
  }
  if (!before.allFinite() || !active.allFinite()) {
    throw DimensionError("schedule segment values must be finite");
  }
}

namespace {

using State = std::vector<double>;
using Stepper = boost::numeric::odeint::runge_kutta_dopri5<State>;

// The embedded estimate is O(h⁵); PI gains per Gustafsson with k = 5.
constexpr double kOrder = 5.0;
constexpr double kSafety = 0.9;
constexpr double kAlpha = 0.7 / kOrder;
constexpr double kBeta = 0.4 / kOrder;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;

double rms(const State& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / static_cast<double>(v.size()));
}

void check_state(const State& x, double t) {
  for (double xi : x) {
    if (!std::isfinite(xi) || std::abs(xi) > kDivergenceCap) {
      std::ostringstream os;
      os << "state diverged at t = " << t << " (|x_i| > " << kDivergenceCap
         << " or non-finite)";
      throw Divergence(os.str(), t);
    }
  }
}

}  // namespace

FlowResult integrate(const RightHandSide& rhs, const Vector& x0, double t0,
                     double t1, const IntegratorConfig& cfg) {
  cfg.validate();
  if (!(std::isfinite(t0) && std::isfinite(t1) && t1 >= t0)) {
    throw DimensionError("integration interval must be finite and ordered");
  }
  FlowResult out;
  if (t1 == t0) {
    out.terminal_state = x0;
    return out;
  }

  const auto n = static_cast<std::size_t>(x0.size());
  std::size_t evaluations = 0;
  Vector xin(x0.size());
  Vector dx(x0.size());
  auto system = [&](const State& x, State& dxdt, double t) {
    ++evaluations;
    xin = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(n));
    rhs(t, xin, dx);
    std::copy(dx.data(), dx.data() + n, dxdt.begin());
  };

  State x(x0.data(), x0.data() + n);
  State dxdt(n), dxdtnew(n), xnew(n), xerr(n);
  check_state(x, t0);
  Stepper stepper;

  // Initial step from the Hairer–Nørsett–Wanner heuristic.
  system(x, dxdt, t0);
  const double span = t1 - t0;
  double h;
  {
    const double scale = cfg.abs_tol + cfg.rel_tol * rms(x);
    const double d0 = rms(x) / scale;
    const double d1 = rms(dxdt) / scale;
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, span);
  }

  double t = t0;
  double prev_err = 1e-4;
  bool last_rejected = false;
  while (t < t1) {
    if (out.steps_accepted + out.steps_rejected >= cfg.max_steps) {
      std::ostringstream os;
      os << "integration exceeded " << cfg.max_steps << " steps at t = " << t;
      throw IntegrationBudgetExceeded(os.str(), t);
    }
    bool final_step = false;
    if (t + h >= t1 || t1 - (t + h) < 1e-12 * span) {
      h = t1 - t;
      final_step = true;
    }
    stepper.do_step(system, x, dxdt, t, xnew, dxdtnew, h, xerr);

    const double scale =
        cfg.abs_tol + cfg.rel_tol * std::max(rms(x), rms(xnew));
    const double err = rms(xerr) / scale;
    if (!std::isfinite(err)) {
      check_state(xnew, t + h);
      throw Divergence("integration produced a non-finite error estimate", t);
    }

    if (err <= 1.0) {
      t = final_step ? t1 : t + h;
      x.swap(xnew);
      dxdt.swap(dxdtnew);
      check_state(x, t);
      ++out.steps_accepted;
      double factor = err == 0.0
                          ? kMaxFactor
                          : kSafety * std::pow(err, -kAlpha) *
                                std::pow(prev_err, kBeta);
      factor = std::clamp(factor, kMinFactor, kMaxFactor);
      if (last_rejected) factor = std::min(factor, 1.0);
      h *= factor;
      prev_err = std::max(err, 1e-4);
      last_rejected = false;
    } else {
      ++out.steps_rejected;
      const double factor =
          std::max(kMinFactor, kSafety * std::pow(err, -1.0 / kOrder));
      h *= factor;
      last_rejected = true;
      if (h < 1e-14 * std::max(1.0, std::abs(t))) {
        std::ostringstream os;
        os << "step size underflow at t = " << t;
        throw Divergence(os.str(), t);
      }
    }
  }

  out.terminal_state = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(n));
  out.rhs_evaluations = evaluations;
  return out;
}

namespace {

void require_state(const NetworkModel& model, const Vector& x,
                   std::string_view what) {
  if (x.size() != model.dim()) {
    throw DimensionError(std::string(what) + " has length " +
                         std::to_string(x.size()) + ", model dimension is " +
                         std::to_string(model.dim()));
  }
  linalg::require_finite(x, what);
}

void require_horizon(double T) {
  if (!(std::isfinite(T) && T >= 0.0)) {
    throw DimensionError("horizon must be finite and non-negative");
  }
}

void accumulate(FlowResult& total, const FlowResult& part) {
  total.terminal_state = part.terminal_state;
  total.steps_accepted += part.steps_accepted;
  total.steps_rejected += part.steps_rejected;
  total.rhs_evaluations += part.rhs_evaluations;
}

FlowResult simulate_constant(const NetworkModel& model, const Vector& x0,
                             const Vector& u, double t0, double t1,
                             const IntegratorConfig& cfg) {
  if (u.size() != model.inputs()) {
    throw DimensionError("input has length " + std::to_string(u.size()) +
                         ", model has " + std::to_string(model.inputs()) +
                         " inputs");
  }
  const Vector bu = model.input() * u;
  const bool zero = !bu.any();
  return integrate(
      [&](double, const Vector& x, Vector& dxdt) {
        dxdt = drift(model, x);
        if (!zero) dxdt += bu;
      },
      x0, t0, t1, cfg);
}

}  // namespace

FlowResult flow_forward(const NetworkModel& model, const Vector& x0, double T,
                        const IntegratorConfig& cfg) {
  require_state(model, x0, "initial state");
  require_horizon(T);
  return integrate(
      [&](double, const Vector& x, Vector& dxdt) { dxdt = drift(model, x); },
      x0, 0.0, T, cfg);
}

FlowResult flow_backward(const NetworkModel& model, const Vector& x1, double T,
                         const IntegratorConfig& cfg) {
  require_state(model, x1, "target state");
  require_horizon(T);
  return integrate(
      [&](double, const Vector& x, Vector& dxdt) { dxdt = -drift(model, x); },
      x1, 0.0, T, cfg);
}

FlowResult simulate_controlled(const NetworkModel& model, const Vector& x0,
                               const ControlInput& input, double T,
                               const IntegratorConfig& cfg) {
  require_state(model, x0, "initial state");
  require_horizon(T);
  if (const auto* u = std::get_if<Vector>(&input)) {
    linalg::require_finite(*u, "constant input");
    return simulate_constant(model, x0, *u, 0.0, T, cfg);
  }
  const auto& schedule = std::get<StepSchedule>(input);
  schedule.validate(model.inputs());
  if (std::abs(schedule.horizon - T) > 1e-12 * std::max(1.0, T)) {
    throw DimensionError("schedule horizon does not match simulation horizon");
  }
  FlowResult total;
  total.terminal_state = x0;
  if (schedule.switch_time > 0.0) {
    accumulate(total, simulate_constant(model, total.terminal_state,
                                        schedule.before, 0.0,
                                        schedule.switch_time, cfg));
  }
  if (schedule.switch_time < T) {
    accumulate(total, simulate_constant(model, total.terminal_state,
                                        schedule.active, schedule.switch_time,
                                        T, cfg));
  }
  return total;
}

FlowResult simulate_time_varying(const NetworkModel& model, const Vector& x0,
                                 const std::function<Vector(double)>& input,
                                 double T, const IntegratorConfig& cfg) {
  require_state(model, x0, "initial state");
  require_horizon(T);
  return integrate(
      [&](double t, const Vector& x, Vector& dxdt) {
        dxdt = drift(model, x) + model.input() * input(t);
      },
      x0, 0.0, T, cfg);
}

Matrix flow_jacobian_fd(const NetworkModel& model, const Vector& x0, double T,
                        const IntegratorConfig& cfg) {
  require_state(model, x0, "base point");
  require_horizon(T);
  const Eigen::Index d = model.dim();
  const double h = 1e-6 * std::max(1.0, x0.norm());
  Matrix jac(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    Vector plus = x0;
    Vector minus = x0;
    plus(j) += h;
    minus(j) -= h;
    jac.col(j) = (flow_forward(model, plus, T, cfg).terminal_state -
                  flow_forward(model, minus, T, cfg).terminal_state) /
                 (2.0 * h);
  }
  return jac;
}

}  // namespace constctl
