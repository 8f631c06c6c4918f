#pragma once

#include <cstddef>
#include <functional>
#include <variant>

#include "constctl/model.hpp"

namespace constctl {

// Adaptive Dormand–Prince 5(4) with local extrapolation. A step is accepted when
//   RMS(err) < abs_tol + rel_tol · RMS(x).
struct IntegratorConfig {
  double rel_tol = 1e-13;
  double abs_tol = 1e-14;
  std::size_t max_steps = 1'000'000;

  // Throws DimensionError unless 0 < abs_tol <= rel_tol < 1e-3.
  void validate() const;
};

struct FlowResult {
  Vector terminal_state;
  std::size_t steps_accepted = 0;
  std::size_t steps_rejected = 0;
  std::size_t rhs_evaluations = 0;
};

// Zero input on [0, switch_time], `active` on (switch_time, horizon].
struct StepSchedule {
  double horizon = 0.0;
  double switch_time = 0.0;
  Vector before;
  Vector active;

  static StepSchedule zero_then(double horizon, double window, Vector u);
  double window() const { return horizon - switch_time; }
  void validate(Eigen::Index inputs) const;
};

using ControlInput = std::variant<Vector, StepSchedule>;

// Any component above this magnitude aborts integration with Divergence.
inline constexpr double kDivergenceCap = 1e12;

using RightHandSide =
    std::function<void(double t, const Vector& x, Vector& dxdt)>;

/// Integrates ẋ = rhs(t, x) from t0 to t1 (t1 >= t0). t1 == t0 returns x0
/// untouched.
FlowResult integrate(const RightHandSide& rhs, const Vector& x0, double t0,
                     double t1, const IntegratorConfig& cfg);

/// φ_T(x0): flow of ẋ = N(x).
FlowResult flow_forward(const NetworkModel& model, const Vector& x0, double T,
                        const IntegratorConfig& cfg = {});

/// ψ_T(x1): flow of ẋ = −N(x), the inverse of φ_T.
FlowResult flow_backward(const NetworkModel& model, const Vector& x1, double T,
                         const IntegratorConfig& cfg = {});

/// ẋ = N(x) + B u with a constant input or a step schedule. Schedules are
/// integrated segment by segment with a hard restart at the switch.
FlowResult simulate_controlled(const NetworkModel& model, const Vector& x0,
                               const ControlInput& input, double T,
                               const IntegratorConfig& cfg = {});

/// ẋ = N(x) + B u(t) for an arbitrary time-varying input.
FlowResult simulate_time_varying(const NetworkModel& model, const Vector& x0,
                                 const std::function<Vector(double)>& input,
                                 double T, const IntegratorConfig& cfg = {});

/// Central finite-difference estimate of Dφ_T(x0), step 1e-6·max(1, |x0|).
Matrix flow_jacobian_fd(const NetworkModel& model, const Vector& x0, double T,
                        const IntegratorConfig& cfg = {});

}  // namespace constctl
