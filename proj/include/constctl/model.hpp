#pragma once

#include <string_view>

#include "constctl/linalg.hpp"

namespace constctl {

enum class ActivationKind { Linear, Tanh, Mindy };

std::string_view to_string(ActivationKind kind);

// Elementwise nonlinearity with analytic first and second derivatives.
// Linear and Tanh act identically on every unit; the MINDy radical form
//   f(s) = √(α² + (bs + ½)²) − √(α² + (bs − ½)²),  b = 20/3
// carries one α per unit.
class Activation {
 public:
  static constexpr double kMindySlope = 20.0 / 3.0;

  static Activation linear();
  static Activation tanh();
  static Activation mindy(Vector alpha);

  ActivationKind kind() const { return kind_; }
  const Vector& alpha() const { return alpha_; }

  struct Values {
    Vector value;
    Vector first;
    Vector second;
  };

  Values evaluate(const Vector& x) const;
  Vector apply(const Vector& x) const;
  Vector slope(const Vector& x) const;

  // sup |f″| over [-10, 10] by a 10⁵-point grid (exactly 0 for Linear).
  // For MINDy the maximum is taken over units.
  double second_derivative_bound() const;

 private:
  Activation(ActivationKind kind, Vector alpha)
      : kind_(kind), alpha_(std::move(alpha)) {}

  ActivationKind kind_;
  Vector alpha_;
};

// ẋ = −D x + W f(x) + B u. Immutable once constructed; the constructor
// enforces every invariant so operations can assume them.
class NetworkModel {
 public:
  NetworkModel(Vector decay, Matrix weights, Matrix input, Activation activation);

  Eigen::Index dim() const { return decay_.size(); }
  Eigen::Index inputs() const { return input_.cols(); }

  const Vector& decay() const { return decay_; }
  const Matrix& weights() const { return weights_; }
  const Matrix& input() const { return input_; }
  const Activation& activation() const { return activation_; }

  // A = −D + W, the drift for the linear activation.
  Matrix linear_part() const;

  NetworkModel with_input(Matrix input) const;

 private:
  Vector decay_;
  Matrix weights_;
  Matrix input_;
  Activation activation_;
};

struct ContractionMargins {
  double gamma = 0.0;    // λ_min(D) − ‖W‖
  double lambda = 0.0;   // λ_max(D) + ‖W‖
  double lambda1 = 0.0;  // ‖W‖·sup|f″|
};

/// N(x) = −Dx + Wf(x).
Vector drift(const NetworkModel& model, const Vector& x);

/// DN(x) = −D + W·diag(f′(x)).
Matrix drift_jacobian(const NetworkModel& model, const Vector& x);

ContractionMargins contraction_margins(const NetworkModel& model);

// B = [e₁ … e_k] in R^{d×k}.
Matrix canonical_input(Eigen::Index dim, Eigen::Index k);
bool is_canonical_input(const Matrix& b);

}  // namespace constctl
