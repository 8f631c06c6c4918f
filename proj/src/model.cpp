#include "constctl/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "constctl/errors.hpp"

namespace constctl {

std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::Linear:
      return "linear";
    case ActivationKind::Tanh:
      return "tanh";
    case ActivationKind::Mindy:
      return "mindy";
  }
  return "unknown";
}

Activation Activation::linear() { return {ActivationKind::Linear, Vector()}; }

Activation Activation::tanh() { return {ActivationKind::Tanh, Vector()}; }

Activation Activation::mindy(Vector alpha) {
  if (alpha.size() == 0) {
    throw InvalidModel("mindy activation needs one alpha per unit");
  }
  if (!alpha.allFinite() || (alpha.array() <= 0.0).any()) {
    throw InvalidModel("mindy alpha entries must be finite and positive");
  }
  return {ActivationKind::Mindy, std::move(alpha)};
}

namespace {

struct Scalar3 {
  double f, df, d2f;
};

Scalar3 mindy_scalar(double s, double alpha) {
  constexpr double b = Activation::kMindySlope;
  const double zp = b * s + 0.5;
  const double zm = b * s - 0.5;
  const double a2 = alpha * alpha;
  const double rp = std::sqrt(a2 + zp * zp);
  const double rm = std::sqrt(a2 + zm * zm);
  // d/dz √(α²+z²) = z/r,  d²/dz² = α²/r³
  return {rp - rm, b * (zp / rp - zm / rm),
          b * b * a2 * (1.0 / (rp * rp * rp) - 1.0 / (rm * rm * rm))};
}

Scalar3 tanh_scalar(double s) {
  const double t = std::tanh(s);
  const double sech2 = 1.0 - t * t;
  return {t, sech2, -2.0 * t * sech2};
}

}  // namespace

Activation::Values Activation::evaluate(const Vector& x) const {
  const Eigen::Index n = x.size();
  Values out{Vector(n), Vector(n), Vector(n)};
  switch (kind_) {
    case ActivationKind::Linear:
      out.value = x;
      out.first.setOnes();
      out.second.setZero();
      break;
    case ActivationKind::Tanh:
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto s = tanh_scalar(x(i));
        out.value(i) = s.f;
        out.first(i) = s.df;
        out.second(i) = s.d2f;
      }
      break;
    case ActivationKind::Mindy:
      if (alpha_.size() != n) {
        throw DimensionError("mindy activation has " +
                             std::to_string(alpha_.size()) +
                             " units, argument has " + std::to_string(n));
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto s = mindy_scalar(x(i), alpha_(i));
        out.value(i) = s.f;
        out.first(i) = s.df;
        out.second(i) = s.d2f;
      }
      break;
  }
  return out;
}

Vector Activation::apply(const Vector& x) const {
  switch (kind_) {
    case ActivationKind::Linear:
      return x;
    case ActivationKind::Tanh:
      return x.array().tanh().matrix();
    case ActivationKind::Mindy:
      break;
  }
  return evaluate(x).value;
}

Vector Activation::slope(const Vector& x) const {
  switch (kind_) {
    case ActivationKind::Linear:
      return Vector::Ones(x.size());
    case ActivationKind::Tanh: {
      const Eigen::ArrayXd t = x.array().tanh();
      return (1.0 - t * t).matrix();
    }
    case ActivationKind::Mindy:
      break;
  }
  return evaluate(x).first;
}

double Activation::second_derivative_bound() const {
  constexpr int kPoints = 100000;
  constexpr double kLo = -10.0;
  constexpr double kHi = 10.0;
  const double step = (kHi - kLo) / (kPoints - 1);
  double best = 0.0;
  switch (kind_) {
    case ActivationKind::Linear:
      return 0.0;
    case ActivationKind::Tanh:
      for (int i = 0; i < kPoints; ++i) {
        best = std::max(best, std::abs(tanh_scalar(kLo + i * step).d2f));
      }
      return best;
    case ActivationKind::Mindy:
      for (Eigen::Index u = 0; u < alpha_.size(); ++u) {
        for (int i = 0; i < kPoints; ++i) {
          best = std::max(best,
                          std::abs(mindy_scalar(kLo + i * step, alpha_(u)).d2f));
        }
      }
      return best;
  }
  return best;
}

NetworkModel::NetworkModel(Vector decay, Matrix weights, Matrix input,
                           Activation activation)
    : decay_(std::move(decay)),
      weights_(std::move(weights)),
      input_(std::move(input)),
      activation_(std::move(activation)) {
  const Eigen::Index d = decay_.size();
  if (d < 1) {
    throw InvalidModel("model dimension must be at least 1");
  }
  if (!decay_.allFinite() || (decay_.array() <= 0.0).any()) {
    throw InvalidModel("decay entries must be finite and strictly positive");
  }
  if (weights_.rows() != d || weights_.cols() != d) {
    throw InvalidModel("W must be " + std::to_string(d) + "x" +
                       std::to_string(d));
  }
  if (!weights_.allFinite()) {
    throw InvalidModel("W has non-finite entries");
  }
  if (input_.rows() != d || input_.cols() < 1 || input_.cols() > d) {
    throw InvalidModel("B must have " + std::to_string(d) +
                       " rows and between 1 and " + std::to_string(d) +
                       " columns");
  }
  if (!input_.allFinite()) {
    throw InvalidModel("B has non-finite entries");
  }
  if (activation_.kind() == ActivationKind::Mindy &&
      activation_.alpha().size() != d) {
    throw InvalidModel("mindy activation needs exactly " + std::to_string(d) +
                       " alpha entries");
  }
}

Matrix NetworkModel::linear_part() const {
  Matrix a = weights_;
  a.diagonal() -= decay_;
  return a;
}

NetworkModel NetworkModel::with_input(Matrix input) const {
  return NetworkModel(decay_, weights_, std::move(input), activation_);
}

Vector drift(const NetworkModel& model, const Vector& x) {
  if (x.size() != model.dim()) {
    throw DimensionError("state length " + std::to_string(x.size()) +
                         " does not match model dimension " +
                         std::to_string(model.dim()));
  }
  if (model.activation().kind() == ActivationKind::Linear) {
    return model.linear_part() * x;
  }
  return model.weights() * model.activation().apply(x) -
         model.decay().cwiseProduct(x);
}

Matrix drift_jacobian(const NetworkModel& model, const Vector& x) {
  if (x.size() != model.dim()) {
    throw DimensionError("state length " + std::to_string(x.size()) +
                         " does not match model dimension " +
                         std::to_string(model.dim()));
  }
  Matrix jac = model.weights() * model.activation().slope(x).asDiagonal();
  jac.diagonal() -= model.decay();
  return jac;
}

ContractionMargins contraction_margins(const NetworkModel& model) {
  const double wnorm = linalg::spectral_norm(model.weights());
  ContractionMargins out;
  out.gamma = model.decay().minCoeff() - wnorm;
  out.lambda = model.decay().maxCoeff() + wnorm;
  out.lambda1 = wnorm * model.activation().second_derivative_bound();
  return out;
}

Matrix canonical_input(Eigen::Index dim, Eigen::Index k) {
  if (k < 1 || k > dim) {
    throw DimensionError("canonical input needs 1 <= k <= d, got k = " +
                         std::to_string(k) + ", d = " + std::to_string(dim));
  }
  return Matrix::Identity(dim, k);
}

bool is_canonical_input(const Matrix& b) {
  return b.rows() >= b.cols() && b == Matrix::Identity(b.rows(), b.cols());
}

}  // namespace constctl
