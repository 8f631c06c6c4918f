#include "constctl/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "constctl/errors.hpp"

namespace constctl {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::LinearExact:
      return "LinearExact";
    case Method::ForwardNominal:
      return "ForwardNominal";
    case Method::BackwardNominal:
      return "BackwardNominal";
    case Method::LinearizedAtX0:
      return "LinearizedAtX0";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "LinearExact" || name == "linear") return Method::LinearExact;
  if (name == "ForwardNominal" || name == "forward") return Method::ForwardNominal;
  if (name == "BackwardNominal" || name == "backward") return Method::BackwardNominal;
  if (name == "LinearizedAtX0" || name == "linearized") return Method::LinearizedAtX0;
  throw DimensionError("unknown synthesis method '" + std::string(name) + "'");
}

const Vector& SynthesisResult::active_input() const {
  if (const auto* u = std::get_if<Vector>(&input)) return *u;
  return std::get<StepSchedule>(input).active;
}

SpectralCheck spectral_condition(const Matrix& a, double T,
                                 std::optional<double> tol) {
  if (!(T > 0.0 && std::isfinite(T))) {
    throw DimensionError("spectral condition needs a positive horizon");
  }
  SpectralCheck out;
  out.spectrum = linalg::eigenvalues(a);
  out.tolerance = tol.value_or(1e-8 * (1.0 + linalg::spectral_norm(a)));
  const double spacing = 2.0 * std::numbers::pi / T;
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& z : out.spectrum.values) {
    const double nearest = std::round(z.imag() / spacing) * spacing;
    margin = std::min(margin, std::hypot(z.real(), z.imag() - nearest));
  }
  out.margin = margin;
  out.ok = margin > out.tolerance;
  return out;
}

linalg::SolveResult resolvent_apply(const Matrix& u, double h, const Matrix& v) {
  linalg::require_square(u, "resolvent generator");
  if (!(h > 0.0 && std::isfinite(h))) {
    throw DimensionError("resolvent step must be positive");
  }
  const Eigen::Index d = u.rows();
  if (h * linalg::spectral_norm(u) < 1e-4) {
    // Σₙ (hU)ⁿ/(n+1)! to ten terms; the tail is below (1e-4)¹⁰.
    const Matrix hu = h * u;
    Matrix series = Matrix::Identity(d, d);
    Matrix term = Matrix::Identity(d, d);
    for (int n = 1; n <= 10; ++n) {
      term = term * hu / static_cast<double>(n + 1);
      series += term;
    }
    auto res = linalg::solve(series, v);
    res.solution /= h;
    return res;
  }
  const Matrix e = linalg::matexp(u, h);
  const double reference = e.cwiseAbs().colwise().sum().maxCoeff() + 1.0;
  return linalg::solve(e - Matrix::Identity(d, d), u * v, reference);
}

namespace {

void check_request(const NetworkModel& model, const SynthesisRequest& req) {
  if (req.x0.size() != model.dim() || req.x1.size() != model.dim()) {
    throw DimensionError("x0 and x1 must have length " +
                         std::to_string(model.dim()));
  }
  linalg::require_finite(req.x0, "x0");
  linalg::require_finite(req.x1, "x1");
  if (!(req.horizon > 0.0 && std::isfinite(req.horizon))) {
    throw DimensionError("horizon T must be positive and finite");
  }
  if (req.tau && !(*req.tau > 0.0 && *req.tau <= req.horizon)) {
    throw DimensionError("tau must satisfy 0 < tau <= T");
  }
}

SpectralCheck require_spectral(const Matrix& jac, double h,
                               std::string_view where,
                               std::vector<std::string>& warnings) {
  auto check = spectral_condition(jac, h);
  if (!check.ok) {
    std::ostringstream os;
    os << "spectral condition violated for " << where
       << ": an eigenvalue lies within " << check.margin
       << " of i*2*pi*l/" << h << " (tolerance " << check.tolerance
       << "), so e^{hU} - Id is singular";
    throw SingularSystem(os.str(), 0.0);
  }
  if (check.margin < kSpectralWarnMargin) {
    std::ostringstream os;
    os << "spectral margin " << check.margin << " below "
       << kSpectralWarnMargin << " for " << where;
    warnings.push_back(os.str());
  }
  return check;
}

SynthesisResult finish(const NetworkModel& model, const SynthesisRequest& req,
                       Vector rhs, double rcond, double margin,
                       std::vector<std::string> warnings) {
  SynthesisResult out;
  const auto pinv = linalg::pseudo_inverse_apply(model.input(), rhs);
  out.not_in_image = pinv.not_in_image;
  out.image_residual = pinv.residual;
  out.spectral_margin = margin;
  out.predicted_rhs = std::move(rhs);
  out.rcond = rcond;
  out.warnings = std::move(warnings);
  if (req.tau) {
    out.input = StepSchedule::zero_then(req.horizon, *req.tau, pinv.solution);
  } else {
    out.input = pinv.solution;
  }
  return out;
}

Vector linearized_full_input(const NetworkModel& model,
                             const SynthesisRequest& req, double& rcond,
                             double& margin, std::vector<std::string>& warnings) {
  if (req.tau) {
    throw DimensionError("the linearization baseline has no step-function mode");
  }
  const Matrix a = drift_jacobian(model, req.x0);
  margin = require_spectral(a, req.horizon, "DN(x0)", warnings).margin;
  const Vector free_end = linalg::matexp(a, req.horizon) * req.x0;
  const auto res = resolvent_apply(a, req.horizon, req.x1 - free_end);
  rcond = res.rcond;
  return res.solution.col(0) - drift(model, req.x0);
}

}  // namespace

SynthesisResult synthesize_linear(const NetworkModel& model,
                                  const SynthesisRequest& req) {
  check_request(model, req);
  if (model.activation().kind() != ActivationKind::Linear) {
    throw DimensionError("linear synthesis requires the linear activation");
  }
  std::vector<std::string> warnings;
  const Matrix a = model.linear_part();
  const double h = req.effective_horizon();
  const double margin = require_spectral(a, h, "A", warnings).margin;
  const Vector free_end = linalg::matexp(a, req.horizon) * req.x0;
  const auto res = resolvent_apply(a, h, req.x1 - free_end);
  return finish(model, req, res.solution.col(0), res.rcond, margin,
                std::move(warnings));
}

SynthesisResult synthesize_forward(const NetworkModel& model,
                                   const SynthesisRequest& req,
                                   const IntegratorConfig& cfg) {
  check_request(model, req);
  std::vector<std::string> warnings;
  const Vector free_end = flow_forward(model, req.x0, req.horizon, cfg).terminal_state;
  const Matrix jac = drift_jacobian(model, free_end);
  const double h = req.effective_horizon();
  const double margin =
      require_spectral(jac, h, "DN(phi_T(x0))", warnings).margin;
  const auto res = resolvent_apply(jac, h, req.x1 - free_end);
  return finish(model, req, res.solution.col(0), res.rcond, margin,
                std::move(warnings));
}

SynthesisResult synthesize_backward(const NetworkModel& model,
                                    const SynthesisRequest& req,
                                    const IntegratorConfig& cfg) {
  check_request(model, req);
  std::vector<std::string> warnings;
  const Vector pulled = flow_backward(model, req.x1, req.horizon, cfg).terminal_state;
  const Matrix jac = drift_jacobian(model, pulled);
  const double h = req.effective_horizon();
  const double margin =
      require_spectral(jac, h, "DN(psi_T(x1))", warnings).margin;
  // [Id − e^{−hV}]⁻¹V = [e^{h(−V)} − Id]⁻¹(−V)
  const auto res = resolvent_apply(-jac, h, pulled - req.x0);
  return finish(model, req, res.solution.col(0), res.rcond, margin,
                std::move(warnings));
}

SynthesisResult synthesize_linearized(const NetworkModel& model,
                                      const SynthesisRequest& req) {
  check_request(model, req);
  if (model.inputs() != model.dim() || !is_canonical_input(model.input())) {
    throw DimensionError("the linearization baseline requires B = Id");
  }
  std::vector<std::string> warnings;
  double rcond = 0.0;
  double margin = 0.0;
  Vector u = linearized_full_input(model, req, rcond, margin, warnings);
  SynthesisResult out;
  out.predicted_rhs = u;
  out.input = std::move(u);
  out.rcond = rcond;
  out.spectral_margin = margin;
  out.warnings = std::move(warnings);
  return out;
}

SynthesisResult synthesize_linearized_actuated(const NetworkModel& model,
                                               const SynthesisRequest& req) {
  check_request(model, req);
  if (!is_canonical_input(model.input())) {
    throw DimensionError(
        "the restricted linearization baseline requires B = [e1 ... ek]");
  }
  std::vector<std::string> warnings;
  double rcond = 0.0;
  double margin = 0.0;
  const Vector full = linearized_full_input(model, req, rcond, margin, warnings);
  const Eigen::Index k = model.inputs();
  SynthesisResult out;
  out.predicted_rhs = full;
  out.input = Vector(full.head(k));
  const double fnorm = full.norm();
  out.image_residual = fnorm > 0.0 ? full.tail(model.dim() - k).norm() / fnorm : 0.0;
  out.rcond = rcond;
  out.spectral_margin = margin;
  out.warnings = std::move(warnings);
  return out;
}

SynthesisResult synthesize(const NetworkModel& model, const SynthesisRequest& req,
                           const IntegratorConfig& cfg) {
  switch (req.method) {
    case Method::LinearExact:
      return synthesize_linear(model, req);
    case Method::ForwardNominal:
      return synthesize_forward(model, req, cfg);
    case Method::BackwardNominal:
      return synthesize_backward(model, req, cfg);
    case Method::LinearizedAtX0:
      return synthesize_linearized(model, req);
  }
  throw DimensionError("unknown synthesis method");
}

GramianControl::GramianControl(Matrix a, Matrix b, double horizon,
                               Matrix gramian, Vector costate, double energy)
    : a_(std::move(a)),
      b_(std::move(b)),
      horizon_(horizon),
      gramian_(std::move(gramian)),
      costate_(std::move(costate)),
      energy_(energy) {}

Vector GramianControl::evaluate(double t) const {
  return b_.transpose() * (linalg::matexp(a_.transpose(), horizon_ - t) * costate_);
}

std::vector<double> GramianControl::sample_times(std::size_t n) const {
  std::vector<double> times;
  if (n == 0) return times;
  times.reserve(n);
  if (n == 1) {
    times.push_back(0.0);
    return times;
  }
  for (std::size_t j = 0; j < n; ++j) {
    times.push_back(horizon_ * static_cast<double>(j) / static_cast<double>(n - 1));
  }
  return times;
}

std::vector<Vector> GramianControl::samples(std::size_t n) const {
  std::vector<Vector> out;
  for (double t : sample_times(n)) out.push_back(evaluate(t));
  return out;
}

namespace {

struct Panel {
  double lo, hi;
  Matrix value;
  double error;
};

// 15-point Kronrod rule with the embedded 7-point Gauss rule on [lo, hi].
template <typename F>
Panel kronrod_panel(const F& f, double lo, double hi) {
  using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
  using Gauss = boost::math::quadrature::gauss<double, 7>;
  const auto& x = Kronrod::abscissa();
  const auto& wk = Kronrod::weights();
  const auto& wg = Gauss::weights();
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);

  Matrix f0 = f(mid);
  Matrix kronrod = wk[0] * f0;
  Matrix gauss = wg[0] * f0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const Matrix pair = f(mid + half * x[i]) + f(mid - half * x[i]);
    kronrod += wk[i] * pair;
    if (i % 2 == 0) gauss += wg[i / 2] * pair;
  }
  kronrod *= half;
  gauss *= half;
  return {lo, hi, kronrod, (kronrod - gauss).cwiseAbs().maxCoeff()};
}

}  // namespace

Matrix controllability_gramian(const Matrix& a, const Matrix& b, double T,
                               double tol) {
  linalg::require_square(a, "Gramian generator");
  if (b.rows() != a.rows()) {
    throw DimensionError("Gramian input matrix row count mismatch");
  }
  if (!(T > 0.0)) {
    throw DimensionError("Gramian horizon must be positive");
  }
  const Matrix bbt = b * b.transpose();
  auto integrand = [&](double s) {
    const Matrix e = linalg::matexp(a, s);
    return Matrix(e * bbt * e.transpose());
  };

  std::vector<Panel> panels{kronrod_panel(integrand, 0.0, T)};
  for (int iter = 0; iter < 500; ++iter) {
    Matrix total = Matrix::Zero(a.rows(), a.rows());
    double error = 0.0;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < panels.size(); ++i) {
      total += panels[i].value;
      error += panels[i].error;
      if (panels[i].error > panels[worst].error) worst = i;
    }
    if (error <= tol * std::max(total.cwiseAbs().maxCoeff(), 1e-300)) {
      return total;
    }
    const Panel split = panels[worst];
    const double mid = 0.5 * (split.lo + split.hi);
    panels[worst] = kronrod_panel(integrand, split.lo, mid);
    panels.push_back(kronrod_panel(integrand, mid, split.hi));
  }
  Matrix total = Matrix::Zero(a.rows(), a.rows());
  for (const auto& p : panels) total += p.value;
  return total;
}

GramianControl gramian_control_linear(const NetworkModel& model,
                                      const Vector& x0, const Vector& x1,
                                      double T) {
  if (model.activation().kind() != ActivationKind::Linear) {
    throw DimensionError("Gramian control requires the linear activation");
  }
  if (x0.size() != model.dim() || x1.size() != model.dim()) {
    throw DimensionError("x0 and x1 must have length " +
                         std::to_string(model.dim()));
  }
  const Matrix a = model.linear_part();
  const Matrix gram = controllability_gramian(a, model.input(), T);
  const Vector displacement = x1 - linalg::matexp(a, T) * x0;
  const auto res = linalg::solve(gram, displacement);
  Vector costate = res.solution.col(0);
  const double energy = costate.dot(displacement);
  return GramianControl(a, model.input(), T, gram, std::move(costate), energy);
}

ReachableSetChart reachable_chart(const NetworkModel& model, const Vector& x0,
                                  double T, const IntegratorConfig& cfg) {
  if (!is_canonical_input(model.input())) {
    throw DimensionError("reachable_chart requires B = [e1 ... ek]");
  }
  if (x0.size() != model.dim()) {
    throw DimensionError("x0 must have length " + std::to_string(model.dim()));
  }
  if (!(T > 0.0 && std::isfinite(T))) {
    throw DimensionError("horizon T must be positive and finite");
  }
  const Eigen::Index d = model.dim();
  const Eigen::Index k = model.inputs();

  ReachableSetChart chart;
  chart.horizon = T;
  chart.anchor = flow_forward(model, x0, T, cfg).terminal_state;
  const Matrix jac = drift_jacobian(model, chart.anchor);
  std::vector<std::string> unused;
  chart.spectral_margin =
      require_spectral(jac, T, "DN(phi_T(x0))", unused).margin;

  const Matrix full = resolvent_apply(jac, T, Matrix::Identity(d, d)).solution;
  chart.actuated_rows = full.topRows(k);
  chart.constrained_rows = full.bottomRows(d - k);
  chart.basis = linalg::kernel_basis(chart.constrained_rows);
  if (chart.basis.basis.cols() != k) {
    throw RankDeficient("reachable chart basis has " +
                            std::to_string(chart.basis.basis.cols()) +
                            " columns, expected " + std::to_string(k),
                        0.0);
  }
  return chart;
}

Vector reachable_control(const ReachableSetChart& chart, const Vector& x1) {
  if (x1.size() != chart.anchor.size()) {
    throw DimensionError("target length does not match chart dimension");
  }
  const Vector delta = x1 - chart.anchor;
  const Matrix& q = chart.basis.basis;
  const double off = (delta - q * (q.transpose() * delta)).norm();
  const double allowed = kChartTolerance * std::max(1.0, delta.norm());
  if (off > allowed) {
    std::ostringstream os;
    os << "target is off the reachable chart: orthogonal residual " << off
       << " exceeds " << allowed;
    throw TargetOffChart(os.str(), off);
  }
  return chart.actuated_rows * delta;
}

}  // namespace constctl
