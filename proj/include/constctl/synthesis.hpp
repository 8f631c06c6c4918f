#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "constctl/flow.hpp"
#include "constctl/linalg.hpp"
#include "constctl/model.hpp"

namespace constctl {

enum class Method { LinearExact, ForwardNominal, BackwardNominal, LinearizedAtX0 };

std::string_view to_string(Method method);
// Accepts the canonical names and the short CLI aliases
// (linear, forward, backward, linearized). Throws DimensionError otherwise.
Method parse_method(std::string_view name);

// Transfer x0 → x1 over [0, horizon]. With `tau` set, the synthesized input
// is the step schedule that is zero on [0, horizon − tau] and constant after.
struct SynthesisRequest {
  Vector x0;
  Vector x1;
  double horizon = 1.0;
  Method method = Method::ForwardNominal;
  std::optional<double> tau;

  double effective_horizon() const { return tau.value_or(horizon); }
};

struct SynthesisResult {
  ControlInput input;
  bool not_in_image = false;
  double image_residual = 0.0;
  double spectral_margin = 0.0;
  // The vector B·u was asked to equal.
  Vector predicted_rhs;
  // Reciprocal condition estimate of the inverted matrix.
  double rcond = 0.0;
  std::vector<std::string> warnings;

  // The constant input, or the active segment of a step schedule.
  const Vector& active_input() const;
};

struct SpectralCheck {
  bool ok = false;
  double margin = 0.0;
  double tolerance = 0.0;
  linalg::Spectrum spectrum;
};

// Margins below this pass the check but add a warning to the result.
inline constexpr double kSpectralWarnMargin = 1e-6;

/// Distance from σ(A) to the lattice {i·2πℓ/T : ℓ ∈ Z}; ok when it exceeds
/// `tol` (default 1e-8·(1 + ‖A‖)). e^{TA} − Id is invertible iff the
/// distance is positive.
SpectralCheck spectral_condition(const Matrix& a, double T,
                                 std::optional<double> tol = std::nullopt);

/// [e^{hU} − Id]⁻¹·U·v without forming an inverse. For h‖U‖ < 1e-4 this
/// switches to h⁻¹·[Σₙ (hU)ⁿ/(n+1)!]⁻¹·v, which does not cancel.
linalg::SolveResult resolvent_apply(const Matrix& u, double h, const Matrix& v);

/// Constant (or step) control for the linear activation, exact for every T
/// satisfying the spectral condition.
SynthesisResult synthesize_linear(const NetworkModel& model,
                                  const SynthesisRequest& req);

/// Forward nominal-state synthesis linearized at the free-flow endpoint
/// φ_T(x0): B u = [e^{T_eff U} − Id]⁻¹ U (x1 − φ_T(x0)), U = DN(φ_T(x0)).
SynthesisResult synthesize_forward(const NetworkModel& model,
                                   const SynthesisRequest& req,
                                   const IntegratorConfig& cfg = {});

/// Backward nominal-state synthesis at the pulled-back target ψ_T(x1):
/// B u = [Id − e^{−T_eff V}]⁻¹ V (ψ_T(x1) − x0), V = DN(ψ_T(x1)).
SynthesisResult synthesize_backward(const NetworkModel& model,
                                    const SynthesisRequest& req,
                                    const IntegratorConfig& cfg = {});

/// Baseline that inverts the linearization at x0 (requires B = Id):
/// u = (e^{TA} − Id)⁻¹ A (x1 − e^{TA} x0) − N(x0), A = DN(x0).
SynthesisResult synthesize_linearized(const NetworkModel& model,
                                      const SynthesisRequest& req);

/// The same baseline for a canonical B = [e₁ … e_k]: the fully actuated
/// input is computed and restricted to the actuated coordinates.
SynthesisResult synthesize_linearized_actuated(const NetworkModel& model,
                                               const SynthesisRequest& req);

/// Dispatches on req.method.
SynthesisResult synthesize(const NetworkModel& model,
                           const SynthesisRequest& req,
                           const IntegratorConfig& cfg = {});

// Minimum-energy time-varying control for the linear activation:
//   u(t) = Bᵀ e^{(T−t)Aᵀ} W_c⁻¹ (x1 − e^{TA} x0).
class GramianControl {
 public:
  GramianControl(Matrix a, Matrix b, double horizon, Matrix gramian,
                 Vector costate, double energy);

  Vector evaluate(double t) const;

  const Matrix& gramian() const { return gramian_; }
  const Vector& costate() const { return costate_; }
  double energy() const { return energy_; }
  double horizon() const { return horizon_; }

  // Uniform grid of n points on [0, T] with the control at each.
  std::vector<double> sample_times(std::size_t n) const;
  std::vector<Vector> samples(std::size_t n) const;

 private:
  Matrix a_;
  Matrix b_;
  double horizon_;
  Matrix gramian_;
  Vector costate_;
  double energy_;
};

/// W_c = ∫₀ᵀ e^{sA} B Bᵀ e^{sAᵀ} ds by adaptive Gauss–Kronrod (15 points).
Matrix controllability_gramian(const Matrix& a, const Matrix& b, double T,
                               double tol = 1e-10);

GramianControl gramian_control_linear(const NetworkModel& model,
                                      const Vector& x0, const Vector& x1,
                                      double T);

// First-order chart of the constant-input reachable set for B = [e₁ … e_k]:
// R_c(T, x0) ≈ anchor + span(basis).
struct ReachableSetChart {
  Vector anchor;                // φ_T(x0)
  linalg::KernelBasis basis;    // ker M_T, k columns
  Matrix actuated_rows;         // V_T, rows 1..k of 𝓑_T
  Matrix constrained_rows;      // M_T, rows k+1..d of 𝓑_T
  double horizon = 0.0;
  double spectral_margin = 0.0;
};

inline constexpr double kChartTolerance = 1e-6;

ReachableSetChart reachable_chart(const NetworkModel& model, const Vector& x0,
                                  double T, const IntegratorConfig& cfg = {});

/// u = V_T (x1 − anchor). Throws TargetOffChart when the component of
/// x1 − anchor orthogonal to the chart exceeds 1e-6·max(1, |x1 − anchor|).
Vector reachable_control(const ReachableSetChart& chart, const Vector& x1);

}  // namespace constctl
