#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "constctl/errors.hpp"
#include "constctl/harness.hpp"
#include "constctl/synthesis.hpp"

using namespace constctl;
namespace h = constctl::harness;

namespace {

std::mt19937_64& rng() {
  static std::mt19937_64 g(31337);
  return g;
}

Vector normal_vector(Eigen::Index n, double sd = 1.0) {
  std::normal_distribution<double> z(0.0, sd);
  return Vector::NullaryExpr(n, [&] { return z(rng()); });
}

Matrix normal_matrix(Eigen::Index r, Eigen::Index c, double sd) {
  std::normal_distribution<double> z(0.0, sd);
  return Matrix::NullaryExpr(r, c, [&] { return z(rng()); });
}

NetworkModel rotation_model(double omega) {
  Matrix w(2, 2);
  w << 1.0, -omega, omega, 1.0;
  return NetworkModel(Vector::Ones(2), w, Matrix::Identity(2, 2), Activation::linear());
}

NetworkModel scalar_decay() {
  return NetworkModel(Vector::Ones(1), Matrix::Zero(1, 1), Matrix::Identity(1, 1),
                      Activation::linear());
}

NetworkModel random_model(Eigen::Index d, Activation act, double gain = 0.9) {
  return NetworkModel(Vector::Ones(d), normal_matrix(d, d, gain / std::sqrt(double(d))),
                      Matrix::Identity(d, d), std::move(act));
}

NetworkModel contracting_tanh(Eigen::Index d) {
  Matrix w = normal_matrix(d, d, 1.0);
  w *= 0.7 / linalg::spectral_norm(w);
  return NetworkModel(Vector::Ones(d), w, Matrix::Identity(d, d), Activation::tanh());
}

double rel_error(const NetworkModel& model, const Vector& x0, const Vector& x1,
                 const SynthesisResult& r, double T) {
  const Vector end = simulate_controlled(model, x0, r.input, T).terminal_state;
  return (end - x1).norm() / (x1 - x0).norm();
}

double slope(const std::vector<double>& t, const std::vector<double>& e) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    mx += std::log(t[i]) / t.size();
    my += std::log(e[i]) / t.size();
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sxy += (std::log(t[i]) - mx) * (std::log(e[i]) - my);
    sxx += (std::log(t[i]) - mx) * (std::log(t[i]) - mx);
  }
  return sxy / sxx;
}

}  // namespace

TEST(Method, NamesRoundTrip) {
  for (auto m : {Method::LinearExact, Method::ForwardNominal, Method::BackwardNominal,
                 Method::LinearizedAtX0}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_EQ(parse_method("forward"), Method::ForwardNominal);
  EXPECT_EQ(parse_method("linearized"), Method::LinearizedAtX0);
  EXPECT_THROW(parse_method("sideways"), DimensionError);
}

TEST(SpectralCondition, RotationAtPeriodIsViolated) {
  const double omega = 4.0;
  Matrix a(2, 2);
  a << 0.0, -omega, omega, 0.0;
  const auto c = spectral_condition(a, 2.0 * std::numbers::pi / omega);
  EXPECT_FALSE(c.ok);
  EXPECT_NEAR(c.margin, 0.0, 1e-12);
}

TEST(SpectralCondition, HurwitzRealSpectrum) {
  for (double T : {0.01, 1.0, 100.0}) {
    const auto c = spectral_condition(-Matrix::Identity(3, 3), T);
    EXPECT_TRUE(c.ok);
    EXPECT_NEAR(c.margin, 1.0, 1e-14);
  }
}

TEST(SpectralCondition, ContractingModelsPassForEveryHorizon) {
  for (int trial = 0; trial < 5; ++trial) {
    const auto model = contracting_tanh(6);
    ASSERT_GT(contraction_margins(model).gamma, 0.0);
    for (double T : {0.1, 1.0, 10.0}) {
      EXPECT_TRUE(spectral_condition(model.linear_part(), T).ok);
      EXPECT_TRUE(spectral_condition(drift_jacobian(model, normal_vector(6)), T).ok);
    }
  }
}

TEST(SpectralCondition, MarginMeasuresLatticeDistance) {
  // Eigenvalues ±3i with T = 2π/2.5: lattice spacing 2.5, nearest point 2.5i.
  Matrix a(2, 2);
  a << 0.0, -3.0, 3.0, 0.0;
  const auto c = spectral_condition(a, 2.0 * std::numbers::pi / 2.5);
  EXPECT_NEAR(c.margin, 0.5, 1e-12);
  EXPECT_NEAR(c.tolerance, 1e-8 * (1.0 + 3.0), 1e-20);
}

TEST(Resolvent, SeriesBranchAgreesWithDirectSolve) {
  const Matrix u = normal_matrix(4, 4, 1.0);
  const Vector v = normal_vector(4);
  // h‖U‖ just above and below the switch point.
  const double norm = u.lpNorm<1>();
  const double h_small = 0.9e-4 / norm, h_big = 1.1e-4 / norm;
  const Vector small = resolvent_apply(u, h_small, v).solution;
  const Vector big = resolvent_apply(u, h_big, v).solution;
  // Oracle: h⁻¹ Σ... via the identity [e^{hU} − Id]⁻¹U = h⁻¹(Id − hU/2 + (hU)²/12 − ...)
  auto oracle = [&](double hh) {
    const Matrix x = hh * u;
    return Vector((Matrix::Identity(4, 4) - x / 2.0 + x * x / 12.0) * v / hh);
  };
  EXPECT_LT((small - oracle(h_small)).norm() / small.norm(), 1e-11);
  EXPECT_LT((big - oracle(h_big)).norm() / big.norm(), 1e-8);
}

TEST(Resolvent, ScalarClosedForm) {
  const Matrix u = Matrix::Constant(1, 1, -1.0);
  const auto r = resolvent_apply(u, 1.0, Vector::Ones(1));
  EXPECT_NEAR(r.solution(0), -1.0 / (std::exp(-1.0) - 1.0), 1e-15);
}

TEST(SynthesizeLinear, TargetOnFreeFlowNeedsNoInput) {
  const auto model = random_model(5, Activation::linear());
  const Vector x0 = normal_vector(5);
  const Vector x1 = linalg::matexp(model.linear_part(), 1.5) * x0;
  const auto r = synthesize_linear(model, {x0, x1, 1.5, Method::LinearExact, std::nullopt});
  EXPECT_LT(r.active_input().norm(), 1e-12);
}

TEST(SynthesizeLinear, ScalarClosedForm) {
  const auto model = scalar_decay();
  const auto r = synthesize_linear(model, {Vector::Zero(1), Vector::Ones(1), 1.0,
                                           Method::LinearExact, std::nullopt});
  EXPECT_NEAR(r.active_input()(0), 1.0 / (1.0 - std::exp(-1.0)), 1e-14);
  EXPECT_NEAR(r.active_input()(0), 1.5819767068693265, 1e-14);
  const double end = simulate_controlled(model, Vector::Zero(1), r.input, 1.0).terminal_state(0);
  EXPECT_LT(std::abs(end - 1.0), 1e-9);
}

TEST(SynthesizeLinear, RotationCounterexampleIsSingular) {
  const double omega = 4.0;
  const auto model = rotation_model(omega);
  Vector x1(2);
  x1 << 1.0, 0.0;
  try {
    synthesize_linear(model, {Vector::Zero(2), x1, 2.0 * std::numbers::pi / omega,
                              Method::LinearExact, std::nullopt});
    FAIL() << "expected SingularSystem";
  } catch (const SingularSystem& e) {
    EXPECT_NE(std::string(e.what()).find("spectral condition"), std::string::npos);
  }
}

TEST(SynthesizeLinear, NearViolationWarns) {
  const double omega = 4.0;
  const auto model = rotation_model(omega);
  const double T = 2.0 * std::numbers::pi / omega * (1.0 + 1e-7);
  Vector x1(2);
  x1 << 1.0, 0.0;
  try {
    const auto r = synthesize_linear(model, {Vector::Zero(2), x1, T, Method::LinearExact, std::nullopt});
    EXPECT_FALSE(r.warnings.empty());
  } catch (const SingularSystem&) {
    SUCCEED();
  }
}

TEST(SynthesizeLinear, ExactForEveryHorizonStableAndUnstable) {
  for (auto fam : {h::Family::StableLinear, h::Family::UnstableLinear}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto model = h::generate_model({fam, 8, seed});
      for (double T : {0.25, 1.0, 4.0, 16.0, 64.0}) {
        const Vector x0 = normal_vector(8);
        const Vector x1 = normal_vector(8);
        const auto r = synthesize_linear(model, {x0, x1, T, Method::LinearExact, std::nullopt});
        EXPECT_LT(rel_error(model, x0, x1, r, T), 1e-7) << h::to_string(fam) << " T=" << T;
      }
    }
  }
}

TEST(SynthesizeLinear, UnderactuatedLeastNormAndImageFlag) {
  const auto base = random_model(4, Activation::linear());
  const auto model = base.with_input(normal_matrix(4, 2, 1.0));
  const Vector x0 = normal_vector(4), x1 = normal_vector(4);
  const auto r = synthesize_linear(model, {x0, x1, 1.0, Method::LinearExact, std::nullopt});
  EXPECT_TRUE(r.not_in_image);
  EXPECT_GT(r.image_residual, 1e-6);
  // u is the least-squares solution of B u = rhs.
  const Matrix& b = model.input();
  const Vector oracle = (b.transpose() * b).ldlt().solve(b.transpose() * r.predicted_rhs);
  EXPECT_LT((r.active_input() - oracle).norm(), 1e-10 * oracle.norm());

  // A target reached by some constant input is in the image.
  const Vector u = normal_vector(2);
  const Vector reachable = simulate_controlled(model, x0, u, 1.0).terminal_state;
  const auto ok = synthesize_linear(model, {x0, reachable, 1.0, Method::LinearExact, std::nullopt});
  EXPECT_FALSE(ok.not_in_image);
  EXPECT_LT((ok.active_input() - u).norm(), 1e-8);
}

TEST(SynthesizeLinear, StepModeIsExact) {
  const auto model = random_model(4, Activation::linear());
  const Vector x0 = normal_vector(4), x1 = normal_vector(4);
  const auto r = synthesize_linear(model, {x0, x1, 2.0, Method::LinearExact, 0.5});
  ASSERT_TRUE(std::holds_alternative<StepSchedule>(r.input));
  EXPECT_DOUBLE_EQ(std::get<StepSchedule>(r.input).switch_time, 1.5);
  EXPECT_LT(rel_error(model, x0, x1, r, 2.0), 1e-9);
}

TEST(SynthesizeLinear, RejectsNonlinearModel) {
  const auto model = random_model(3, Activation::tanh());
  EXPECT_THROW(synthesize_linear(model, {normal_vector(3), normal_vector(3), 1.0,
                                         Method::LinearExact, std::nullopt}),
               Error);
}

TEST(SynthesisRequest, Validation) {
  const auto model = random_model(3, Activation::tanh());
  const Vector x = normal_vector(3);
  EXPECT_THROW(synthesize(model, {x, x, 0.0, Method::ForwardNominal, std::nullopt}), DimensionError);
  EXPECT_THROW(synthesize(model, {x, x, 1.0, Method::ForwardNominal, 2.0}), DimensionError);
  EXPECT_THROW(synthesize(model, {x, x, 1.0, Method::ForwardNominal, 0.0}), DimensionError);
  EXPECT_THROW(synthesize(model, {x, normal_vector(2), 1.0, Method::ForwardNominal, std::nullopt}),
               DimensionError);
}

TEST(Gramian, RotationEnergyMatchesClosedForm) {
  const double omega = 4.0, T = 2.0 * std::numbers::pi / omega;
  const auto model = rotation_model(omega);
  Vector x1(2);
  x1 << 0.3, -1.2;
  const auto g = gramian_control_linear(model, Vector::Zero(2), x1, T);
  EXPECT_NEAR(g.energy(), x1.squaredNorm() / T, 1e-6 * x1.squaredNorm() / T);
  const Vector end = simulate_time_varying(model, Vector::Zero(2),
                                           [&](double t) { return g.evaluate(t); }, T)
                         .terminal_state;
  EXPECT_LT((end - x1).norm(), 1e-6);
}

TEST(Gramian, RotationControlMatchesPrintedFormula) {
  // Pure rotation (D = W diagonal cancels): u(t) = T⁻¹ e^{(T−t)Aᵀ} x1.
  const double omega = 4.0, T = 2.0 * std::numbers::pi / omega;
  const auto model = rotation_model(omega);
  Vector x1(2);
  x1 << 1.0, 2.0;
  const auto g = gramian_control_linear(model, Vector::Zero(2), x1, T);
  const Matrix a = model.linear_part();
  for (double t : {0.0, 0.4, 1.1, T}) {
    const Vector expected = linalg::matexp(a.transpose(), T - t) * x1 / T;
    EXPECT_LT((g.evaluate(t) - expected).norm(), 1e-8);
  }
}

TEST(Gramian, IntegratorChainIsConstant) {
  // A = 0, B = Id: W_c = T·Id and u ≡ (x1 − x0)/T.
  const NetworkModel model(Vector::Ones(3), Matrix::Identity(3, 3), Matrix::Identity(3, 3),
                           Activation::linear());
  const Vector x0 = normal_vector(3), x1 = normal_vector(3);
  const double T = 2.0;
  const auto g = gramian_control_linear(model, x0, x1, T);
  EXPECT_LT((g.gramian() - T * Matrix::Identity(3, 3)).norm(), 1e-12);
  for (const auto& u : g.samples(7)) {
    EXPECT_LT((u - (x1 - x0) / T).norm(), 1e-12);
  }
  EXPECT_EQ(g.sample_times(5).front(), 0.0);
  EXPECT_EQ(g.sample_times(5).back(), T);
}

TEST(Gramian, RandomControllablePairReachesTarget) {
  const auto base = random_model(4, Activation::linear());
  const auto model = base.with_input(normal_matrix(4, 2, 1.0));
  const Vector x0 = normal_vector(4), x1 = normal_vector(4);
  const auto g = gramian_control_linear(model, x0, x1, 1.5);
  const Vector end =
      simulate_time_varying(model, x0, [&](double t) { return g.evaluate(t); }, 1.5).terminal_state;
  EXPECT_LT((end - x1).norm() / (x1 - x0).norm(), 1e-6);
}

TEST(Gramian, QuadratureMatchesBlockExponential) {
  // Van Loan: exp([[−A, BBᵀ], [0, Aᵀ]]·T) has e^{TAᵀ} in the lower right
  // block and e^{−TA}W_c in the upper right.
  const Matrix a = normal_matrix(3, 3, 0.7);
  const Matrix b = normal_matrix(3, 2, 1.0);
  const double T = 1.3;
  Matrix big = Matrix::Zero(6, 6);
  big.topLeftCorner(3, 3) = -a;
  big.topRightCorner(3, 3) = b * b.transpose();
  big.bottomRightCorner(3, 3) = a.transpose();
  const Matrix e = linalg::matexp(big, T);
  const Matrix oracle = linalg::matexp(a, T) * e.topRightCorner(3, 3);
  const Matrix wc = controllability_gramian(a, b, T);
  EXPECT_LT((wc - oracle).norm() / oracle.norm(), 1e-10);
}

TEST(Gramian, UncontrollablePairIsSingular) {
  const NetworkModel model(Vector::Ones(2), Matrix::Zero(2, 2), Matrix::Identity(2, 1),
                           Activation::linear());
  EXPECT_THROW(gramian_control_linear(model, Vector::Zero(2), Vector::Ones(2), 1.0), SingularSystem);
}

TEST(SynthesizeForward, LinearReduction) {
  const auto model = random_model(5, Activation::linear());
  const Vector x0 = normal_vector(5), x1 = normal_vector(5);
  const auto lin = synthesize_linear(model, {x0, x1, 1.2, Method::LinearExact, std::nullopt});
  const auto fwd = synthesize_forward(model, {x0, x1, 1.2, Method::ForwardNominal, std::nullopt});
  EXPECT_LT((lin.active_input() - fwd.active_input()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(SynthesizeForward, ZeroDisplacement) {
  const auto model = random_model(4, Activation::tanh());
  const Vector x0 = normal_vector(4);
  const Vector x1 = flow_forward(model, x0, 1.0).terminal_state;
  const auto r = synthesize_forward(model, {x0, x1, 1.0, Method::ForwardNominal, std::nullopt});
  EXPECT_EQ(r.active_input(), Vector::Zero(4));
}

TEST(SynthesizeForward, StepWindowEqualToHorizonMatchesConstant) {
  const auto model = random_model(4, Activation::tanh());
  const Vector x0 = normal_vector(4), x1 = normal_vector(4);
  for (auto method : {Method::ForwardNominal, Method::BackwardNominal}) {
    const auto c = synthesize(model, {x0, x1, 0.8, method, std::nullopt});
    const auto s = synthesize(model, {x0, x1, 0.8, method, 0.8});
    ASSERT_TRUE(std::holds_alternative<StepSchedule>(s.input));
    EXPECT_EQ(s.active_input(), c.active_input());
    EXPECT_EQ(std::get<StepSchedule>(s.input).switch_time, 0.0);
  }
}

TEST(SynthesizeForward, StepModeUsesWindowResolvent) {
  const auto model = random_model(3, Activation::tanh());
  const Vector x0 = normal_vector(3), x1 = normal_vector(3);
  const double T = 1.0, tau = 0.25;
  const auto r = synthesize_forward(model, {x0, x1, T, Method::ForwardNominal, tau});
  const Vector anchor = flow_forward(model, x0, T).terminal_state;
  const Matrix u = drift_jacobian(model, anchor);
  const Matrix m = linalg::matexp(u, tau) - Matrix::Identity(3, 3);
  const Vector oracle = m.partialPivLu().solve(u * (x1 - anchor));
  EXPECT_LT((r.active_input() - oracle).norm() / oracle.norm(), 1e-10);
}

// Targets x1 = φ_T(x0) + T·v: the offset shrinks with T, as the error
// estimate requires.
TEST(SynthesizeForward, QuadraticOrderOnTanh) {
  rng().seed(2024);
  std::vector<NetworkModel> models;
  std::vector<Vector> starts;
  for (int i = 0; i < 8; ++i) {
    models.push_back(random_model(2, Activation::tanh(), 1.5));
    starts.push_back(normal_vector(2));
  }
  const Vector v = Vector::Unit(2, 0);
  const std::vector<double> ts{0.1, 0.05, 0.025};
  for (auto method : {Method::ForwardNominal, Method::BackwardNominal}) {
    std::vector<double> medians;
    for (double T : ts) {
      std::vector<double> errs;
      for (std::size_t i = 0; i < models.size(); ++i) {
        const Vector& x0 = starts[i];
        const Vector x1 = flow_forward(models[i], x0, T).terminal_state + T * v;
        errs.push_back(rel_error(models[i], x0, x1,
                                 synthesize(models[i], {x0, x1, T, method, std::nullopt}), T));
      }
      medians.push_back(h::median(errs));
    }
    const double s = slope(ts, medians);
    EXPECT_GE(s, 1.7) << to_string(method);
    EXPECT_LE(s, 2.3) << to_string(method);
  }
}

TEST(SynthesizeForward, StepModeQuadraticInWindow) {
  const auto model = random_model(3, Activation::tanh(), 1.2);
  const Vector x0 = normal_vector(3);
  const Vector v = Vector::Ones(3).normalized();
  std::vector<double> taus{0.4, 0.2, 0.1}, errs;
  const double T = 0.4;
  for (double tau : taus) {
    const Vector x1 = flow_forward(model, x0, T).terminal_state + tau * v;
    errs.push_back(rel_error(model, x0, x1, synthesize_forward(model, {x0, x1, T, Method::ForwardNominal, tau}), T));
  }
  EXPECT_LT(errs[2], errs[0]);
}

TEST(SynthesizeForward, UnderactuatedSetsImageFlag) {
  const auto model = random_model(4, Activation::tanh()).with_input(canonical_input(4, 2));
  const Vector x0 = normal_vector(4), x1 = normal_vector(4);
  const auto r = synthesize_forward(model, {x0, x1, 1.0, Method::ForwardNominal, std::nullopt});
  EXPECT_TRUE(r.not_in_image);
  EXPECT_EQ(r.active_input().size(), 2);
}

TEST(SynthesizeBackward, LinearReduction) {
  const auto model = random_model(5, Activation::linear());
  const Vector x0 = normal_vector(5), x1 = normal_vector(5);
  const auto lin = synthesize_linear(model, {x0, x1, 0.9, Method::LinearExact, std::nullopt});
  const auto bwd = synthesize_backward(model, {x0, x1, 0.9, Method::BackwardNominal, std::nullopt});
  EXPECT_LT((lin.active_input() - bwd.active_input()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(SynthesizeBackward, TargetOnFreeFlow) {
  const auto model = random_model(4, Activation::tanh());
  const Vector x0 = normal_vector(4);
  const Vector x1 = flow_forward(model, x0, 1.0).terminal_state;
  const auto r = synthesize_backward(model, {x0, x1, 1.0, Method::BackwardNominal, std::nullopt});
  EXPECT_LT(r.active_input().norm(), 1e-8);
}

TEST(SynthesizeBackward, PropagatesDivergence) {
  const NetworkModel model(Vector::Constant(2, 50.0), Matrix::Zero(2, 2), Matrix::Identity(2, 2),
                           Activation::tanh());
  EXPECT_THROW(synthesize_backward(model, {Vector::Zero(2), Vector::Ones(2), 1.0,
                                           Method::BackwardNominal, std::nullopt}),
               Divergence);
}

TEST(LinearReductionIdentity, AllLinearFormulasAgree) {
  int checked = 0;
  while (checked < 10) {
    const auto model = random_model(4, Activation::linear(), 2.0);
    std::uniform_real_distribution<double> ut(0.1, 5.0);
    const double T = ut(rng());
    if (spectral_condition(model.linear_part(), T).margin <= 0.1) continue;
    ++checked;
    const Vector x0 = normal_vector(4), x1 = normal_vector(4);
    const Vector a = synthesize_linear(model, {x0, x1, T, Method::LinearExact, std::nullopt}).active_input();
    const Vector f = synthesize_forward(model, {x0, x1, T, Method::ForwardNominal, std::nullopt}).active_input();
    const Vector b = synthesize_backward(model, {x0, x1, T, Method::BackwardNominal, std::nullopt}).active_input();
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    EXPECT_LT((a - f).cwiseAbs().maxCoeff(), 1e-8 * scale);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-8 * scale);
  }
}

TEST(SynthesizeLinearized, FormulaTranscription) {
  const auto model = random_model(3, Activation::tanh());
  const Vector x0 = normal_vector(3), x1 = normal_vector(3);
  const double T = 0.7;
  const auto r = synthesize_linearized(model, {x0, x1, T, Method::LinearizedAtX0, std::nullopt});
  const Matrix a = drift_jacobian(model, x0);
  const Matrix e = linalg::matexp(a, T);
  const Vector oracle =
      (e - Matrix::Identity(3, 3)).inverse() * a * (x1 - e * x0) - drift(model, x0);
  EXPECT_LT((r.active_input() - oracle).norm() / oracle.norm(), 1e-10);
}

TEST(SynthesizeLinearized, LinearActivationTranscription) {
  const auto model = random_model(3, Activation::linear());
  const Vector x0 = normal_vector(3), x1 = normal_vector(3);
  const auto lin = synthesize_linear(model, {x0, x1, 1.0, Method::LinearExact, std::nullopt});
  const auto r = synthesize_linearized(model, {x0, x1, 1.0, Method::LinearizedAtX0, std::nullopt});
  const Vector expected = lin.active_input() - model.linear_part() * x0;
  EXPECT_LT((r.active_input() - expected).norm(), 1e-10 * expected.norm());
}

TEST(SynthesizeLinearized, TargetOnLinearFlow) {
  const auto model = random_model(3, Activation::tanh());
  const Vector x0 = normal_vector(3);
  const Matrix a = drift_jacobian(model, x0);
  const Vector x1 = linalg::matexp(a, 1.0) * x0;
  const auto r = synthesize_linearized(model, {x0, x1, 1.0, Method::LinearizedAtX0, std::nullopt});
  EXPECT_LT((r.active_input() + drift(model, x0)).norm(), 1e-12);
}

TEST(SynthesizeLinearized, RequiresIdentityInput) {
  const auto model = random_model(3, Activation::tanh()).with_input(canonical_input(3, 2));
  EXPECT_THROW(synthesize_linearized(model, {normal_vector(3), normal_vector(3), 1.0,
                                             Method::LinearizedAtX0, std::nullopt}),
               DimensionError);
}

TEST(SynthesizeLinearized, WorseThanForwardAtLongHorizon) {
  const auto model = random_model(2, Activation::tanh(), 1.5);
  int forward_better = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const Vector x0 = normal_vector(2);
    const double T = 4.0;
    const Vector x1 = flow_forward(model, x0, T).terminal_state + normal_vector(2, 0.1);
    const double ef = rel_error(model, x0, x1, synthesize_forward(model, {x0, x1, T, Method::ForwardNominal, std::nullopt}), T);
    const double el = rel_error(model, x0, x1, synthesize_linearized(model, {x0, x1, T, Method::LinearizedAtX0, std::nullopt}), T);
    if (el > ef) ++forward_better;
  }
  EXPECT_GE(forward_better, 8);
}

TEST(SynthesizeLinearizedActuated, RestrictsToActuatedCoordinates) {
  const auto full = random_model(4, Activation::tanh());
  const auto under = full.with_input(canonical_input(4, 2));
  const Vector x0 = normal_vector(4), x1 = normal_vector(4);
  const SynthesisRequest req{x0, x1, 1.0, Method::LinearizedAtX0, std::nullopt};
  const Vector u_full = synthesize_linearized(full, req).active_input();
  const Vector u = synthesize_linearized_actuated(under, req).active_input();
  EXPECT_EQ(u, u_full.head(2));
}

TEST(ReachableChart, DimensionAndKernel) {
  const auto model = random_model(3, Activation::tanh()).with_input(canonical_input(3, 2));
  const Vector x0 = normal_vector(3);
  const auto chart = reachable_chart(model, x0, 0.5);
  ASSERT_EQ(chart.basis.basis.cols(), 2);
  EXPECT_LT((chart.constrained_rows * chart.basis.basis).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(chart.actuated_rows.rows(), 2);
  EXPECT_EQ(chart.constrained_rows.rows(), 1);
  EXPECT_LT((chart.anchor - flow_forward(model, x0, 0.5).terminal_state).norm(), 1e-14);
}

TEST(ReachableChart, DecoupledDiagonalGivesCoordinateSpan) {
  const NetworkModel model(Vector::Ones(4), Matrix::Zero(4, 4), canonical_input(4, 2),
                           Activation::linear());
  const auto chart = reachable_chart(model, normal_vector(4), 1.0);
  EXPECT_LT(chart.basis.basis.bottomRows(2).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((chart.basis.basis.topRows(2).transpose() * chart.basis.basis.topRows(2) -
             Matrix::Identity(2, 2)).norm(), 1e-14);
}

TEST(ReachableChart, RequiresCanonicalInput) {
  const auto model = random_model(3, Activation::tanh()).with_input(normal_matrix(3, 2, 1.0));
  EXPECT_THROW(reachable_chart(model, normal_vector(3), 0.5), DimensionError);
}

TEST(ReachableChart, FullActuationIsWholeSpace) {
  const auto model = random_model(3, Activation::tanh());
  const auto chart = reachable_chart(model, normal_vector(3), 0.5);
  EXPECT_EQ(chart.basis.basis, Matrix::Identity(3, 3));
  EXPECT_EQ(chart.constrained_rows.rows(), 0);
}

TEST(ReachableControl, AnchorNeedsNoInput) {
  const auto model = random_model(5, Activation::tanh()).with_input(canonical_input(5, 3));
  const auto chart = reachable_chart(model, normal_vector(5), 0.5);
  EXPECT_EQ(reachable_control(chart, chart.anchor), Vector::Zero(3));
}

TEST(ReachableControl, OnChartTargetsConvergeQuadratically) {
  const auto model = random_model(8, Activation::tanh()).with_input(canonical_input(8, 4));
  const Vector x0 = normal_vector(8);
  const Vector xi = normal_vector(4, 0.1);
  std::vector<double> errs;
  for (double T : {0.25, 0.125}) {
    const auto chart = reachable_chart(model, x0, T);
    // Offset scaled with T so that x1 − φ_T(x0) = O(T).
    const Vector x1 = chart.anchor + chart.basis.basis * (xi * T / 0.25);
    EXPECT_LT((chart.constrained_rows * (x1 - chart.anchor)).cwiseAbs().maxCoeff(), 1e-9);
    const Vector u = reachable_control(chart, x1);
    const Vector end = simulate_controlled(model, x0, u, T).terminal_state;
    errs.push_back((end - x1).norm() / (x1 - x0).norm());
  }
  EXPECT_LT(errs[0], 5e-2);
  const double ratio = errs[0] / errs[1];
  EXPECT_GT(ratio, 2.5);
  EXPECT_LT(ratio, 6.0);
}

TEST(ReachableControl, OrthogonalOffsetIsOffChart) {
  const auto model = random_model(6, Activation::tanh()).with_input(canonical_input(6, 3));
  const auto chart = reachable_chart(model, normal_vector(6), 0.25);
  const Matrix& q = chart.basis.basis;
  Vector v = normal_vector(6);
  v -= q * (q.transpose() * v);
  v *= 0.1 / v.norm();
  EXPECT_THROW(reachable_control(chart, chart.anchor + v), TargetOffChart);
}

TEST(Synthesize, MindyModelsAreSupported) {
  const Eigen::Index d = 4;
  const NetworkModel model(Vector::Ones(d), normal_matrix(d, d, 0.2), Matrix::Identity(d, d),
                           Activation::mindy(Vector::Constant(d, 1.0)));
  const Vector x0 = normal_vector(d);
  const double T = 0.1;
  const Vector x1 = flow_forward(model, x0, T).terminal_state + T * Vector::Ones(d) * 0.1;
  for (auto m : {Method::ForwardNominal, Method::BackwardNominal}) {
    const auto r = synthesize(model, {x0, x1, T, m, std::nullopt});
    EXPECT_LT(rel_error(model, x0, x1, r, T), 0.05) << to_string(m);
  }
}
