#include "constctl/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "constctl/errors.hpp"

namespace constctl::linalg {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Largest ‖A‖₁ for which the [13/13] Padé approximant is accurate to unit
// roundoff without scaling.
constexpr double kTheta13 = 5.371920351148152;

constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0,  129060195264000.0,   10559470521600.0,
    670442572800.0,      33522128640.0,       1323241920.0,
    40840800.0,          960960.0,            16380.0,
    182.0,               1.0};

std::string describe(std::string_view what, Eigen::Index r, Eigen::Index c) {
  std::ostringstream os;
  os << what << " (" << r << "x" << c << ")";
  return os.str();
}

}  // namespace

void require_finite(const Matrix& m, std::string_view what) {
  if (m.size() == 0) {
    throw DimensionError(describe(what, m.rows(), m.cols()) + " is empty");
  }
  if (!m.allFinite()) {
    throw DimensionError(std::string(what) + " has non-finite entries");
  }
}

void require_finite(const Vector& v, std::string_view what) {
  if (v.size() == 0) {
    throw DimensionError(std::string(what) + " is empty");
  }
  if (!v.allFinite()) {
    throw DimensionError(std::string(what) + " has non-finite entries");
  }
}

void require_square(const Matrix& m, std::string_view what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionError(describe(what, m.rows(), m.cols()) +
                         " must be square and non-empty");
  }
}

Matrix matexp(const Matrix& a, double t) {
  require_square(a, "matexp argument");
  require_finite(a, "matexp argument");
  if (!std::isfinite(t)) {
    throw DimensionError("matexp time must be finite");
  }
  const Eigen::Index n = a.rows();
  const Matrix ident = Matrix::Identity(n, n);
  if (t == 0.0) {
    return ident;
  }

  Matrix x = t * a;
  const double norm1 = x.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > kTheta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
    x /= std::ldexp(1.0, squarings);
  }

  const Matrix x2 = x * x;
  const Matrix x4 = x2 * x2;
  const Matrix x6 = x4 * x2;
  const auto& b = kPade13;

  const Matrix u_inner = b[13] * x6 + b[11] * x4 + b[9] * x2;
  const Matrix u = x * (x6 * u_inner + b[7] * x6 + b[5] * x4 + b[3] * x2 +
                        b[1] * ident);
  const Matrix v_inner = b[12] * x6 + b[10] * x4 + b[8] * x2;
  const Matrix v =
      x6 * v_inner + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * ident;

  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) {
    r = r * r;
  }
  return r;
}

double Spectrum::max_real_part() const {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& z : values) {
    best = std::max(best, z.real());
  }
  return best;
}

Spectrum eigenvalues(const Matrix& a) {
  require_square(a, "eigenvalue argument");
  require_finite(a, "eigenvalue argument");
  Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    // Eigen's real Schur iteration caps at 40 sweeps per eigenvalue.
    const auto iterations = static_cast<std::size_t>(40 * a.rows());
    throw NumericalError("eigenvalue iteration did not converge after " +
                             std::to_string(iterations) + " iterations",
                         iterations);
  }
  Spectrum out;
  out.values.reserve(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    out.values.push_back(solver.eigenvalues()(i));
  }
  return out;
}

SolveResult solve(const Matrix& a, const Matrix& y,
                  std::optional<double> reference_norm) {
  require_square(a, "solve matrix");
  if (y.rows() != a.rows()) {
    throw DimensionError(describe("solve right-hand side", y.rows(), y.cols()) +
                         " does not match matrix order " +
                         std::to_string(a.rows()));
  }
  const Eigen::PartialPivLU<Matrix> lu(a);
  double rcond = lu.rcond();
  // rcond() reports garbage when a pivot is exactly zero.
  const Vector pivots = lu.matrixLU().diagonal().cwiseAbs();
  if (a.rows() > 0) {
    const double pmax = pivots.maxCoeff();
    rcond = pmax > 0.0 ? std::min(rcond, pivots.minCoeff() / pmax) : 0.0;
  }
  if (reference_norm && *reference_norm > 0.0) {
    const double scale = a.cwiseAbs().colwise().sum().maxCoeff();
    rcond = std::min(rcond, scale / *reference_norm);
  }
  if (!(rcond >= kSingularityThreshold)) {
    std::ostringstream os;
    os << "singular system: reciprocal condition estimate " << rcond
       << " below threshold " << kSingularityThreshold;
    throw SingularSystem(os.str(), rcond);
  }
  return {lu.solve(y), rcond};
}

PseudoInverseResult pseudo_inverse_apply(const Matrix& b, const Vector& y) {
  require_finite(b, "pseudo-inverse matrix");
  if (y.size() != b.rows()) {
    throw DimensionError("pseudo-inverse right-hand side length " +
                         std::to_string(y.size()) + " does not match " +
                         std::to_string(b.rows()) + " rows");
  }
  Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(static_cast<double>(std::max(b.rows(), b.cols())) * kEps);

  PseudoInverseResult out;
  out.solution = svd.solve(y);
  const double ynorm = y.norm();
  out.residual = ynorm > 0.0 ? (b * out.solution - y).norm() / ynorm : 0.0;
  out.not_in_image = out.residual > kImageTolerance;
  return out;
}

KernelBasis kernel_basis(const Matrix& m) {
  KernelBasis out;
  out.ambient_dim = static_cast<std::size_t>(m.cols());
  if (m.cols() == 0) {
    throw DimensionError("kernel_basis needs at least one column");
  }
  if (m.rows() == 0) {
    out.basis = Matrix::Identity(m.cols(), m.cols());
    return out;
  }
  if (m.rows() > m.cols()) {
    throw RankDeficient("kernel_basis: more rows than columns, kernel is trivial",
                        0.0);
  }
  if (!m.allFinite()) {
    throw DimensionError("kernel_basis matrix has non-finite entries");
  }

  const Eigen::Index d = m.cols();
  const Eigen::Index r = m.rows();
  const Eigen::HouseholderQR<Matrix> qr(m.transpose());
  const Matrix rfactor = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();

  const Vector diag = rfactor.diagonal().cwiseAbs();
  const double largest = diag.maxCoeff();
  const double smallest = diag.minCoeff();
  const double cutoff =
      static_cast<double>(d) * 64.0 * kEps * std::max(largest, 1e-300);
  if (!(smallest > cutoff)) {
    std::ostringstream os;
    os << "kernel_basis: R-factor diagonal entry " << smallest
       << " below rank threshold " << cutoff;
    throw RankDeficient(os.str(), smallest);
  }

  const Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  out.basis = q.rightCols(d - r);
  return out;
}

double spectral_norm(const Matrix& a) {
  require_finite(a, "spectral_norm argument");
  if (a.rows() <= 16 && a.cols() <= 16) {
    return Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
  }
  return Eigen::BDCSVD<Matrix>(a).singularValues()(0);
}

}  // namespace constctl::linalg
