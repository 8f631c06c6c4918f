#pragma once

#include <complex>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace constctl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

// Reciprocal condition estimates below this make solve() throw.
inline constexpr double kSingularityThreshold = 1e-12;
// Relative residual above which a pseudo-inverse solution is flagged as
// lying outside the image of the matrix.
inline constexpr double kImageTolerance = 1e-6;

// Throws DimensionError when any entry is NaN/Inf or the matrix is empty.
void require_finite(const Matrix& m, std::string_view what);
void require_finite(const Vector& v, std::string_view what);
void require_square(const Matrix& m, std::string_view what);

/// e^{tA} by scaling and squaring with the degree-13 diagonal Padé
/// approximant. Returns the identity exactly for t == 0.
Matrix matexp(const Matrix& a, double t = 1.0);

struct Spectrum {
  std::vector<std::complex<double>> values;

  std::size_t size() const { return values.size(); }
  double max_real_part() const;
};

/// All eigenvalues with algebraic multiplicity.
Spectrum eigenvalues(const Matrix& a);

struct SolveResult {
  Matrix solution;
  double rcond = 0.0;
};

/// Solves A·X = Y by partial-pivot LU.
///
/// `reference_norm`, when given, is the norm of the operands A was formed
/// from (for A = e^{hU} − Id that is ‖e^{hU}‖ + 1). The reported estimate is
/// then min(rcond(A), ‖A‖ / reference_norm), which catches matrices that are
/// pure cancellation noise: such a matrix can look well conditioned on its
/// own scale while carrying no significant digits.
SolveResult solve(const Matrix& a, const Matrix& y,
                  std::optional<double> reference_norm = std::nullopt);

struct PseudoInverseResult {
  Vector solution;
  double residual = 0.0;  // ‖B·u − y‖ / ‖y‖, 0 when y = 0
  bool not_in_image = false;
};

/// Minimum-norm least-squares u = B†y via SVD with the conventional
/// max(rows, cols)·ε·σ_max cutoff.
PseudoInverseResult pseudo_inverse_apply(const Matrix& b, const Vector& y);

struct KernelBasis {
  std::size_t ambient_dim = 0;
  Matrix basis;  // ambient_dim × nullity, orthonormal columns

  std::size_t dimension() const { return static_cast<std::size_t>(basis.cols()); }
};

/// Orthonormal basis of ker M for M of full row rank, from the thin QR
/// factorization of Mᵀ: the trailing columns of the full Q span the kernel.
/// A matrix with zero rows yields the identity basis.
KernelBasis kernel_basis(const Matrix& m);

/// Largest singular value.
double spectral_norm(const Matrix& a);

}  // namespace linalg
}  // namespace constctl
