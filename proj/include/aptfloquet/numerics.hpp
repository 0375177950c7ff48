#pragma once

#include <array>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

namespace apt {

using Complex = std::complex<double>;

inline constexpr Complex kI{0.0, 1.0};

/// Raised when an input lies outside an operation's mathematical domain
/// (non-finite entries, singular matrices, negative eigenvalues, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when an internal consistency assertion fails. Never expected on
/// valid input; indicates a sign or convention bug.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Two-component complex vector in the basis (|up>, |down>).
struct Vector2 {
  Complex up{};
  Complex down{};

  constexpr Vector2() = default;
  constexpr Vector2(Complex u, Complex d) : up(u), down(d) {}

  Vector2 operator+(const Vector2& o) const { return {up + o.up, down + o.down}; }
  Vector2 operator-(const Vector2& o) const { return {up - o.up, down - o.down}; }
  Vector2 operator*(Complex s) const { return {up * s, down * s}; }

  double norm() const;
  Vector2 normalized() const;
  bool is_finite() const;
};

/// <a|b>, conjugate-linear in the first argument.
Complex inner(const Vector2& a, const Vector2& b);

/// Dense 2x2 complex matrix, row-major, basis (|up>, |down>) so that
/// sigma_z = diag(+1, -1).
class Matrix2 {
 public:
  constexpr Matrix2() = default;
  constexpr Matrix2(Complex a11, Complex a12, Complex a21, Complex a22) : m_{a11, a12, a21, a22} {}

  static constexpr Matrix2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Matrix2 zero() { return {}; }
  static Matrix2 outer(const Vector2& a, const Vector2& b);  // |a><b|
  static Matrix2 projector(const Vector2& v) { return outer(v, v); }

  constexpr Complex& operator()(int r, int c) { return m_[static_cast<std::size_t>(2 * r + c)]; }
  constexpr const Complex& operator()(int r, int c) const { return m_[static_cast<std::size_t>(2 * r + c)]; }

  const std::array<Complex, 4>& entries() const { return m_; }

  Matrix2 operator+(const Matrix2& o) const;
  Matrix2 operator-(const Matrix2& o) const;
  Matrix2 operator-() const;
  Matrix2 operator*(const Matrix2& o) const;
  Matrix2 operator*(Complex s) const;
  Matrix2 operator/(Complex s) const;
  Vector2 operator*(const Vector2& v) const;
  Matrix2& operator+=(const Matrix2& o);
  Matrix2& operator*=(Complex s);

  bool operator==(const Matrix2&) const = default;

  Complex trace() const { return m_[0] + m_[3]; }
  Complex det() const { return m_[0] * m_[3] - m_[1] * m_[2]; }
  Matrix2 adjoint() const;
  Matrix2 inverse() const;
  double frobenius_norm() const;
  bool is_finite() const;
  bool is_hermitian(double tol) const;

 private:
  std::array<Complex, 4> m_{};
};

inline Matrix2 operator*(Complex s, const Matrix2& m) { return m * s; }
inline Matrix2 operator*(double s, const Matrix2& m) { return m * Complex(s); }

/// Frobenius distance ||a - b||_F.
double distance(const Matrix2& a, const Matrix2& b);

namespace pauli {
inline constexpr Matrix2 I = Matrix2::identity();
inline constexpr Matrix2 X{0.0, 1.0, 1.0, 0.0};
inline constexpr Matrix2 Y{0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0};
inline constexpr Matrix2 Z{1.0, 0.0, 0.0, -1.0};
}  // namespace pauli

namespace basis {
inline constexpr Vector2 up{1.0, 0.0};
inline constexpr Vector2 down{0.0, 1.0};
}  // namespace basis

/// Eigen-decomposition of a 2x2 matrix.
///
/// Values are sorted by real part, then imaginary part, both descending.
/// When `defective` is set the two values agree within tolerance and only
/// one independent eigenvector exists; it is reported in both slots.
/// `condition` is the reciprocal of the 2-norm condition number of the
/// eigenvector basis (1 for orthogonal vectors, 0 at coalescence).
struct Eigen2 {
  std::array<Complex, 2> values{};
  std::array<Vector2, 2> vectors{};
  bool defective = false;
  double condition = 1.0;
};

/// Result of the principal matrix logarithm. `on_branch_cut` is set when an
/// eigenvalue sits on the negative real axis; its log is then taken with
/// imaginary part +pi.
struct LogResult {
  Matrix2 value;
  bool on_branch_cut = false;
};

/// e^A through the trace split A = (tr A / 2) I + B, tr B = 0:
/// e^A = e^{tr A / 2} (cosh(mu) I + sinh(mu)/mu B), mu^2 = -det B.
/// Exact for nilpotent B.
Matrix2 mat_exp(const Matrix2& a);

/// Principal logarithm, eigenvalue imaginary parts in (-pi, pi].
/// Throws DomainError for |det U| <= 1e-14 or non-finite input.
LogResult mat_log_principal(const Matrix2& u);

/// Closed-form eigenpairs with defectiveness detection.
Eigen2 eig2(const Matrix2& a);

/// Roots of the characteristic polynomial x^2 - tr(A) x + det(A), in no
/// particular order. Kept separate from eig2 for cross-checking.
std::pair<Complex, Complex> characteristic_roots(const Matrix2& a);

/// sinh(z)/z, analytic at 0.
Complex sinhc(Complex z);

}  // namespace apt
