#include "aptfloquet/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace apt {

namespace {

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

void require_finite(const Matrix2& a, const char* op) {
  if (!a.is_finite()) throw DomainError(std::string(op) + ": non-finite matrix entry");
}

// Principal log with the negative real axis mapped to +pi.
Complex principal_log(Complex z, bool& on_cut) {
  const double r = std::abs(z);
  if (z.real() < 0.0 && std::abs(z.imag()) <= 1e-12 * r) {
    on_cut = true;
    return {std::log(r), std::numbers::pi};
  }
  return std::log(z);
}

// sqrt(((a11 - a22)/2)^2 + a12 a21): half the eigenvalue splitting.
Complex half_splitting(const Matrix2& a) {
  const Complex h = 0.5 * (a(0, 0) - a(1, 1));
  return std::sqrt(h * h + a(0, 1) * a(1, 0));
}

// Unit eigenvector for eigenvalue `lambda`, taken from whichever row of
// (A - lambda I) gives the better-conditioned null vector.
Vector2 null_vector(const Matrix2& a, Complex lambda) {
  const Vector2 from_row1{a(0, 1), lambda - a(0, 0)};
  const Vector2 from_row2{lambda - a(1, 1), a(1, 0)};
  return from_row1.norm() >= from_row2.norm() ? from_row1.normalized() : from_row2.normalized();
}

}  // namespace

double Vector2::norm() const { return std::sqrt(std::norm(up) + std::norm(down)); }

Vector2 Vector2::normalized() const {
  const double n = norm();
  if (!(n > 0.0)) throw DomainError("cannot normalize a zero vector");
  return {up / n, down / n};
}

bool Vector2::is_finite() const { return finite(up) && finite(down); }

Complex inner(const Vector2& a, const Vector2& b) {
  return std::conj(a.up) * b.up + std::conj(a.down) * b.down;
}

Matrix2 Matrix2::outer(const Vector2& a, const Vector2& b) {
  return {a.up * std::conj(b.up), a.up * std::conj(b.down), a.down * std::conj(b.up),
          a.down * std::conj(b.down)};
}

Matrix2 Matrix2::operator+(const Matrix2& o) const {
  Matrix2 r = *this;
  r += o;
  return r;
}

Matrix2 Matrix2::operator-(const Matrix2& o) const {
  return {m_[0] - o.m_[0], m_[1] - o.m_[1], m_[2] - o.m_[2], m_[3] - o.m_[3]};
}

Matrix2 Matrix2::operator-() const { return {-m_[0], -m_[1], -m_[2], -m_[3]}; }

Matrix2 Matrix2::operator*(const Matrix2& o) const {
  return {m_[0] * o.m_[0] + m_[1] * o.m_[2], m_[0] * o.m_[1] + m_[1] * o.m_[3],
          m_[2] * o.m_[0] + m_[3] * o.m_[2], m_[2] * o.m_[1] + m_[3] * o.m_[3]};
}

Matrix2 Matrix2::operator*(Complex s) const { return {m_[0] * s, m_[1] * s, m_[2] * s, m_[3] * s}; }

Matrix2 Matrix2::operator/(Complex s) const { return {m_[0] / s, m_[1] / s, m_[2] / s, m_[3] / s}; }

Vector2 Matrix2::operator*(const Vector2& v) const {
  return {m_[0] * v.up + m_[1] * v.down, m_[2] * v.up + m_[3] * v.down};
}

Matrix2& Matrix2::operator+=(const Matrix2& o) {
  for (std::size_t i = 0; i < 4; ++i) m_[i] += o.m_[i];
  return *this;
}

Matrix2& Matrix2::operator*=(Complex s) {
  for (auto& x : m_) x *= s;
  return *this;
}

Matrix2 Matrix2::adjoint() const {
  return {std::conj(m_[0]), std::conj(m_[2]), std::conj(m_[1]), std::conj(m_[3])};
}

Matrix2 Matrix2::inverse() const {
  const Complex d = det();
  if (std::abs(d) == 0.0) throw DomainError("inverse: singular matrix");
  return Matrix2{m_[3], -m_[1], -m_[2], m_[0]} / d;
}

double Matrix2::frobenius_norm() const {
  double s = 0.0;
  for (const auto& x : m_) s += std::norm(x);
  return std::sqrt(s);
}

bool Matrix2::is_finite() const {
  return std::all_of(m_.begin(), m_.end(), [](Complex z) { return finite(z); });
}

bool Matrix2::is_hermitian(double tol) const { return distance(*this, adjoint()) <= tol; }

double distance(const Matrix2& a, const Matrix2& b) { return (a - b).frobenius_norm(); }

Complex sinhc(Complex z) {
  if (std::abs(z) < 1e-4) {
    const Complex z2 = z * z;
    return 1.0 + z2 / 6.0 + z2 * z2 / 120.0;
  }
  return std::sinh(z) / z;
}

Matrix2 mat_exp(const Matrix2& a) {
  require_finite(a, "mat_exp");
  const Complex half_trace = 0.5 * a.trace();
  const Matrix2 b = a - Matrix2::identity() * half_trace;
  const Complex mu = half_splitting(a);
  return (Matrix2::identity() * std::cosh(mu) + b * sinhc(mu)) * std::exp(half_trace);
}

LogResult mat_log_principal(const Matrix2& u) {
  require_finite(u, "mat_log_principal");
  if (std::abs(u.det()) <= 1e-14) throw DomainError("mat_log_principal: matrix is singular");

  const Complex m = 0.5 * u.trace();
  const Matrix2 b = u - Matrix2::identity() * m;
  const Complex mu = half_splitting(u);

  // log(U) = c0 I + c1 B with c0 = (log l1 + log l2)/2, c1 = (log l1 - log l2)/(2 mu).
  LogResult out;
  Complex c0;
  Complex c1;
  if (std::abs(mu) <= 1e-4 * std::abs(m)) {
    const Complex x = mu / m;
    const Complex x2 = x * x;
    c0 = principal_log(m, out.on_branch_cut) - 0.5 * x2 * (1.0 + 0.5 * x2);
    c1 = (1.0 + x2 / 3.0 + x2 * x2 / 5.0) / m;
  } else {
    const Complex l1 = principal_log(m + mu, out.on_branch_cut);
    const Complex l2 = principal_log(m - mu, out.on_branch_cut);
    c0 = 0.5 * (l1 + l2);
    c1 = (l1 - l2) / (2.0 * mu);
  }
  out.value = Matrix2::identity() * c0 + b * c1;
  return out;
}

std::pair<Complex, Complex> characteristic_roots(const Matrix2& a) {
  // x^2 + p x + d = 0 with p = -tr A; larger-magnitude root first, the
  // other from Vieta to avoid cancellation.
  const Complex p = -a.trace();
  const Complex d = a.det();
  Complex disc = std::sqrt(p * p - 4.0 * d);
  if (std::real(std::conj(p) * disc) < 0.0) disc = -disc;
  const Complex q = -0.5 * (p + disc);
  if (std::abs(q) == 0.0) return {0.0, 0.0};
  return {q, d / q};
}

Eigen2 eig2(const Matrix2& a) {
  require_finite(a, "eig2");
  const double scale = std::max(1.0, a.frobenius_norm());
  const Complex m = 0.5 * a.trace();
  const Complex s = half_splitting(a);
  const Matrix2 b = a - Matrix2::identity() * m;

  Eigen2 out;
  out.values = {m + s, m - s};
  const bool re_tie = std::abs(out.values[0].real() - out.values[1].real()) <= 1e-12 * scale;
  const bool swap = re_tie ? out.values[1].imag() > out.values[0].imag()
                           : out.values[1].real() > out.values[0].real();
  if (swap) std::swap(out.values[0], out.values[1]);

  // Scalar matrix: degenerate but diagonalizable.
  if (b.frobenius_norm() <= 1e-14 * scale) {
    out.vectors = {basis::up, basis::down};
    out.condition = 1.0;
    return out;
  }

  const Vector2 v1 = null_vector(a, out.values[0]);
  const Vector2 v2 = null_vector(a, out.values[1]);
  const double overlap = std::min(1.0, std::abs(inner(v1, v2)));
  const bool coalesced = std::abs(out.values[0] - out.values[1]) < 1e-8 * scale;
  if (coalesced || overlap > 1.0 - 1e-10) {
    out.defective = true;
    const Vector2 v = null_vector(a, m);
    out.vectors = {v, v};
    out.condition = 0.0;
    return out;
  }
  out.vectors = {v1, v2};
  out.condition = std::sqrt((1.0 - overlap) / (1.0 + overlap));
  return out;
}

}  // namespace apt
