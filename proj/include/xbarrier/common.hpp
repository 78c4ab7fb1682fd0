#pragma once

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <string>

namespace xbarrier {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad inputs: non-positive sizes, unknown ids, inconsistent options.
class InvalidConfig : public Error {
public:
  using Error::Error;
};

/// An interface splits one element into more than two pieces.
class UnsupportedTopology : public Error {
public:
  using Error::Error;
};

/// A gap evaluation reached u_N <= 0 where the barrier is undefined.
class PenetrationError : public Error {
public:
  using Error::Error;
};

/// Factorization failed or an element mapping is degenerate.
class SingularSystem : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// Unit tangent obtained by rotating a unit normal by -90 degrees, so that
/// (tangent, normal) is a right-handed frame.
inline Vec2 tangent_of(const Vec2 &n) { return {n.y(), -n.x()}; }

inline double cross2(const Vec2 &a, const Vec2 &b) {
  return a.x() * b.y() - a.y() * b.x();
}

/// Contiguous views of Eigen vectors for span-based interfaces.
inline std::span<const double> view(const Eigen::VectorXd &v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
inline std::span<double> view(Eigen::VectorXd &v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

} // namespace xbarrier
