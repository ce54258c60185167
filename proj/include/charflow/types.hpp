#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace charflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input violates an operation's precondition (dimensions, ordering, signs).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A geometric construction is undefined at the requested point.
class DegeneratePoint : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class NoRealSolution : public Error {
 public:
  using Error::Error;
};

// Raised by the integrator; carries the last parameter value with a finite state.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double last_valid_s)
      : Error(what), last_valid_s_(last_valid_s) {}
  double last_valid_s() const { return last_valid_s_; }

 private:
  double last_valid_s_;
};

inline double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }
inline double inf_norm(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace charflow
