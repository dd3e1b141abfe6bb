#pragma once

#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace oqs {

inline constexpr const char* kVersion = "0.1.0";

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RealVec = Eigen::VectorXd;

inline constexpr double kInfBeta = std::numeric_limits<double>::infinity();

// Invalid or inconsistent inputs (bad specs, malformed config files, bad CLI
// arguments).  Maps to exit code 1 in the command-line tool.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures at runtime (non-convergent quadrature, singular solves,
// step-size rejection).  Maps to exit code 2 in the command-line tool.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

inline bool is_infinite_beta(double beta) {
  return std::isinf(beta);
}

}  // namespace oqs
