#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace strategio {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Intervention index in {0, ..., k-1}; 0 is control.
using Intervention = int;

enum class ErrorCode {
  InvalidArgument = 1,
  DimensionMismatch,
  RankDeficient,
  Infeasible,
  NotConverged,
  Parse,
  Io,
  Unsupported,
  BoundViolation,
  Degenerate,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace strategio
