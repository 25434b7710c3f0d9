// Shared types, errors and small numeric helpers used across the library.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace tfo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Team { Home, Visitor };

inline Team opponent(Team t) { return t == Team::Home ? Team::Visitor : Team::Home; }
std::string_view to_string(Team t);
Team team_from_string(std::string_view s);

/// Broad error class; the CLI maps it to an exit code.
enum class ErrorKind { Usage, Data, Numerical };

enum class ErrorCode {
  Usage,
  MalformedClock,
  MalformedCsv,
  MissingColumn,
  SchemaMismatch,
  DegenerateGroups,
  InsufficientData,
  SeasonOverlap,
  PositivityViolation,
  InvalidArgument,
  RankDeficient,
  NonConvergence,
};

std::string_view to_string(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const { return code_; }
  ErrorKind kind() const;

 private:
  ErrorCode code_;
};

// Statistics helpers.

template <typename Scalar>
Scalar normal_cdf(Scalar x) {
  return Scalar(0.5) * std::erfc(-x / std::sqrt(Scalar(2)));
}

template <typename Scalar>
Scalar normal_pdf(Scalar x) {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return Scalar(kInvSqrt2Pi) * std::exp(-Scalar(0.5) * x * x);
}

/// Inverse standard normal cdf (Acklam's rational approximation, refined by one
/// Halley step).
double normal_quantile(double p);

/// Two-sided p-value of a z statistic.
inline double two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }
/// One-sided p-value for H1: statistic > 0.
inline double upper_p(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

template <typename Derived>
double sample_sd(const Eigen::MatrixBase<Derived>& v) {
  const auto n = v.size();
  if (n < 2) return 0.0;
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / double(n - 1));
}

/// Quantile with linear interpolation between order statistics (R type 7).
double quantile(std::vector<double> values, double prob);

/// Number of worker threads: TFO_THREADS when set, else hardware concurrency.
unsigned worker_threads();

/// Runs body(i) for i in [0, n) on up to worker_threads() threads. Each index is
/// visited exactly once; results must be written to per-index slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Deterministic 64-bit seed for a (base seed, stream index) pair.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace tfo
