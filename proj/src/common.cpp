#include "tfo/common.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace tfo {

std::string_view to_string(Team t) { return t == Team::Home ? "home" : "visitor"; }

Team team_from_string(std::string_view s) {
  if (s == "home" || s == "HOME" || s == "Home") return Team::Home;
  if (s == "visitor" || s == "VISITOR" || s == "Visitor" || s == "away") return Team::Visitor;
  throw Error(ErrorCode::InvalidArgument, "unknown team '" + std::string(s) + "'");
}

std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::Usage: return "Usage";
    case ErrorCode::MalformedClock: return "MalformedClock";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::DegenerateGroups: return "DegenerateGroups";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::SeasonOverlap: return "SeasonOverlap";
    case ErrorCode::PositivityViolation: return "PositivityViolation";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NonConvergence: return "NonConvergence";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

ErrorKind Error::kind() const {
  switch (code_) {
    case ErrorCode::Usage:
      return ErrorKind::Usage;
    case ErrorCode::RankDeficient:
    case ErrorCode::NonConvergence:
    case ErrorCode::DegenerateGroups:
      return ErrorKind::Numerical;
    default:
      return ErrorKind::Data;
  }
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -INFINITY;
    if (p == 1.0) return INFINITY;
    throw Error(ErrorCode::InvalidArgument, "normal_quantile needs p in [0,1]");
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
  return x - u / (1 + x * u / 2);
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = (double(values.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - double(lo)) * (values[hi] - values[lo]);
}

unsigned worker_threads() {
  if (const char* env = std::getenv("TFO_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return unsigned(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const unsigned threads = std::min<std::size_t>(worker_threads(), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the combined state
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace tfo
