#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace cgflow {

// Invalid user-facing configuration (bad parameter ranges, malformed files,
// unknown keys). The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure at runtime (non-finite state, CFL violation, divergence).
// The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void cat_into(std::ostringstream&) {}
template <typename T, typename... Rest>
void cat_into(std::ostringstream& os, const T& value, const Rest&... rest) {
  os << value;
  cat_into(os, rest...);
}
}  // namespace detail

template <typename... Args>
std::string cat(const Args&... args) {
  std::ostringstream os;
  os.precision(17);
  detail::cat_into(os, args...);
  return os.str();
}

inline bool is_finite(double v) { return std::isfinite(v); }

// Worker count for frame-parallel sections. `requested` <= 0 falls back to the
// CGFLOW_THREADS environment variable, then to 1.
int resolve_thread_count(int requested);

// Runs fn(0..n-1) on up to `threads` workers. Iteration i always writes only
// outputs owned by i, so results are identical for any thread count.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace cgflow
