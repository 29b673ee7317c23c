#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace nbf {

using cdouble = std::complex<double>;
using Rng = std::mt19937_64;

/// Error type thrown by the whole toolkit. The CLI maps it to exit code 1,
/// config/usage problems to exit code 2.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

namespace detail {
inline void require_fail(const char* expr, const std::string& msg) {
  std::ostringstream os;
  os << msg << " (violated: " << expr << ")";
  throw Error(os.str());
}
}  // namespace detail

#define NBF_REQUIRE(cond, msg)                    \
  do {                                            \
    if (!(cond)) nbf::detail::require_fail(#cond, (msg)); \
  } while (0)

constexpr double kPi = 3.14159265358979323846;

/// Number of worker threads used by the OpenMP kernels. 1 guarantees
/// bit-identical output across runs.
void set_threads(int n);
int threads();

}  // namespace nbf
