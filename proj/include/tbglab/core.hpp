#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tbglab {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double sqrt3 = std::numbers::sqrt3;
inline const cplx I{0.0, 1.0};
inline const cplx omega{-0.5, 0.5 * sqrt3};
inline constexpr double Kmag = 4.0 * pi / 3.0;
inline const cplx zS{0.0, 1.0 / sqrt3};
inline constexpr double lambda_physical = -4.0 * pi / 3.0;

// Error taxonomy shared by every module; the CLI maps kinds to exit codes.
enum class ErrorKind { Config, Precondition, Numeric, Io };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

inline void require(bool ok, const std::string& msg) {
  if (!ok) fail(ErrorKind::Precondition, msg);
}

// <z, w> = Re(z conj(w)), the real inner product on C = R^2.
inline double rdot(cplx z, cplx w) { return z.real() * w.real() + z.imag() * w.imag(); }

inline cplx omega_pow(int l) {
  l = ((l % 3) + 3) % 3;
  return l == 0 ? cplx{1.0, 0.0} : (l == 1 ? omega : std::conj(omega));
}

// Runs body(i) for i in [0, n) on up to `threads` workers. Each index writes only its own
// slot, so results do not depend on scheduling.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace tbglab
