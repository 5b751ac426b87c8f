#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace z2h {

using cplx = std::complex<double>;
using u64 = std::uint64_t;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a request exceeds the dense/iterative size guard.
struct ResourceError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

inline int popcount(u64 x) { return __builtin_popcountll(x); }

inline u64 bit(int q) { return u64{1} << q; }

}  // namespace z2h
