#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <optional>
#include <stdexcept>
#include <string>

// Number types used throughout: exact rationals (GMP) for affine systems and
// golden endpoint data, high-precision floats (MPFR) for everything nonlinear.
// KSPLIT_REAL_DIGITS is decimal digits of the float mantissa; the default of 40
// is ~133 bits.

#ifndef KSPLIT_REAL_DIGITS
#define KSPLIT_REAL_DIGITS 40
#endif

namespace ksplit {

namespace mp = boost::multiprecision;

using Rat  = mp::number<mp::gmp_rational, mp::et_off>;
using Real = mp::number<mp::mpfr_float_backend<KSPLIT_REAL_DIGITS>, mp::et_off>;

Real real_pi();

double to_double(const Real& x);
double to_double(const Rat& x);

// Every Real is a dyadic rational; this conversion is exact.
Rat rat_from_real(const Real& x);

// "2/5", "-3/7", "4" -> exact rational. nullopt on malformed input.
std::optional<Rat> parse_fraction(const std::string& s);
Rat parse_fraction_or_throw(const std::string& s);
std::string fraction_str(const Rat& r);

// Best rational p/q with q <= qcap and |q*x - p| <= tol, via continued
// fractions; nullopt if no convergent qualifies.
std::optional<Rat> rationalize(const Real& x, const Real& tol, long long qcap);

// Error vocabulary shared by all modules.
enum class Errc {
  GapOrOverlap,
  NotContracting,
  NotIncreasing,
  ConjugacyInvalid,
  DepthExceeded,
  BadSymbol,
  NoConvergence,
  EmptyWord,
  BudgetExceeded,
  EmptyLedger,
  EmptyInput,
  NonPositiveVector,
  DepthTooShallow,
  PeriodBudgetExceeded,
  NotLattice,
  ReductionUnstable,
  QuadratureFailure,
  ConfigInvalid,
  TaskFailed,
  GoldenMismatch,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace ksplit
