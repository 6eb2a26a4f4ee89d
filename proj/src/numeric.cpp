#include "ksplit/numeric.hpp"

#include <boost/math/constants/constants.hpp>

#include <cctype>

namespace ksplit {

Real real_pi() { return boost::math::constants::pi<Real>(); }

double to_double(const Real& x) { return x.convert_to<double>(); }
double to_double(const Rat& x) { return x.convert_to<double>(); }

Rat rat_from_real(const Real& x) {
  mpq_t q;
  mpq_init(q);
  mpfr_get_q(q, x.backend().data());
  Rat r(q);
  mpq_clear(q);
  return r;
}

std::optional<Rat> parse_fraction(const std::string& s) {
  if (s.empty()) return std::nullopt;
  auto is_int = [](const std::string& t) {
    if (t.empty()) return false;
    size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
    if (i == t.size()) return false;
    for (; i < t.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(t[i]))) return false;
    return true;
  };
  auto slash = s.find('/');
  try {
    if (slash == std::string::npos) {
      if (!is_int(s)) return std::nullopt;
      return Rat(mp::mpz_int(s));
    }
    std::string num = s.substr(0, slash), den = s.substr(slash + 1);
    if (!is_int(num) || !is_int(den)) return std::nullopt;
    mp::mpz_int d(den);
    if (d == 0) return std::nullopt;
    return Rat(mp::mpz_int(num)) / Rat(d);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

Rat parse_fraction_or_throw(const std::string& s) {
  auto r = parse_fraction(s);
  if (!r) fail(Errc::ConfigInvalid, "malformed fraction '" + s + "'");
  return *r;
}

std::string fraction_str(const Rat& r) {
  std::string s = numerator(r).str();
  if (denominator(r) != 1) s += "/" + denominator(r).str();
  return s;
}

std::optional<Rat> rationalize(const Real& x, const Real& tol, long long qcap) {
  using Int = mp::mpz_int;
  Real v = x;
  Int h0 = 1, k0 = 0;
  Int h1 = Int(mp::floor(v).convert_to<Int>()), k1 = 1;
  for (int iter = 0; iter < 200; ++iter) {
    Rat cand(h1, k1);
    Real resid = abs(Real(k1) * x - Real(h1));
    if (k1 <= qcap && resid <= tol) return cand;
    if (k1 > qcap) return std::nullopt;
    Real frac = v - mp::floor(v);
    if (frac <= 0) return std::nullopt;
    v = 1 / frac;
    Int a = mp::floor(v).convert_to<Int>();
    Int h2 = a * h1 + h0, k2 = a * k1 + k0;
    h0 = h1; k0 = k1; h1 = h2; k1 = k2;
  }
  return std::nullopt;
}

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::GapOrOverlap: return "GapOrOverlap";
    case Errc::NotContracting: return "NotContracting";
    case Errc::NotIncreasing: return "NotIncreasing";
    case Errc::ConjugacyInvalid: return "ConjugacyInvalid";
    case Errc::DepthExceeded: return "DepthExceeded";
    case Errc::BadSymbol: return "BadSymbol";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::EmptyWord: return "EmptyWord";
    case Errc::BudgetExceeded: return "BudgetExceeded";
    case Errc::EmptyLedger: return "EmptyLedger";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::NonPositiveVector: return "NonPositiveVector";
    case Errc::DepthTooShallow: return "DepthTooShallow";
    case Errc::PeriodBudgetExceeded: return "PeriodBudgetExceeded";
    case Errc::NotLattice: return "NotLattice";
    case Errc::ReductionUnstable: return "ReductionUnstable";
    case Errc::QuadratureFailure: return "QuadratureFailure";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::TaskFailed: return "TaskFailed";
    case Errc::GoldenMismatch: return "GoldenMismatch";
  }
  return "UnknownError";
}

}  // namespace ksplit
