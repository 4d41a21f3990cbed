#pragma once
// Wigner 3j and 6j symbols via the Racah summation formulas.
//
// Arguments are half-integers passed as doubles (validated). Up to j = 20
// every factorial is handled as an exact big-integer rational, so the
// returned double is the correctly rounded value of (rational) * sqrt
// (rational); beyond j = 20 the evaluation falls back to log-factorial
// arithmetic (no overflow, ~1e-12 relative).

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace spinroute {

namespace detail {

using bigint = boost::multiprecision::cpp_int;
using bigrat = boost::multiprecision::cpp_rational;

inline int as_two(double j, const char* what) {
  const double two = 2.0 * j;
  const double r = std::round(two);
  if (std::abs(two - r) > 1e-9)
    throw std::invalid_argument(std::string(what) + " must be integer or half-integer");
  return static_cast<int>(r);
}

inline const bigint& fact(int n) {
  static std::vector<bigint> cache{bigint(1)};
  if (n < 0) throw std::logic_error("factorial of negative");
  while (static_cast<int>(cache.size()) <= n)
    cache.push_back(cache.back() * static_cast<int>(cache.size()));
  return cache[static_cast<size_t>(n)];
}

inline double lfact(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

// triangle coefficient Delta(a,b,c) as a rational (arguments doubled)
inline bool triangle_ok(int ta, int tb, int tc) {
  return ta + tb >= tc && tb + tc >= ta && tc + ta >= tb && (ta + tb + tc) % 2 == 0;
}

inline bigrat triangle_rat(int ta, int tb, int tc) {
  return bigrat(fact((ta + tb - tc) / 2) * fact((ta - tb + tc) / 2) *
                    fact((-ta + tb + tc) / 2),
                fact((ta + tb + tc) / 2 + 1));
}

inline double triangle_log(int ta, int tb, int tc) {
  return lfact((ta + tb - tc) / 2) + lfact((ta - tb + tc) / 2) +
         lfact((-ta + tb + tc) / 2) - lfact((ta + tb + tc) / 2 + 1);
}

}  // namespace detail

// Wigner 3j symbol (j1 j2 j3; m1 m2 m3). Returns 0 when the triangle rule
// or m1+m2+m3 = 0 fails; throws on negative j, |m| > j, or arguments that
// are not (half-)integers with integral j - m.
inline double wigner_3j(double j1, double j2, double j3, double m1, double m2,
                        double m3) {
  using namespace detail;
  const int tj1 = as_two(j1, "j1"), tj2 = as_two(j2, "j2"), tj3 = as_two(j3, "j3");
  const int tm1 = as_two(m1, "m1"), tm2 = as_two(m2, "m2"), tm3 = as_two(m3, "m3");
  if (tj1 < 0 || tj2 < 0 || tj3 < 0) throw std::invalid_argument("negative j");
  if (std::abs(tm1) > tj1 || std::abs(tm2) > tj2 || std::abs(tm3) > tj3)
    throw std::invalid_argument("|m| exceeds j");
  if ((tj1 - tm1) % 2 || (tj2 - tm2) % 2 || (tj3 - tm3) % 2)
    throw std::invalid_argument("m - j must be integral");
  if (tm1 + tm2 + tm3 != 0) return 0.0;
  if (!triangle_ok(tj1, tj2, tj3)) return 0.0;

  // Racah sum bounds (all quantities are plain integers = doubled/2)
  const int a1 = (tj1 + tj2 - tj3) / 2;
  const int a2 = (tj1 - tm1) / 2;
  const int a3 = (tj2 + tm2) / 2;
  const int b1 = (tj2 - tj3 - tm1) / 2;  // t >= b1
  const int b2 = (tj1 - tj3 + tm2) / 2;  // t >= b2
  const int tmin = std::max(0, std::max(b1, b2));
  const int tmax = std::min(a1, std::min(a2, a3));
  if (tmin > tmax) return 0.0;

  const int jsum = (tj1 + tj2 + tj3) / 2;
  const bool exact = jsum <= 60;  // j <= 20 each guarantees this
  const int phase_exp = (tj1 - tj2 - tm3) / 2;
  const double sign = (phase_exp % 2 == 0) ? 1.0 : -1.0;

  if (exact) {
    bigrat sum = 0;
    for (int t = tmin; t <= tmax; ++t) {
      bigrat term(1, fact(t) * fact(a1 - t) * fact(a2 - t) * fact(a3 - t) *
                         fact(t - b1) * fact(t - b2));
      if (t % 2) term = -term;
      sum += term;
    }
    bigrat rad = triangle_rat(tj1, tj2, tj3);
    rad *= bigrat(fact((tj1 + tm1) / 2) * fact((tj1 - tm1) / 2) *
                      fact((tj2 + tm2) / 2) * fact((tj2 - tm2) / 2) *
                      fact((tj3 + tm3) / 2) * fact((tj3 - tm3) / 2),
                  1);
    const double s = sum.convert_to<double>();
    return sign * s * std::sqrt(rad.convert_to<double>());
  }

  // log-factorial fallback
  double sum = 0.0;
  const double lrad = 0.5 * (triangle_log(tj1, tj2, tj3) +
                             lfact((tj1 + tm1) / 2) + lfact((tj1 - tm1) / 2) +
                             lfact((tj2 + tm2) / 2) + lfact((tj2 - tm2) / 2) +
                             lfact((tj3 + tm3) / 2) + lfact((tj3 - tm3) / 2));
  for (int t = tmin; t <= tmax; ++t) {
    const double lterm = lrad - (lfact(t) + lfact(a1 - t) + lfact(a2 - t) +
                                 lfact(a3 - t) + lfact(t - b1) + lfact(t - b2));
    sum += ((t % 2) ? -1.0 : 1.0) * std::exp(lterm);
  }
  return sign * sum;
}

// Wigner 6j symbol {j1 j2 j3; j4 j5 j6}. Returns 0 when any of the four
// triads violates the triangle rules; throws on invalid arguments.
inline double wigner_6j(double j1, double j2, double j3, double j4, double j5,
                        double j6) {
  using namespace detail;
  const int ta = as_two(j1, "j1"), tb = as_two(j2, "j2"), tc = as_two(j3, "j3");
  const int td = as_two(j4, "j4"), te = as_two(j5, "j5"), tf = as_two(j6, "j6");
  for (int t : {ta, tb, tc, td, te, tf})
    if (t < 0) throw std::invalid_argument("negative j");
  if (!triangle_ok(ta, tb, tc) || !triangle_ok(ta, te, tf) ||
      !triangle_ok(td, tb, tf) || !triangle_ok(td, te, tc))
    return 0.0;

  const int s1 = (ta + tb + tc) / 2, s2 = (ta + te + tf) / 2;
  const int s3 = (td + tb + tf) / 2, s4 = (td + te + tc) / 2;
  const int q1 = (ta + tb + td + te) / 2, q2 = (tb + tc + te + tf) / 2;
  const int q3 = (ta + tc + td + tf) / 2;
  const int tmin = std::max(std::max(s1, s2), std::max(s3, s4));
  const int tmax = std::min(q1, std::min(q2, q3));
  if (tmin > tmax) return 0.0;

  const int jsum = std::max(std::max(s1, s2), std::max(s3, s4));
  const bool exact = jsum <= 60;

  if (exact) {
    bigrat sum = 0;
    for (int t = tmin; t <= tmax; ++t) {
      bigrat term(fact(t + 1), fact(t - s1) * fact(t - s2) * fact(t - s3) *
                                   fact(t - s4) * fact(q1 - t) * fact(q2 - t) *
                                   fact(q3 - t));
      if (t % 2) term = -term;
      sum += term;
    }
    const bigrat rad = triangle_rat(ta, tb, tc) * triangle_rat(ta, te, tf) *
                       triangle_rat(td, tb, tf) * triangle_rat(td, te, tc);
    return sum.convert_to<double>() * std::sqrt(rad.convert_to<double>());
  }

  const double lrad = 0.5 * (triangle_log(ta, tb, tc) + triangle_log(ta, te, tf) +
                             triangle_log(td, tb, tf) + triangle_log(td, te, tc));
  double sum = 0.0;
  for (int t = tmin; t <= tmax; ++t) {
    const double lterm = lrad + lfact(t + 1) -
                         (lfact(t - s1) + lfact(t - s2) + lfact(t - s3) +
                          lfact(t - s4) + lfact(q1 - t) + lfact(q2 - t) +
                          lfact(q3 - t));
    sum += ((t % 2) ? -1.0 : 1.0) * std::exp(lterm);
  }
  return sum;
}

}  // namespace spinroute
