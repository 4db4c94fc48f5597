#pragma once

#include <cassert>
#include <cmath>
#include <limits>
#include <span>

namespace stt {

inline constexpr double k_inf = std::numeric_limits<double>::infinity();

// Smooth minimum -(1/nu) * ln(sum_i exp(-nu * v_i)).
//
// The true minimum is factored out of the log-sum so every exponential argument
// is <= 0; this keeps the evaluation overflow-free for any nu * v magnitude.
// Entries of +inf simply drop out; if all entries are +inf the result is +inf.
// Undershoots the true minimum by at most ln(count)/nu, and by construction is
// never above it.
inline double smooth_min(std::span<const double> values, double nu) {
  assert(!values.empty());
  assert(nu > 0.0);
  double m = k_inf;
  for (double v : values) m = std::min(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(-nu * (v - m));
  return m - std::log(s) / nu;
}

// Tube radius -(1/nu) * ln(exp(-nu*rho_max) + exp(-nu*d1) + exp(-nu*d2)).
//
// d1/d2 are the smoothed clearances to obstacles and to the other agents; +inf
// is accepted for an empty set (the term vanishes). Result is always strictly
// below min(rho_max, d1, d2) and equals rho_max when both clearances are +inf.
inline double radius_closed_form(double d1, double d2, double rho_max, double nu) {
  assert(nu > 0.0);
  const double m = std::min(rho_max, std::min(d1, d2));
  double s = std::exp(-nu * (rho_max - m));
  if (std::isfinite(d1)) s += std::exp(-nu * (d1 - m));
  if (std::isfinite(d2)) s += std::exp(-nu * (d2 - m));
  return m - std::log(s) / nu;
}

// Strict positive floor of the closed-form radius, valid whenever d1 >= rho_min
// and d2 > rho_min.
inline double radius_lower_bound(double rho_min, double rho_max, double nu) {
  assert(nu > 0.0);
  const double m = std::min(rho_max, rho_min);
  const double s = std::exp(-nu * (rho_max - m)) + 2.0 * std::exp(-nu * (rho_min - m));
  return m - std::log(s) / nu;
}

// Time derivative of the closed-form radius, assembled from the clearance
// rates. Algebraically identical to differentiating radius_closed_form; kept
// as an independent expression so trace post-processing can cross-check the
// two. Non-finite clearances contribute nothing (their weight is zero).
inline double radius_rate_form(double d1, double d1_rate, double d2, double d2_rate,
                               double rho_max, double nu) {
  assert(nu > 0.0);
  const double m = std::min(rho_max, std::min(d1, d2));
  double num = 0.0;
  double den = std::exp(-nu * (rho_max - m));
  if (std::isfinite(d1)) {
    const double w = std::exp(-nu * (d1 - m));
    num += w * d1_rate;
    den += w;
  }
  if (std::isfinite(d2)) {
    const double w = std::exp(-nu * (d2 - m));
    num += w * d2_rate;
    den += w;
  }
  return num / den;
}

}  // namespace stt
