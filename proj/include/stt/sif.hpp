#pragma once

#include <cmath>

namespace stt {

// Social interaction weight of the ordered pair (k, l).
//
// Before agent k's completion time the pair splits collision-avoidance
// responsibility by relative social index, so the two ordered weights of a
// pair always sum to one. From the completion time on, the weight flips sign
// and decays through a Gaussian tail of width `b`, which briefly lets a
// finished agent drift back toward traffic instead of yielding.
//
// At exactly t == tc_k the tail branch applies. b == 0 degenerates the tail
// to zero (its pointwise limit for t > tc_k).
inline double sif(double sa_k, double sa_l, double t, double tc_k, double b) {
  const double w = sa_k / (sa_k + sa_l);
  if (t < tc_k) return w;
  if (b <= 0.0) return 0.0;
  const double z = (t - tc_k) / b;
  return -w * std::exp(-z * z);
}

}  // namespace stt
