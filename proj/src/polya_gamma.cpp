#include "crossed/gibbs.hpp"

#include "crossed/errors.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

// Exact Polya-Gamma sampling in the Devroye style: PG(1, c) is x/4 for x
// drawn from the tilted Jacobi-type density on (0, inf), whose series
// expansion alternates.  Proposals come from a two-piece envelope -- a
// truncated inverse-Gaussian body below the crossover point and an
// exponential tail above it -- and the partial sums of the series give an
// exact accept/reject squeeze without ever evaluating the density.

namespace crossed {

namespace {

constexpr double kPi = std::numbers::pi;
// Envelope crossover; near the optimum for the proposal acceptance rate.
constexpr double kTrunc = 0.64;
constexpr int kProposalCap = 10000;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// log Phi(-w) for w >= 0, safe far into the tail.
double log_normal_tail(double w) {
  if (w < 10.0) return std::log(normal_cdf(-w));
  double r = 1.0 / (w * w);
  // first terms of the Mills-ratio expansion
  return -0.5 * w * w - std::log(w * std::sqrt(2.0 * kPi)) + std::log1p(-r + 3 * r * r);
}

// n-th series coefficient at x; the partial sums S_n alternate around the
// target density (piecewise form on either side of the crossover).
double series_coef(int n, double x) {
  double h = n + 0.5;
  if (x > kTrunc) return kPi * h * std::exp(-0.5 * h * h * kPi * kPi * x);
  return kPi * h * std::pow(2.0 / (kPi * x), 1.5) * std::exp(-2.0 * h * h / x);
}

// Mass of the inverse-Gaussian(mean 1/z, shape 1) proposal piece on (0, t],
// already carrying its exp(-z) tilt weight.  Finite at z = 0.
double tilted_left_mass(double z, double t) {
  double s = 1.0 / std::sqrt(t);
  double a = std::exp(-z + std::log(normal_cdf(s * (t * z - 1.0))));
  double b = std::exp(z + log_normal_tail(s * (t * z + 1.0)));
  return 2.0 * (a + b);
}

// Inverse-Gaussian(mean mu = 1/z, shape 1) conditioned on (0, t].  `budget`
// counts down the shared proposal allowance.
double truncated_inv_gaussian(double z, double t, Rng& rng, int& budget) {
  if (z < 1.0 / t) {
    // Large mean: sample the boundary-scaled proposal and thin by the tilt.
    for (;;) {
      double e1, e2;
      do {
        if (--budget < 0)
          throw NumericBreakdown("sample_polya_gamma: proposal cap exceeded");
        e1 = draw_exponential(rng);
        e2 = draw_exponential(rng);
      } while (e1 * e1 > 2.0 * e2 / t);
      double x = t / ((1.0 + t * e1) * (1.0 + t * e1));
      if (draw_uniform(rng) <= std::exp(-0.5 * z * z * x)) return x;
    }
  }
  // Moderate mean: draw untruncated inverse-Gaussians until one lands.
  double mu = 1.0 / z;
  for (;;) {
    if (--budget < 0)
      throw NumericBreakdown("sample_polya_gamma: proposal cap exceeded");
    double n = draw_normal(rng);
    double y = n * n;
    double x = mu + 0.5 * mu * mu * y -
               0.5 * mu * std::sqrt(4.0 * mu * y + mu * mu * y * y);
    if (draw_uniform(rng) > mu / (mu + x)) x = mu * mu / x;
    if (x <= t && x > 0.0) return x;
  }
}

double sample_pg1(double c, Rng& rng) {
  double z = 0.5 * std::abs(c);
  double rate = kPi * kPi / 8.0 + 0.5 * z * z;  // exponential tail rate
  double right_mass = kPi / (2.0 * rate) * std::exp(-rate * kTrunc);
  double right_frac = right_mass / (right_mass + tilted_left_mass(z, kTrunc));
  int budget = kProposalCap;
  for (;;) {
    double x;
    if (draw_uniform(rng) < right_frac) {
      if (--budget < 0)
        throw NumericBreakdown("sample_polya_gamma: proposal cap exceeded");
      x = kTrunc + draw_exponential(rng) / rate;
    } else {
      x = truncated_inv_gaussian(z, kTrunc, rng, budget);
    }
    // Alternating partial sums: accept as soon as an odd sum clears the mark,
    // reject as soon as an even sum falls under it.
    double s = series_coef(0, x);
    double y = draw_uniform(rng) * s;
    for (int n = 1;; ++n) {
      if (n > kProposalCap)
        throw NumericBreakdown("sample_polya_gamma: series cap exceeded");
      if (n % 2 == 1) {
        s -= series_coef(n, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += series_coef(n, x);
        if (y > s) break;
      }
    }
  }
}

}  // namespace

double sample_polya_gamma(int b, double c, Rng& rng) {
  if (b < 1) throw std::invalid_argument("sample_polya_gamma: need b >= 1");
  double total = 0.0;
  for (int i = 0; i < b; ++i) total += sample_pg1(c, rng);
  return total;
}

}  // namespace crossed
