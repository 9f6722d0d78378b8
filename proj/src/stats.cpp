#include "crossed/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crossed {

namespace {

// Kolmogorov survival function Q(lambda) = 2 sum_j (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sum));
}

// Variance of a segment's mean estimated from ~20 batch means.
double batch_mean_variance(const std::vector<double>& x) {
  int batches = std::min<int>(20, static_cast<int>(x.size()));
  if (batches < 2) throw std::invalid_argument("geweke_z: segment too short");
  int len = static_cast<int>(x.size()) / batches;
  std::vector<double> bm;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (int i = b * len; i < (b + 1) * len; ++i) s += x[i];
    bm.push_back(s / len);
  }
  return variance(bm) / batches;
}

}  // namespace

double mean(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("mean: empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(const std::vector<double>& x) {
  if (x.size() < 2) throw std::invalid_argument("variance: need at least 2 points");
  double m = mean(x), s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double two_sample_z(const std::vector<double>& a, const std::vector<double>& b) {
  double va = variance(a) / static_cast<double>(a.size());
  double vb = variance(b) / static_cast<double>(b.size());
  double denom = std::sqrt(va + vb);
  if (denom == 0.0) return 0.0;
  return (mean(a) - mean(b)) / denom;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  size_t ia = 0, ib = 0;
  double d = 0.0;
  while (ia < a.size() && ib < b.size()) {
    double x = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] <= x) ++ia;
    while (ib < b.size() && b[ib] <= x) ++ib;
    d = std::max(d, std::abs(ia / na - ib / nb));
  }
  double ne = std::sqrt(na * nb / (na + nb));
  KsResult r;
  r.statistic = d;
  r.p_value = kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
  return r;
}

double geweke_z(const std::vector<double>& chain, double head, double tail) {
  const int n = static_cast<int>(chain.size());
  if (!(head > 0.0) || !(tail > 0.0) || head + tail > 1.0)
    throw std::invalid_argument("geweke_z: fractions must be positive, sum <= 1");
  int nh = static_cast<int>(n * head), nt = static_cast<int>(n * tail);
  if (nh < 20 || nt < 20) throw std::invalid_argument("geweke_z: chain too short");
  std::vector<double> h(chain.begin(), chain.begin() + nh);
  std::vector<double> t(chain.end() - nt, chain.end());
  double denom = std::sqrt(batch_mean_variance(h) + batch_mean_variance(t));
  if (denom == 0.0) return 0.0;
  return (mean(h) - mean(t)) / denom;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("log_log_slope: need matching samples, size >= 2");
  std::vector<double> lx, ly;
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::invalid_argument("log_log_slope: values must be positive");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  double mx = mean(lx), my = mean(ly), sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("log_log_slope: x values all equal");
  return sxy / sxx;
}

}  // namespace crossed
