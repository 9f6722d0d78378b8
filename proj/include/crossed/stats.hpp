#pragma once

// Small statistics toolbox for sampler validation: moments, two-sample
// comparisons, a chain-drift diagnostic, and log-log slope fits.

#include <vector>

namespace crossed {

double mean(const std::vector<double>& x);
// Unbiased (n-1) sample variance; needs at least two points.
double variance(const std::vector<double>& x);

// Welch z statistic for equal means of two independent samples.
double two_sample_z(const std::vector<double>& a, const std::vector<double>& b);

struct KsResult {
  double statistic = 0.0;  // max CDF distance
  double p_value = 1.0;    // asymptotic (Kolmogorov distribution)
};
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// Drift diagnostic: z statistic comparing the mean of the first head-fraction
// of the chain against the mean of the last tail-fraction, with batch-means
// variance estimates so mild autocorrelation does not bite.
double geweke_z(const std::vector<double>& chain, double head = 0.1,
                double tail = 0.5);

// Least-squares slope of log(y) against log(x); all entries must be positive.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace crossed
