#pragma once

#include <vector>

namespace ecmpr::stats {

double mean(const std::vector<double>& v);
double stddev(const std::vector<double>& v);  // population form

/// Spearman rank correlation, average ranks on ties.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

/// One-sided p-value for a negative monotone trend of y against x, via
/// the t approximation of the Spearman statistic.
double spearman_negative_trend_p(const std::vector<double>& x, const std::vector<double>& y);

/// Student-t lower-tail CDF with nu degrees of freedom.
double student_t_cdf(double t, double nu);

}  // namespace ecmpr::stats
