#pragma once

#include <vector>

namespace toftomo::stats {

double mean(const std::vector<double>& v);
// Sample standard deviation (n − 1); zero for fewer than two values.
double stddev(const std::vector<double>& v);
// Linear interpolation between order statistics, q in [0, 1].
double quantile(std::vector<double> v, double q);
// Average ranks for ties, 1-based.
std::vector<double> ranks(const std::vector<double>& v);

struct Spearman {
    double rho = 0.0;
    double p_two_sided = 1.0;
    double p_increasing = 1.0;  // one-sided, alternative rho > 0
    int n = 0;
};

// p-values from the t approximation t = ρ√((n−2)/(1−ρ²)) with n − 2 degrees of freedom.
Spearman spearman(const std::vector<double>& x, const std::vector<double>& y);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};
LineFit linear_regression(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace toftomo::stats
