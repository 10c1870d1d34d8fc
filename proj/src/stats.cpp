#include "toftomo/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "toftomo/errors.hpp"

namespace toftomo::stats {

double mean(const std::vector<double>& v) {
    if (v.empty()) throw ArgumentError("mean of an empty sample");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw ArgumentError("quantile of an empty sample");
    if (q < 0.0 || q > 1.0) throw ArgumentError("quantile level must lie in [0, 1]");
    std::sort(v.begin(), v.end());
    double h = q * static_cast<double>(v.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(h));
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

namespace {
double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = mean(x), my = mean(y);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}
}  // namespace

Spearman spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DimensionError("spearman samples differ in length");
    if (x.size() < 3) throw ArgumentError("spearman needs at least three pairs");
    Spearman s;
    s.n = static_cast<int>(x.size());
    s.rho = pearson(ranks(x), ranks(y));
    double df = s.n - 2.0;
    if (std::abs(s.rho) >= 1.0) {
        s.p_two_sided = 0.0;
        s.p_increasing = s.rho > 0 ? 0.0 : 1.0;
        return s;
    }
    double t = s.rho * std::sqrt(df / (1.0 - s.rho * s.rho));
    boost::math::students_t dist(df);
    s.p_increasing = boost::math::cdf(boost::math::complement(dist, t));
    s.p_two_sided = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    return s;
}

LineFit linear_regression(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ArgumentError("regression needs two or more paired points");
    double mx = mean(x), my = mean(y);
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw DegenerateInputError("regression abscissae are all equal");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

}  // namespace toftomo::stats
