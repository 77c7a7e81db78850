#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "adp/errors.hpp"
#include "adp/rng.hpp"

namespace adp::stats {

// One-sample Kolmogorov-Smirnov statistic against a reference CDF.
inline double ks_statistic(std::vector<double> sample,
                           const std::function<double(double)>& cdf) {
  if (sample.empty()) throw Error("ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

// Two-sample Kolmogorov-Smirnov statistic: sup over the merged sample of
// the empirical CDF gap.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  return d;
}

// Critical value c(alpha) * sqrt((n+m)/(n*m)) for the two-sample test at
// alpha = 0.001 (c = 1.95 to three figures).
inline double ks_two_sample_threshold(std::size_t n, std::size_t m,
                                      double c = 1.95) {
  return c * std::sqrt((static_cast<double>(n) + static_cast<double>(m)) /
                       (static_cast<double>(n) * static_cast<double>(m)));
}

inline double chi2_survival(double statistic, int dof) {
  if (dof <= 0) throw Error("chi2_survival: dof must be positive");
  boost::math::chi_squared dist(static_cast<double>(dof));
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

struct Chi2Result {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

namespace detail {

// Pools low-expectation cells (classic rule: expected >= 5) from the tail
// so the chi-square approximation holds.
inline void pool_cells(std::vector<double>& observed,
                       std::vector<double>& expected) {
  while (expected.size() > 1) {
    auto smallest = std::min_element(expected.begin(), expected.end());
    if (*smallest >= 5.0) break;
    const std::size_t k = static_cast<std::size_t>(smallest - expected.begin());
    const std::size_t into = k == expected.size() - 1 ? k - 1 : k + 1;
    expected[into] += expected[k];
    observed[into] += observed[k];
    expected.erase(expected.begin() + static_cast<std::ptrdiff_t>(k));
    observed.erase(observed.begin() + static_cast<std::ptrdiff_t>(k));
  }
}

}  // namespace detail

// Goodness of fit of observed counts against expected counts (same total).
inline Chi2Result chi2_goodness_of_fit(std::vector<double> observed,
                                       std::vector<double> expected) {
  if (observed.size() != expected.size() || observed.empty())
    throw Error("chi2_goodness_of_fit: count vectors must match and be nonempty");
  detail::pool_cells(observed, expected);
  if (observed.size() < 2)
    throw Error("chi2_goodness_of_fit: too few cells after pooling");
  Chi2Result out;
  out.dof = static_cast<int>(observed.size()) - 1;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(expected[i] > 0.0))
      throw Error("chi2_goodness_of_fit: expected count must be positive");
    const double diff = observed[i] - expected[i];
    out.statistic += diff * diff / expected[i];
  }
  out.p_value = chi2_survival(out.statistic, out.dof);
  return out;
}

// Homogeneity of two count vectors over the same categories.
inline Chi2Result chi2_homogeneity(const std::vector<long long>& a,
                                   const std::vector<long long>& b) {
  if (a.size() != b.size() || a.empty())
    throw Error("chi2_homogeneity: count vectors must match and be nonempty");
  double total_a = 0.0;
  double total_b = 0.0;
  for (long long v : a) total_a += static_cast<double>(v);
  for (long long v : b) total_b += static_cast<double>(v);
  if (!(total_a > 0.0) || !(total_b > 0.0))
    throw Error("chi2_homogeneity: empty samples");
  const double total = total_a + total_b;

  std::vector<double> obs_a;
  std::vector<double> obs_b;
  std::vector<double> exp_a;
  std::vector<double> exp_b;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double col = static_cast<double>(a[k]) + static_cast<double>(b[k]);
    if (col == 0.0) continue;  // category absent from both samples
    obs_a.push_back(static_cast<double>(a[k]));
    obs_b.push_back(static_cast<double>(b[k]));
    exp_a.push_back(col * total_a / total);
    exp_b.push_back(col * total_b / total);
  }
  if (obs_a.size() < 2) throw Error("chi2_homogeneity: fewer than two categories");

  Chi2Result out;
  out.dof = static_cast<int>(obs_a.size()) - 1;
  for (std::size_t k = 0; k < obs_a.size(); ++k) {
    const double da = obs_a[k] - exp_a[k];
    const double db = obs_b[k] - exp_b[k];
    out.statistic += da * da / exp_a[k] + db * db / exp_b[k];
  }
  out.p_value = chi2_survival(out.statistic, out.dof);
  return out;
}

// Independence of the row and column classifications of a contingency
// table. All-zero rows and columns are dropped first.
inline Chi2Result chi2_independence(
    const std::vector<std::vector<long long>>& table) {
  if (table.empty() || table.front().empty())
    throw Error("chi2_independence: empty table");
  const std::size_t rows = table.size();
  const std::size_t cols = table.front().size();
  for (const auto& row : table)
    if (row.size() != cols) throw Error("chi2_independence: ragged table");

  std::vector<double> row_total(rows, 0.0);
  std::vector<double> col_total(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      if (table[i][j] < 0) throw Error("chi2_independence: negative count");
      const double v = static_cast<double>(table[i][j]);
      row_total[i] += v;
      col_total[j] += v;
      total += v;
    }
  if (!(total > 0.0)) throw Error("chi2_independence: empty sample");

  std::size_t live_rows = 0;
  std::size_t live_cols = 0;
  for (double v : row_total) live_rows += v > 0.0 ? 1 : 0;
  for (double v : col_total) live_cols += v > 0.0 ? 1 : 0;
  if (live_rows < 2 || live_cols < 2)
    throw Error("chi2_independence: need at least two live rows and columns");

  Chi2Result out;
  out.dof = static_cast<int>((live_rows - 1) * (live_cols - 1));
  for (std::size_t i = 0; i < rows; ++i) {
    if (row_total[i] == 0.0) continue;
    for (std::size_t j = 0; j < cols; ++j) {
      if (col_total[j] == 0.0) continue;
      const double expected = row_total[i] * col_total[j] / total;
      const double diff = static_cast<double>(table[i][j]) - expected;
      out.statistic += diff * diff / expected;
    }
  }
  out.p_value = chi2_survival(out.statistic, out.dof);
  return out;
}

struct SampleSummary {
  long long count = 0;
  double mean = 0.0;
  double variance = 0.0;
  double std_error = 0.0;
};

inline SampleSummary summarize(const std::vector<double>& xs) {
  SampleSummary out;
  double mean = 0.0;
  double m2 = 0.0;
  for (double x : xs) {
    ++out.count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(out.count);
    m2 += delta * (x - mean);
  }
  out.mean = mean;
  if (out.count > 1) {
    out.variance = m2 / static_cast<double>(out.count - 1);
    out.std_error = std::sqrt(out.variance / static_cast<double>(out.count));
  }
  return out;
}

inline double lag1_autocorrelation(const std::vector<double>& xs) {
  if (xs.size() < 3) throw Error("lag1_autocorrelation: need at least 3 points");
  const auto s = summarize(xs);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - s.mean;
    den += d * d;
    if (i + 1 < xs.size()) num += d * (xs[i + 1] - s.mean);
  }
  if (!(den > 0.0)) throw Error("lag1_autocorrelation: degenerate sample");
  return num / den;
}

// Permutation p-value for serial dependence: compares |lag-1
// autocorrelation| of the sequence against reshuffles. Large p means the
// order carries no signal.
inline double permutation_pvalue_lag1(std::vector<double> xs, int permutations,
                                      RngStream& rng) {
  if (permutations < 1) throw Error("permutation_pvalue_lag1: need permutations");
  const double observed = std::abs(lag1_autocorrelation(xs));
  long long at_least = 0;
  for (int p = 0; p < permutations; ++p) {
    for (std::size_t i = xs.size() - 1; i > 0; --i) {
      const std::size_t j = rng.uniform_int(i + 1);
      std::swap(xs[i], xs[j]);
    }
    if (std::abs(lag1_autocorrelation(xs)) >= observed) ++at_least;
  }
  return static_cast<double>(at_least + 1) / static_cast<double>(permutations + 1);
}

}  // namespace adp::stats
