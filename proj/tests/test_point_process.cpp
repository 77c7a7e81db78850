#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "adp/point_process.hpp"
#include "adp/stats.hpp"
#include "test_support.hpp"

using adp::RateFunction;
using adp::Temperature;
using Catch::Approx;

namespace {
const double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("constant-rate waits are exponential") {
  adp::RngStream rng(2024, 0);
  const auto f = RateFunction::constant(2.0);
  std::vector<double> waits;
  waits.reserve(100000);
  for (int i = 0; i < 100000; ++i) {
    const auto w = adp::sample_wait(f, Temperature(1.0), 0.0, kInf, rng);
    REQUIRE(w.has_value());
    waits.push_back(*w);
  }
  const double ks = adp::stats::ks_statistic(
      waits, [](double w) { return -std::expm1(-2.0 * w); });
  CHECK(ks < 1.95 * std::sqrt(2.0 / 100000.0));
}

TEST_CASE("thinned waits under a growing exponential rate match the CDF") {
  adp::RngStream rng(7, 1);
  const auto f = RateFunction::exp_affine(0.0, 1.0);
  std::vector<double> waits;
  waits.reserve(100000);
  for (int i = 0; i < 100000; ++i) {
    const auto w = adp::sample_wait(f, Temperature(1.0), 0.0, 30.0, rng);
    REQUIRE(w.has_value());
    waits.push_back(*w);
  }
  const double ks = adp::stats::ks_statistic(waits, [](double w) {
    return 1.0 - std::exp(-(std::exp(w) - 1.0));
  });
  CHECK(ks < 1.95 * std::sqrt(2.0 / 100000.0));
}

TEST_CASE("piecewise inversion matches the integrated-rate CDF") {
  adp::RngStream rng(99, 0);
  const auto f = RateFunction::piecewise({0.5, 1.5}, {2.0, 0.5, 1.2});
  const Temperature beta(2.0);
  std::vector<double> waits;
  for (int i = 0; i < 40000; ++i) {
    const auto w = adp::sample_wait(f, beta, 0.0, kInf, rng);
    REQUIRE(w.has_value());
    waits.push_back(*w);
  }
  const double ks = adp::stats::ks_statistic(waits, [&](double w) {
    return -std::expm1(-adp::integrate_rate(f, 0.0, w, beta));
  });
  CHECK(ks < 1.95 * std::sqrt(2.0 / 40000.0));
}

TEST_CASE("waits started mid-stream follow the conditional law") {
  adp::RngStream rng(41, 3);
  const auto f = RateFunction::piecewise({1.0}, {0.4, 2.5});
  const Temperature beta(1.0);
  const double start = 0.6;
  std::vector<double> arrivals;
  for (int i = 0; i < 30000; ++i) {
    const auto t = adp::sample_wait(f, beta, start, kInf, rng);
    REQUIRE(t.has_value());
    REQUIRE(*t > start);
    arrivals.push_back(*t);
  }
  const double ks = adp::stats::ks_statistic(arrivals, [&](double t) {
    return -std::expm1(-adp::integrate_rate(f, start, t, beta));
  });
  CHECK(ks < 1.95 * std::sqrt(2.0 / 30000.0));
}

TEST_CASE("a rate that decays to nothing leaves the correct no-arrival mass") {
  adp::RngStream rng(5, 5);
  const auto f = RateFunction::exp_affine(0.5, -1.0);
  int missing = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i)
    if (!adp::sample_wait(f, Temperature(1.0), 0.0, 5.0, rng)) ++missing;
  // P(no arrival on [0, 5]) = exp(-integral) with integral ~ 1.6376.
  const double p = 0.19444376685319106;
  const double se = std::sqrt(p * (1.0 - p) * n);
  CHECK(std::abs(missing - p * n) < 3.0 * se);
}

TEST_CASE("path counts are Poisson for a flat rate") {
  adp::RngStream rng(123, 0);
  const double lambda = 3.0, horizon = 2.0;
  const auto f = RateFunction::constant(lambda);
  std::vector<double> observed(16, 0.0);
  double overflow = 0.0;
  const int n = 4000;
  double mean = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto path = adp::sample_path(f, Temperature(1.0), horizon, rng);
    path.validate();
    const auto count = path.arrivals.size();
    mean += static_cast<double>(count) / n;
    if (count < observed.size())
      observed[count] += 1.0;
    else
      overflow += 1.0;
  }
  std::vector<double> expected(observed.size() + 1, 0.0);
  double tail = n;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    expected[k] = n * testsup::poisson_pmf(static_cast<long long>(k),
                                           lambda * horizon);
    tail -= expected[k];
  }
  expected.back() = std::max(tail, 0.0);
  observed.push_back(overflow);
  const auto r = adp::stats::chi2_goodness_of_fit(observed, expected);
  CHECK(r.p_value > 0.001);
  CHECK(std::abs(mean - lambda * horizon) <
        3.0 * std::sqrt(lambda * horizon / n));
}

TEST_CASE("renewal paths restart the clock at every arrival") {
  adp::RngStream rng(55, 2);
  const auto f = RateFunction::piecewise({1.0}, {2.0, 0.5});
  const Temperature beta(1.0);
  std::vector<double> gaps;
  while (gaps.size() < 30000) {
    const auto path = adp::sample_renewal_path(f, beta, 50.0, rng);
    path.validate();
    double prev = 0.0;
    // Drop each path's final gap: it is censored by the horizon.
    for (double t : path.arrivals) {
      gaps.push_back(t - prev);
      prev = t;
    }
    if (!path.arrivals.empty()) gaps.pop_back();
  }
  const double ks = adp::stats::ks_statistic(gaps, [&](double w) {
    return -std::expm1(-adp::integrate_rate(f, 0.0, w, beta));
  });
  CHECK(ks < 1.95 * std::sqrt(2.0 / static_cast<double>(gaps.size())));
}

TEST_CASE("wait log density has the survival-times-rate form") {
  const auto f = RateFunction::constant(2.0);
  CHECK(adp::wait_log_density(f, Temperature(1.0), 0.3, 0.7) ==
        Approx(-0.7068528194400546).margin(1e-13));
  // Zero rate at the arrival instant has no density.
  const auto gap = RateFunction::piecewise({1.0}, {1.0, 0.0});
  CHECK(adp::wait_log_density(gap, Temperature(1.0), 0.0, 1.5) == -kInf);
  CHECK_THROWS_AS(adp::wait_log_density(f, Temperature(1.0), -0.1, 0.5),
                  adp::NegativeTime);
  CHECK_THROWS_AS(adp::wait_log_density(f, Temperature(1.0), 0.1, -0.5),
                  adp::NegativeTime);
}

TEST_CASE("path log density telescopes into wait densities plus survival") {
  const auto f = RateFunction::exp_affine(0.2, 0.4);
  const Temperature beta(1.3);
  adp::ArrivalPath path;
  path.horizon = 2.0;
  path.arrivals = {0.3, 0.9, 1.7};
  double manual = 0.0;
  double prev = 0.0;
  for (double t : path.arrivals) {
    manual += adp::wait_log_density(f, beta, prev, t - prev);
    prev = t;
  }
  manual -= adp::integrate_rate(f, prev, path.horizon, beta);
  CHECK(adp::path_log_density(f, beta, path) == Approx(manual).margin(1e-12));

  adp::ArrivalPath bad;
  bad.horizon = 1.0;
  bad.arrivals = {0.8, 0.4};
  CHECK_THROWS_AS(adp::path_log_density(f, beta, bad), adp::Error);
}

TEST_CASE("density ratios between processes have unit mean") {
  // E_q[p/q] = 1 for path densities with common support.
  adp::RngStream rng(314, 0);
  const auto q = RateFunction::constant(2.0);
  const auto p = RateFunction::exp_affine(0.2, 0.4);
  const Temperature beta(1.0);
  std::vector<double> ratios;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const auto path = adp::sample_path(q, beta, 1.5, rng);
    ratios.push_back(std::exp(adp::path_log_density(p, beta, path) -
                              adp::path_log_density(q, beta, path)));
  }
  const auto s = adp::stats::summarize(ratios);
  CHECK(std::abs(s.mean - 1.0) < 3.0 * s.std_error);
}

TEST_CASE("bin distribution is the Poisson law of the frozen rate") {
  const auto f = RateFunction::constant(1.0);
  const auto bin = adp::discretize_bin(f, Temperature(1.0), 0.0, 0.1);
  CHECK(bin.probs[0] == Approx(0.9048374180359595).margin(1e-13));
  CHECK(bin.probs[1] == Approx(0.09048374180359596).margin(1e-13));
  double total = bin.tail_mass;
  for (double p : bin.probs) total += p;
  CHECK(total == Approx(1.0).margin(1e-12));

  const double binary = adp::binary_bin_prob(f, Temperature(1.0), 0.0, 0.1);
  CHECK(binary == Approx(0.09516258196404043).margin(1e-13));
  CHECK(binary == Approx(1.0 - bin.probs[0]).margin(1e-12));

  // The frozen rate is evaluated at the bin's left edge.
  const auto pw = RateFunction::piecewise({1.0}, {2.0, 5.0});
  const auto late = adp::discretize_bin(pw, Temperature(1.0), 1.2, 0.1);
  CHECK(late.probs[0] == Approx(std::exp(-0.5)).margin(1e-13));
}

TEST_CASE("multi-arrival mass in a bin vanishes faster than delta") {
  const auto f = RateFunction::constant(1.0);
  double prev = kInf;
  for (double delta : {1e-2, 1e-3, 1e-4}) {
    const auto bin = adp::discretize_bin(f, Temperature(1.0), 0.0, delta);
    const double multi = 1.0 - bin.probs[0] - bin.probs[1];
    CHECK(multi / delta < prev);
    prev = multi / delta;
  }
}

TEST_CASE("large beta turns the binary bin into a unit-rate indicator") {
  const Temperature beta(50.0);
  CHECK(adp::binary_bin_prob(RateFunction::constant(1.1), beta, 0.0, 0.1) >
        0.999);
  CHECK(adp::binary_bin_prob(RateFunction::constant(0.9), beta, 0.0, 0.1) <
        0.001);
}

TEST_CASE("sampling guards its interval arguments") {
  adp::RngStream rng(1, 0);
  const auto f = RateFunction::constant(1.0);
  CHECK_THROWS_AS(adp::sample_wait(f, Temperature(1.0), -0.5, 1.0, rng),
                  adp::NegativeTime);
  CHECK_THROWS_AS(adp::sample_wait(f, Temperature(1.0), 2.0, 1.0, rng),
                  adp::ReversedInterval);
  CHECK_FALSE(adp::sample_wait(f, Temperature(1.0), 1.0, 1.0, rng).has_value());
  // Thinning-only shapes refuse an unbounded horizon outright.
  CHECK_THROWS_AS(adp::sample_wait(RateFunction::exp_affine(0.0, 1.0),
                                   Temperature(1.0), 0.0, kInf, rng),
                  adp::Error);
  CHECK_THROWS_AS(adp::discretize_bin(f, Temperature(1.0), 0.0, 0.0),
                  adp::Error);
  CHECK_THROWS_AS(adp::binary_bin_prob(f, Temperature(1.0), 0.0, -0.1),
                  adp::Error);
}
