#include <doctest.h>

#include <cmath>
#include <complex>
#include <numeric>

#include "oracle_values.hpp"
#include "rovertrack/filters.hpp"
#include "rovertrack/rng.hpp"

using namespace rovertrack;

namespace {

std::vector<FilterSpec> all_filters() {
  return {FilterSpec::none(), FilterSpec::moving_average(), FilterSpec::savitzky_golay(),
          FilterSpec::savitzky_golay(3, 9, 0), FilterSpec::butterworth()};
}

std::vector<double> run(const FilterSpec& spec, const std::vector<double>& xs) {
  ChannelFilter f(spec);
  std::vector<double> ys;
  for (double x : xs) ys.push_back(f.step(x));
  return ys;
}

// Steady-state gain of a streaming filter at frequency hz, measured by
// correlating the settled output with the input phasor.
double measured_gain_db(const FilterSpec& spec, double hz) {
  ChannelFilter f(spec);
  const double w = kTwoPi * hz / spec.sample_hz;
  const int settle = 2000, n = 5000;
  std::complex<double> acc = 0.0;
  for (int k = 0; k < settle + n; ++k) {
    const double y = f.step(std::sin(w * k));
    if (k >= settle) acc += y * std::polar(1.0, -w * k);
  }
  return 20.0 * std::log10(2.0 * std::abs(acc) / n);
}

}  // namespace

TEST_CASE("unity DC gain") {
  for (const FilterSpec& spec : all_filters()) {
    for (double c : {-0.7, 0.0, 0.3, 1.0}) {
      ChannelFilter f(spec);
      for (int i = 0; i < 200; ++i) CHECK(std::abs(f.step(c) - c) <= 1e-9);
    }
    // Unwarmed filters settle to the same value.
    FilterSpec cold = spec;
    cold.warm_start = false;
    ChannelFilter f(cold);
    double y = 0.0;
    for (int i = 0; i < 400; ++i) y = f.step(0.42);
    CHECK(std::abs(y - 0.42) <= 1e-9);
  }
}

TEST_CASE("moving average") {
  FilterSpec spec = FilterSpec::moving_average(5);
  spec.warm_start = false;
  const auto ys = run(spec, {1, 0, 0, 0, 0, 0, 0, 0});
  for (int i = 0; i < 5; ++i) CHECK(ys[i] == doctest::Approx(0.2).epsilon(1e-15));
  for (int i = 5; i < 8; ++i) CHECK(ys[i] == 0.0);

  std::vector<double> ramp(40);
  std::iota(ramp.begin(), ramp.end(), 0.0);
  const auto out = run(FilterSpec::moving_average(5), ramp);
  for (std::size_t k = 4; k < ramp.size(); ++k) CHECK(out[k] == doctest::Approx(ramp[k - 2]).epsilon(1e-15));
}

TEST_CASE("Savitzky-Golay coefficients match least squares") {
  auto check = [](const std::vector<double>& got, const double* want, std::size_t n) {
    REQUIRE(got.size() == n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-12);
  };
  check(savitzky_golay_coefficients(9, 3, 4), oracle::kSg9Cubic4, std::size(oracle::kSg9Cubic4));
  check(savitzky_golay_coefficients(9, 3, 0), oracle::kSg9Cubic0, std::size(oracle::kSg9Cubic0));
  check(savitzky_golay_coefficients(5, 2, 2), oracle::kSg5Quad2, std::size(oracle::kSg5Quad2));
  CHECK(FilterSpec::savitzky_golay().effective_sg_lag() == 4);
}

TEST_CASE("Savitzky-Golay reproduces cubics") {
  auto cubic = [](double t) { return 0.002 * t * t * t - 0.05 * t * t + 0.3 * t - 1.0; };
  for (int lag : {0, 2, 4}) {
    ChannelFilter f(FilterSpec::savitzky_golay(3, 9, lag));
    for (int k = 0; k < 60; ++k) {
      const double y = f.step(cubic(k));
      if (k >= 8) CHECK(std::abs(y - cubic(k - lag)) <= 1e-9);
    }
  }
}

TEST_CASE("Butterworth design") {
  const auto sections = butterworth_sections(4, 2.5, 25.0);
  REQUIRE(sections.size() == 2);
  for (const Biquad& q : sections) CHECK((q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2) == doctest::Approx(1.0));

  // Analytic response of the cascade against the independent design.
  for (std::size_t i = 0; i < std::size(oracle::kBwFreqs); ++i) {
    const std::complex<double> z = std::polar(1.0, -kTwoPi * oracle::kBwFreqs[i] / 25.0);
    std::complex<double> h = 1.0;
    for (const Biquad& q : sections) h *= (q.b0 + q.b1 * z + q.b2 * z * z) / (1.0 + q.a1 * z + q.a2 * z * z);
    CHECK(20.0 * std::log10(std::abs(h)) == doctest::Approx(oracle::kBwGainDb[i]).epsilon(1e-9));
  }

  const double cutoff_db = measured_gain_db(FilterSpec::butterworth(), 2.5);
  CHECK(std::abs(cutoff_db - (-3.01)) <= 0.1);
  CHECK(measured_gain_db(FilterSpec::butterworth(), 0.5) > -0.01);
  CHECK(measured_gain_db(FilterSpec::butterworth(), 6.0) < -30.0);

  const auto odd = butterworth_sections(3, 2.5, 25.0);
  REQUIRE(odd.size() == 2);
  CHECK(odd.back().b2 == 0.0);
  CHECK(odd.back().a2 == 0.0);
}

TEST_CASE("linearity") {
  CounterRng rng(12);
  std::vector<double> x(300), y(300), mix(300);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.uniform(-1, 1);
    y[i] = rng.uniform(-1, 1);
    mix[i] = 0.7 * x[i] - 1.3 * y[i];
  }
  for (FilterSpec spec : all_filters()) {
    spec.warm_start = false;
    const auto fx = run(spec, x), fy = run(spec, y), fm = run(spec, mix);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(fm[i] - (0.7 * fx[i] - 1.3 * fy[i])) <= 1e-9);
  }
}

TEST_CASE("bounded output") {
  CounterRng rng(13);
  std::vector<double> x(2000);
  for (double& v : x) v = rng.uniform() < 0.5 ? -1.0 : 1.0;
  for (const FilterSpec& spec : all_filters()) {
    double bound = 1.0;
    if (spec.kind == FilterKind::kSavitzkyGolay) {
      const auto taps = savitzky_golay_coefficients(spec.window, spec.order, spec.effective_sg_lag());
      bound = std::accumulate(taps.begin(), taps.end(), 0.0, [](double a, double t) { return a + std::abs(t); });
    } else if (spec.kind == FilterKind::kButterworth) {
      // l1 norm of the impulse response, truncated where it has decayed.
      FilterSpec cold = spec;
      cold.warm_start = false;
      ChannelFilter f(cold);
      bound = 0.0;
      for (int k = 0; k < 2000; ++k) bound += std::abs(f.step(k == 0 ? 1.0 : 0.0));
      bound += 1e-9;
    }
    for (double y : run(spec, x)) CHECK(std::abs(y) <= bound + 1e-12);
  }
}

TEST_CASE("reset restores the initial condition") {
  for (const FilterSpec& spec : all_filters()) {
    ChannelFilter f(spec);
    std::vector<double> first, second;
    for (int k = 0; k < 30; ++k) first.push_back(f.step(std::sin(0.3 * k)));
    f.reset();
    CHECK(!f.warm_started());
    for (int k = 0; k < 30; ++k) second.push_back(f.step(std::sin(0.3 * k)));
    CHECK(first == second);
  }
}

TEST_CASE("action filter flags non-finite input") {
  ActionFilter f(FilterSpec::moving_average());
  bool flagged = false;
  const Action a = f.step({0.5, -0.5}, &flagged);
  CHECK(!flagged);
  const Action b = f.step({NAN, 0.1}, &flagged);
  CHECK(flagged);
  CHECK(a == b);
}

TEST_CASE("spec validation and names") {
  CHECK_THROWS_AS(FilterSpec::moving_average(0).validate(), ConfigError);
  CHECK_THROWS_AS(FilterSpec::savitzky_golay(9, 9).validate(), ConfigError);
  CHECK_THROWS_AS(FilterSpec::butterworth(4, 12.5, 25.0).validate(), ConfigError);
  CHECK_THROWS_AS(FilterSpec::butterworth(4, 0.0, 25.0).validate(), ConfigError);
  CHECK_THROWS_AS(parse_filter_kind("kalman"), ConfigError);
  for (const char* n : {"none", "ma", "sg", "bw"}) CHECK(to_string(parse_filter_kind(n)) == n);
  CHECK(FilterSpec::from_name("butterworth").order == 4);
}
