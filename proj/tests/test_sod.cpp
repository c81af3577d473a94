#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

#include "etkf/sod.hpp"

using namespace etkf;

namespace {

// Number of transmissions a fresh gate makes over a sequence evaluated at
// 1-tick spacing.
long count_events(double delta, const std::vector<double>& values) {
  SodGate gate(delta, 0, 0);
  long events = 0;
  double t = 0.0;
  for (double v : values) {
    if (gate.evaluate(v, t)) ++events;
    t += 1.0;
  }
  return events;
}

}  // namespace

TEST_CASE("send-on-delta trigger condition") {
  SodGate gate(0.1, 3, 7);
  REQUIRE(gate.evaluate(48.0, 0.0).has_value());  // first evaluation transmits
  REQUIRE(gate.last_sent() == 48.0);

  SECTION("within the threshold nothing is sent") {
    REQUIRE_FALSE(gate.evaluate(48.05, 1.0).has_value());
    REQUIRE(gate.last_sent() == 48.0);
  }
  SECTION("beyond the threshold the new value is transmitted") {
    const auto ev = gate.evaluate(48.15, 1.0);
    REQUIRE(ev.has_value());
    REQUIRE(ev->value == 48.15);
    REQUIRE(ev->sender == 3);
    REQUIRE(ev->channel == 7);
    REQUIRE(ev->sent_at == 1.0);
    REQUIRE(gate.last_sent() == 48.15);
    REQUIRE(gate.last_sent_time() == 1.0);
  }
  SECTION("exact equality with the threshold does not transmit") {
    SodGate g2(0.125, 0, 0);  // exactly representable threshold
    REQUIRE(g2.evaluate(48.0, 0.0).has_value());
    REQUIRE_FALSE(g2.evaluate(48.125, 1.0).has_value());
    REQUIRE(g2.evaluate(48.1875, 2.0).has_value());
  }
  SECTION("non-finite samples are rejected") {
    REQUIRE_THROWS_AS(gate.evaluate(std::nan(""), 1.0), validation_error);
    REQUIRE_THROWS_AS(gate.evaluate(std::numeric_limits<double>::infinity(), 1.0),
                      validation_error);
  }
  SECTION("time must not run backwards") {
    gate.evaluate(49.0, 5.0);
    REQUIRE_THROWS_AS(gate.evaluate(50.0, 4.0), validation_error);
  }
  SECTION("negative threshold is rejected") {
    REQUIRE_THROWS_AS(SodGate(-0.1, 0, 0), validation_error);
  }
}

TEST_CASE("delta = 0 degenerates to transmitting every change") {
  SodGate gate(0.0, 0, 0);
  REQUIRE(gate.evaluate(1.0, 0.0).has_value());
  REQUIRE_FALSE(gate.evaluate(1.0, 1.0).has_value());  // equality still holds back
  REQUIRE(gate.evaluate(1.0000001, 2.0).has_value());

  const std::vector<double> distinct{5.0, 4.0, 3.5, 3.6, 9.0, 1.0};
  REQUIRE(count_events(0.0, distinct) == static_cast<long>(distinct.size()));
}

TEST_CASE("held_value_bounds covers the untransmitted value") {
  SECTION("voltage channel") {
    SodGate gate(0.1, 0, 0);
    gate.evaluate(48.0, 0.0);
    const auto [lo, hi] = gate.held_value_bounds();
    REQUIRE_THAT(lo, Catch::Matchers::WithinAbs(47.9, 1e-15));
    REQUIRE_THAT(hi, Catch::Matchers::WithinAbs(48.1, 1e-15));
  }
  SECTION("zero threshold degenerates to a point") {
    SodGate gate(0.0, 0, 0);
    gate.evaluate(48.0, 0.0);
    const auto [lo, hi] = gate.held_value_bounds();
    REQUIRE(lo == 48.0);
    REQUIRE(hi == 48.0);
  }
  SECTION("per-unit energy channel") {
    SodGate gate(0.01, 0, 0);
    gate.evaluate(1.0, 0.0);
    const auto [lo, hi] = gate.held_value_bounds();
    REQUIRE_THAT(lo, Catch::Matchers::WithinAbs(0.99, 1e-15));
    REQUIRE_THAT(hi, Catch::Matchers::WithinAbs(1.01, 1e-15));
  }
  SECTION("uninitialized gate has no bounds") {
    SodGate gate(0.1, 0, 0);
    REQUIRE_THROWS_AS(gate.held_value_bounds(), validation_error);
  }
}

TEST_CASE("held error never exceeds delta after an evaluation") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> step(0.0, 0.08);
  const double delta = 0.1;
  SodGate gate(delta, 0, 0);
  double y = 48.0;
  for (int k = 0; k < 5000; ++k) {
    y += step(rng);
    gate.evaluate(y, static_cast<double>(k));
    REQUIRE(std::abs(y - gate.last_sent()) <= delta);
  }
}

TEST_CASE("larger thresholds never produce more events") {
  std::mt19937_64 rng(32);
  std::normal_distribution<double> step(0.0, 0.15);
  std::vector<double> values{48.0};
  for (int k = 0; k < 2000; ++k) values.push_back(values.back() + step(rng));
  long previous = std::numeric_limits<long>::max();
  for (double delta : {0.0, 0.05, 0.1, 0.2, 0.5}) {
    const long events = count_events(delta, values);
    REQUIRE(events <= previous);
    previous = events;
  }
}
