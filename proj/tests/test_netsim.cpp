#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "etkf/netsim.hpp"

using namespace etkf;

namespace {

EventMessage msg(int sender, double value, double t) {
  return EventMessage{sender, sender, value, t};
}

struct DeliveryRecord {
  int to;
  double value;
  bool operator==(const DeliveryRecord&) const = default;
};

std::vector<DeliveryRecord> drain(MessageBus& bus, double now) {
  std::vector<DeliveryRecord> out;
  auto grouped = bus.deliver_due(now);
  for (int to = 0; to < static_cast<int>(grouped.size()); ++to)
    for (const EventMessage& m : grouped[to]) out.push_back({to, m.value});
  return out;
}

}  // namespace

TEST_CASE("publish and deliver with fixed delays") {
  SECTION("zero delay is deliverable immediately") {
    MessageBus bus(2, 0.0, 0.0, 1);
    bus.publish(msg(0, 1.5, 1.0), {1}, 1.0);
    const auto got = drain(bus, 1.0);
    REQUIRE(got == std::vector<DeliveryRecord>{{1, 1.5}});
  }
  SECTION("150 ms delay lands at t + 0.15") {
    MessageBus bus(2, 0.15, 0.0, 1);
    bus.publish(msg(0, 7.0, 2.0), {1}, 2.0);
    REQUIRE(drain(bus, 2.1).empty());
    REQUIRE(drain(bus, 2.15) == std::vector<DeliveryRecord>{{1, 7.0}});
  }
  SECTION("drop probability one never delivers") {
    MessageBus bus(2, 0.0, 1.0, 1);
    for (int k = 0; k < 50; ++k) bus.publish(msg(0, k, k), {1}, k);
    REQUIRE(drain(bus, 100.0).empty());
    REQUIRE(bus.dropped() == 50);
  }
  SECTION("same-instant deliveries keep publication order") {
    MessageBus bus(2, 0.15, 0.0, 1);
    bus.publish(msg(0, 1.0, 2.0), {1}, 2.0);
    bus.publish(msg(0, 2.0, 2.0), {1}, 2.0);
    const auto got = drain(bus, 2.2);
    REQUIRE(got == std::vector<DeliveryRecord>{{1, 1.0}, {1, 2.0}});
  }
  SECTION("only messages due by now come out") {
    MessageBus bus(2, 0.15, 0.0, 1);
    bus.publish(msg(0, 1.0, 2.0), {1}, 2.0);
    bus.publish(msg(0, 2.0, 2.15), {1}, 2.15);
    REQUIRE(drain(bus, 2.20) == std::vector<DeliveryRecord>{{1, 1.0}});
    REQUIRE(bus.in_flight_count() == 1);
  }
  SECTION("empty bus delivers nothing") {
    MessageBus bus(3, 0.1, 0.0, 1);
    REQUIRE(drain(bus, 5.0).empty());
  }
  SECTION("per-link override beats the default delay") {
    MessageBus bus(3, 0.5, 0.0, 1);
    bus.set_link_delay(0, 2, 0.0);
    bus.publish(msg(0, 9.0, 1.0), {1, 2}, 1.0);
    REQUIRE(drain(bus, 1.0) == std::vector<DeliveryRecord>{{2, 9.0}});
    REQUIRE(drain(bus, 1.5) == std::vector<DeliveryRecord>{{1, 9.0}});
  }
  SECTION("unknown recipients and time regressions are rejected") {
    MessageBus bus(2, 0.0, 0.0, 1);
    REQUIRE_THROWS_AS(bus.publish(msg(0, 1.0, 0.0), {5}, 0.0), validation_error);
    bus.publish(msg(0, 1.0, 3.0), {1}, 3.0);
    REQUIRE_THROWS_AS(bus.publish(msg(0, 1.0, 2.0), {1}, 2.0), validation_error);
    bus.deliver_due(3.0);
    REQUIRE_THROWS_AS(bus.deliver_due(2.0), validation_error);
  }
  SECTION("constructor validation") {
    REQUIRE_THROWS_AS(MessageBus(0, 0.0, 0.0, 1), validation_error);
    REQUIRE_THROWS_AS(MessageBus(2, -0.1, 0.0, 1), validation_error);
    REQUIRE_THROWS_AS(MessageBus(2, 0.0, 1.5, 1), validation_error);
  }
}

TEST_CASE("identical publish sequences with the same seed deliver identically") {
  auto run = [] {
    MessageBus bus(3, 0.05, 0.5, 99);
    std::vector<DeliveryRecord> all;
    for (int k = 0; k < 200; ++k) {
      bus.publish(msg(k % 3, k * 0.5, k * 0.01), {(k + 1) % 3, (k + 2) % 3}, k * 0.01);
      auto got = drain(bus, k * 0.01);
      all.insert(all.end(), got.begin(), got.end());
    }
    auto tail = drain(bus, 100.0);
    all.insert(all.end(), tail.begin(), tail.end());
    return all;
  };
  REQUIRE(run() == run());
}

TEST_CASE("zero-delay zero-drop bus is transparent") {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> v(-5.0, 5.0);
  MessageBus bus(4, 0.0, 0.0, 1);
  for (int k = 0; k < 300; ++k) {
    const double t = k * 0.01;
    const int to = k % 4;
    const double value = v(rng);
    bus.publish(msg(0, value, t), {to}, t);
    REQUIRE(drain(bus, t) == std::vector<DeliveryRecord>{{to, value}});
  }
}

TEST_CASE("published = delivered + in flight + dropped under random traffic") {
  std::mt19937_64 rng(56);
  std::uniform_real_distribution<double> delay(0.0, 0.3);
  MessageBus bus(5, 0.1, 0.25, 7);
  long published = 0;
  for (int k = 0; k < 500; ++k) {
    const double t = k * 0.01;
    std::vector<int> recipients;
    for (int r = 0; r < 5; ++r)
      if ((rng() & 1) != 0) recipients.push_back(r);
    bus.publish(msg(k % 5, k, t), recipients, t);
    published += static_cast<long>(recipients.size());
    bus.deliver_due(t);
    REQUIRE(bus.published() == published);
    REQUIRE(bus.delivered() + static_cast<long>(bus.in_flight_count()) + bus.dropped() ==
            published);
  }
}
