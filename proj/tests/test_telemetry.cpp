#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "etkf/telemetry.hpp"
#include "fake_broker.hpp"

using namespace etkf;
using Bytes = std::vector<std::uint8_t>;

TEST_CASE("remaining-length varint follows the protocol table") {
  REQUIRE(mqtt::encode_remaining_length(0) == Bytes{0x00});
  REQUIRE(mqtt::encode_remaining_length(127) == Bytes{0x7f});
  REQUIRE(mqtt::encode_remaining_length(128) == Bytes{0x80, 0x01});
  REQUIRE(mqtt::encode_remaining_length(16383) == Bytes{0xff, 0x7f});
  REQUIRE(mqtt::encode_remaining_length(16384) == Bytes{0x80, 0x80, 0x01});
  REQUIRE(mqtt::encode_remaining_length(268435455) == Bytes{0xff, 0xff, 0xff, 0x7f});
  REQUIRE_THROWS_AS(mqtt::encode_remaining_length(268435456), validation_error);
}

TEST_CASE("connect packet bytes") {
  const Bytes pkt = mqtt::encode_connect("abc", 60);
  const Bytes expect{0x10, 0x0f, 0x00, 0x04, 'M', 'Q', 'T', 'T', 0x04,
                     0x02, 0x00, 0x3c, 0x00, 0x03, 'a', 'b', 'c'};
  REQUIRE(pkt == expect);
}

TEST_CASE("qos0 publish packet bytes") {
  const Bytes pkt = mqtt::encode_publish("a/b", "hi");
  const Bytes expect{0x30, 0x07, 0x00, 0x03, 'a', '/', 'b', 'h', 'i'};
  REQUIRE(pkt == expect);
  REQUIRE(mqtt::encode_disconnect() == Bytes{0xe0, 0x00});
}

TEST_CASE("broker url parsing") {
  const auto a = mqtt::parse_url("mqtt://broker.local:8883");
  REQUIRE(a.host == "broker.local");
  REQUIRE(a.port == 8883);
  const auto b = mqtt::parse_url("10.0.0.1");
  REQUIRE(b.host == "10.0.0.1");
  REQUIRE(b.port == 1883);
  const auto c = mqtt::parse_url("mqtt://host");
  REQUIRE(c.host == "host");
  REQUIRE(c.port == 1883);
  REQUIRE_THROWS_AS(mqtt::parse_url("mqtt://host:notaport"), validation_error);
  REQUIRE_THROWS_AS(mqtt::parse_url("mqtt://host:99999"), validation_error);
  REQUIRE_THROWS_AS(mqtt::parse_url("mqtt://"), validation_error);
}

TEST_CASE("publisher talks MQTT 3.1.1 to a loopback broker") {
  etkf_test::FakeBroker broker;
  {
    mqtt::Publisher pub(broker.url(), "tester");
    pub.publish("p/agent/0/estimate", "{\"xhat\":48.0}");
    pub.publish("p/agent/1/estimate", "{\"xhat\":47.5}");
  }  // destructor sends DISCONNECT
  broker.join();
  REQUIRE(broker.saw_connect);
  REQUIRE(broker.published.size() == 2);
  REQUIRE(broker.published[0].first == "p/agent/0/estimate");
  REQUIRE(broker.published[0].second == "{\"xhat\":48.0}");
  REQUIRE(broker.published[1].first == "p/agent/1/estimate");
}

TEST_CASE("unreachable broker raises io_error") {
  // Port 1 on loopback is assumed closed.
  REQUIRE_THROWS_AS(mqtt::Publisher("mqtt://127.0.0.1:1", "tester"), io_error);
}
