#pragma once

#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdint>
#include <string>
#include <vector>

#include "etkf/errors.hpp"

namespace etkf::mqtt {

/// MQTT variable-length remaining-length field (7 bits per byte, high bit
/// continues).
inline std::vector<std::uint8_t> encode_remaining_length(std::size_t length) {
  if (length > 268435455) throw validation_error("mqtt: packet too large");
  std::vector<std::uint8_t> out;
  do {
    std::uint8_t byte = length % 128;
    length /= 128;
    if (length > 0) byte |= 0x80;
    out.push_back(byte);
  } while (length > 0);
  return out;
}

inline void append_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

inline void append_string(std::vector<std::uint8_t>& out, const std::string& s) {
  if (s.size() > 0xffff) throw validation_error("mqtt: string too long");
  append_u16(out, static_cast<std::uint16_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

/// CONNECT, protocol level 4 (MQTT 3.1.1), clean session, no will/auth.
inline std::vector<std::uint8_t> encode_connect(const std::string& client_id,
                                                std::uint16_t keepalive_s = 60) {
  std::vector<std::uint8_t> body;
  append_string(body, "MQTT");
  body.push_back(0x04);  // protocol level
  body.push_back(0x02);  // clean session
  append_u16(body, keepalive_s);
  append_string(body, client_id);

  std::vector<std::uint8_t> pkt{0x10};
  auto rl = encode_remaining_length(body.size());
  pkt.insert(pkt.end(), rl.begin(), rl.end());
  pkt.insert(pkt.end(), body.begin(), body.end());
  return pkt;
}

/// PUBLISH at QoS 0 (no packet id).
inline std::vector<std::uint8_t> encode_publish(const std::string& topic,
                                                const std::string& payload) {
  std::vector<std::uint8_t> body;
  append_string(body, topic);
  body.insert(body.end(), payload.begin(), payload.end());

  std::vector<std::uint8_t> pkt{0x30};
  auto rl = encode_remaining_length(body.size());
  pkt.insert(pkt.end(), rl.begin(), rl.end());
  pkt.insert(pkt.end(), body.begin(), body.end());
  return pkt;
}

inline std::vector<std::uint8_t> encode_disconnect() { return {0xe0, 0x00}; }

struct BrokerAddress {
  std::string host;
  std::uint16_t port = 1883;
};

/// Accepts mqtt://host[:port] or bare host[:port].
inline BrokerAddress parse_url(const std::string& url) {
  std::string rest = url;
  const std::string scheme = "mqtt://";
  if (rest.rfind(scheme, 0) == 0) rest = rest.substr(scheme.size());
  if (rest.empty()) throw validation_error("mqtt: empty broker url");
  BrokerAddress addr;
  auto colon = rest.rfind(':');
  if (colon == std::string::npos) {
    addr.host = rest;
  } else {
    addr.host = rest.substr(0, colon);
    const std::string port = rest.substr(colon + 1);
    try {
      const int p = std::stoi(port);
      if (p < 1 || p > 65535) throw std::out_of_range("port");
      addr.port = static_cast<std::uint16_t>(p);
    } catch (const std::exception&) {
      throw validation_error("mqtt: bad port in url '" + url + "'");
    }
  }
  if (addr.host.empty()) throw validation_error("mqtt: empty host in url '" + url + "'");
  return addr;
}

/// Fire-and-forget QoS-0 publisher. Connects eagerly, waits for CONNACK,
/// then streams PUBLISH packets. Any socket trouble throws io_error; callers
/// treating telemetry as optional catch and carry on.
class Publisher {
 public:
  explicit Publisher(const std::string& url, const std::string& client_id) {
    const BrokerAddress addr = parse_url(url);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(addr.host.c_str(), std::to_string(addr.port).c_str(), &hints, &res) != 0)
      throw io_error("mqtt: cannot resolve broker host " + addr.host);
    int fd = -1;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
      fd = socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd < 0) continue;
      timeval tv{2, 0};
      setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
      setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
      if (connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
      ::close(fd);
      fd = -1;
    }
    freeaddrinfo(res);
    if (fd < 0) throw io_error("mqtt: cannot connect to broker at " + url);
    fd_ = fd;
    send_all(encode_connect(client_id));
    std::uint8_t ack[4];
    if (!recv_exact(ack, 4) || ack[0] != 0x20 || ack[3] != 0x00) {
      ::close(fd_);
      fd_ = -1;
      throw io_error("mqtt: broker rejected the connection");
    }
  }

  Publisher(const Publisher&) = delete;
  Publisher& operator=(const Publisher&) = delete;

  ~Publisher() {
    if (fd_ >= 0) {
      const auto pkt = encode_disconnect();
      ::send(fd_, pkt.data(), pkt.size(), MSG_NOSIGNAL);
      ::close(fd_);
    }
  }

  void publish(const std::string& topic, const std::string& payload) {
    send_all(encode_publish(topic, payload));
  }

 private:
  void send_all(const std::vector<std::uint8_t>& data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
      const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) throw io_error("mqtt: send failed");
      sent += static_cast<std::size_t>(n);
    }
  }

  bool recv_exact(std::uint8_t* buf, std::size_t len) {
    std::size_t got = 0;
    while (got < len) {
      const ssize_t n = ::recv(fd_, buf + got, len - got, 0);
      if (n <= 0) return false;
      got += static_cast<std::size_t>(n);
    }
    return true;
  }

  int fd_ = -1;
};

}  // namespace etkf::mqtt
