#pragma once

#include <cstdint>
#include <queue>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "etkf/errors.hpp"
#include "etkf/sod.hpp"

namespace etkf {

/// Deterministic store-and-forward bus between agents. Every published
/// message is enqueued per recipient with a fixed delay (a per-link override
/// table may refine the default) and an optional seeded drop coin-flip.
/// Deliveries come out in (deliver_at, publication order).
class MessageBus {
 public:
  MessageBus(int agent_count, double default_delay, double drop_probability,
             std::uint64_t seed)
      : agent_count_(agent_count),
        default_delay_(default_delay),
        drop_probability_(drop_probability),
        rng_(seed) {
    if (agent_count < 1) throw validation_error("bus needs at least one agent");
    if (default_delay < 0.0) throw validation_error("bus delay must be >= 0");
    if (drop_probability < 0.0 || drop_probability > 1.0)
      throw validation_error("drop probability must be in [0, 1]");
  }

  void set_link_delay(int from, int to, double delay) {
    if (delay < 0.0) throw validation_error("link delay must be >= 0");
    check_agent(from);
    check_agent(to);
    link_delays_.push_back({from, to, delay});
  }

  void publish(const EventMessage& msg, const std::vector<int>& recipients, double now) {
    if (now < last_publish_time_)
      throw validation_error("bus publish time went backwards");
    last_publish_time_ = now;
    for (int to : recipients) {
      check_agent(to);
      ++published_;
      if (drop_probability_ > 0.0 &&
          std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < drop_probability_) {
        ++dropped_;
        continue;
      }
      in_flight_.push(InFlight{now + link_delay(msg.sender, to), next_seq_++, to, msg});
    }
  }

  /// Pop everything due by `now`, grouped per recipient agent.
  std::vector<std::vector<EventMessage>> deliver_due(double now) {
    if (now < last_deliver_time_)
      throw validation_error("bus delivery time went backwards");
    last_deliver_time_ = now;
    std::vector<std::vector<EventMessage>> out(agent_count_);
    while (!in_flight_.empty() && in_flight_.top().deliver_at <= now) {
      const InFlight& f = in_flight_.top();
      out[f.to].push_back(f.msg);
      ++delivered_;
      in_flight_.pop();
    }
    return out;
  }

  std::size_t in_flight_count() const { return in_flight_.size(); }
  long published() const { return published_; }
  long delivered() const { return delivered_; }
  long dropped() const { return dropped_; }

 private:
  struct InFlight {
    double deliver_at;
    std::uint64_t seq;
    int to;
    EventMessage msg;
    bool operator>(const InFlight& o) const {
      return std::tie(deliver_at, seq) > std::tie(o.deliver_at, o.seq);
    }
  };

  void check_agent(int id) const {
    if (id < 0 || id >= agent_count_)
      throw validation_error("unknown bus recipient " + std::to_string(id));
  }

  double link_delay(int from, int to) const {
    for (const auto& l : link_delays_)
      if (l.from == from && l.to == to) return l.delay;
    return default_delay_;
  }

  struct LinkDelay {
    int from, to;
    double delay;
  };

  int agent_count_;
  double default_delay_;
  double drop_probability_;
  std::mt19937_64 rng_;
  std::vector<LinkDelay> link_delays_;
  std::priority_queue<InFlight, std::vector<InFlight>, std::greater<>> in_flight_;
  std::uint64_t next_seq_ = 0;
  double last_publish_time_ = 0.0;
  double last_deliver_time_ = 0.0;
  long published_ = 0;
  long delivered_ = 0;
  long dropped_ = 0;
};

}  // namespace etkf
