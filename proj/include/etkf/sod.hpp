#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "etkf/errors.hpp"

namespace etkf {

/// A value transmitted between agents through the message bus.
struct EventMessage {
  int sender = 0;
  int channel = 0;
  double value = 0.0;
  double sent_at = 0.0;
};

/// Send-on-delta gate for one channel. Transmits when the monitored value
/// moves strictly more than delta away from the last transmitted value; the
/// very first evaluation always transmits. Between transmissions the held
/// error |y - last_sent| never exceeds delta at an evaluated instant.
class SodGate {
 public:
  SodGate(double delta, int sender, int channel)
      : delta_(delta), sender_(sender), channel_(channel) {
    if (delta < 0.0) throw validation_error("send-on-delta threshold must be >= 0");
  }

  std::optional<EventMessage> evaluate(double y, double t) {
    if (!std::isfinite(y))
      throw validation_error("send-on-delta gate fed a non-finite value");
    if (last_sent_ && t < last_sent_time_)
      throw validation_error("send-on-delta gate evaluated backwards in time");
    if (last_sent_ && !(std::abs(y - *last_sent_) > delta_)) return std::nullopt;
    last_sent_ = y;
    last_sent_time_ = t;
    return EventMessage{sender_, channel_, y, t};
  }

  /// Interval guaranteed to contain the current true value: last_sent +/- delta.
  std::pair<double, double> held_value_bounds() const {
    if (!last_sent_)
      throw validation_error("held_value_bounds on a gate that never transmitted");
    return {*last_sent_ - delta_, *last_sent_ + delta_};
  }

  double delta() const { return delta_; }
  bool initialized() const { return last_sent_.has_value(); }
  double last_sent() const {
    if (!last_sent_) throw validation_error("gate never transmitted");
    return *last_sent_;
  }
  double last_sent_time() const { return last_sent_time_; }

 private:
  double delta_;
  int sender_;
  int channel_;
  std::optional<double> last_sent_;
  double last_sent_time_ = 0.0;
};

}  // namespace etkf
