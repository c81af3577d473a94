#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "etkf/errors.hpp"

namespace etkf {

inline constexpr std::string_view kTraceCsvHeader = "t,agent,x_true,xbar,xhat,e_meas,event";

struct TraceRow {
  double t = 0.0;
  int agent = 0;
  double x_true = 0.0;
  double xbar = 0.0;
  double xhat = 0.0;
  double e_meas = 0.0;
  int event = 0;

  bool operator==(const TraceRow&) const = default;
};

struct TraceLog {
  std::vector<TraceRow> rows;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

/// Shortest decimal string that round-trips the exact double.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw io_error("bad numeric field in trace: '" + std::string(s) + "'");
  return v;
}

inline void write_csv(const TraceLog& log, std::ostream& os) {
  os << kTraceCsvHeader << '\n';
  for (const TraceRow& r : log.rows) {
    os << format_double(r.t) << ',' << r.agent << ',' << format_double(r.x_true) << ','
       << format_double(r.xbar) << ',' << format_double(r.xhat) << ','
       << format_double(r.e_meas) << ',' << r.event << '\n';
  }
}

inline void write_csv_file(const TraceLog& log, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot open trace file for writing: " + path);
  write_csv(log, os);
  if (!os.good()) throw io_error("failed while writing trace file: " + path);
}

inline TraceLog read_csv(std::istream& is) {
  TraceLog log;
  std::string line;
  if (!std::getline(is, line)) throw io_error("empty trace stream");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceCsvHeader)
    throw io_error("unexpected trace header: '" + line + "'");
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest = line;
    while (true) {
      auto pos = rest.find(',');
      if (pos == std::string_view::npos) {
        fields.push_back(rest);
        break;
      }
      fields.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    if (fields.size() != 7)
      throw io_error("trace row with " + std::to_string(fields.size()) + " fields: " + line);
    TraceRow r;
    r.t = parse_double(fields[0]);
    r.agent = static_cast<int>(parse_double(fields[1]));
    r.x_true = parse_double(fields[2]);
    r.xbar = parse_double(fields[3]);
    r.xhat = parse_double(fields[4]);
    r.e_meas = parse_double(fields[5]);
    r.event = static_cast<int>(parse_double(fields[6]));
    log.rows.push_back(r);
  }
  return log;
}

inline TraceLog read_csv_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open trace file: " + path);
  return read_csv(is);
}

}  // namespace etkf
