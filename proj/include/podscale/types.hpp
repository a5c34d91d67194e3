#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>

namespace podscale {

// CPU quantities in millicores.
using Millicores = std::int64_t;

// Request rates in milli-requests per second, so decimal rates from
// scenario tables (e.g. 8.5 req/s) are represented exactly.
using MilliRate = std::int64_t;

// Work in micro-core-seconds (1e-3 millicore-seconds). Arrivals, processing
// and backlog are all integral in this unit, which keeps work conservation
// exact.
using MicroWork = std::int64_t;

inline constexpr MicroWork kMicroWorkPerMcs = 1000;

struct ServiceId {
  int value = 0;

  friend auto operator<=>(const ServiceId&, const ServiceId&) = default;
  friend std::ostream& operator<<(std::ostream& os, ServiceId id) {
    return os << id.value;
  }
};

inline double rate_to_rps(MilliRate r) { return static_cast<double>(r) / 1000.0; }
MilliRate rps_to_rate(double rps);

}  // namespace podscale

template <>
struct std::hash<podscale::ServiceId> {
  std::size_t operator()(podscale::ServiceId id) const noexcept {
    return std::hash<int>{}(id.value);
  }
};
