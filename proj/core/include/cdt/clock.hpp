#pragma once

#include <cstdint>

namespace cdt {

// Simulated time. One tick is one second; tick 0 is a Monday at 00:00.
// Every timestamp in persisted output comes from this clock, never from the
// host, so replays are reproducible.
using Tick = int64_t;

constexpr Tick kTicksPerMinute = 60;
constexpr Tick kTicksPerHour = 3600;
constexpr Tick kTicksPerDay = 86400;

constexpr Tick minutes(int64_t m) { return m * kTicksPerMinute; }

// Half-hour slot of the day, 0..47.
constexpr int timeslot_of(Tick t) {
    const Tick mins_of_day = (t % kTicksPerDay) / kTicksPerMinute;
    return static_cast<int>(mins_of_day / 30);
}

// Day of week, 1..7 with Monday = 1.
constexpr int day_of_week(Tick t) {
    return static_cast<int>((t / kTicksPerDay) % 7) + 1;
}

} // namespace cdt
