#pragma once

// Irrigation decision strategies. All functions are pure: they look at an
// explicit ControllerState and return the command to issue, if any. The
// caller owns the state and applies the belief update when it sends.

#include "edgeirr/domain.hpp"

#include <map>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace edgeirr::control {

struct TimedSchedule
{
    SimTime period{0};
    SimTime duration{0};
    SimTime phase{0};

    bool valid() const noexcept
    {
        return SimTime::zero() < duration && duration < period && phase >= SimTime::zero();
    }

    bool operator==(const TimedSchedule&) const = default;
};

/// Common irrigation programmer: every second day for half an hour.
inline TimedSchedule programmer_schedule(SimTime phase = SimTime::zero())
{
    return {std::chrono::hours{48}, std::chrono::minutes{30}, phase};
}

/// Farmer routine: twice a day for two hours.
inline TimedSchedule farmer_schedule(SimTime phase = std::chrono::hours{7})
{
    return {std::chrono::hours{12}, std::chrono::hours{2}, phase};
}

struct Hysteresis
{
    MoistureBand band;
    bool operator==(const Hysteresis&) const = default;
};

struct TimedProgram
{
    TimedSchedule schedule;
    bool operator==(const TimedProgram&) const = default;
};

struct FarmerSchedule
{
    TimedSchedule schedule;
    bool operator==(const FarmerSchedule&) const = default;
};

using ControlStrategy = std::variant<Hysteresis, TimedProgram, FarmerSchedule>;

inline const TimedSchedule* schedule_of(const ControlStrategy& s) noexcept
{
    if (auto* t = std::get_if<TimedProgram>(&s))
        return &t->schedule;
    if (auto* f = std::get_if<FarmerSchedule>(&s))
        return &f->schedule;
    return nullptr;
}

inline std::string_view strategy_name(const ControlStrategy& s) noexcept
{
    switch (s.index())
    {
    case 0: return "Hysteresis";
    case 1: return "TimedProgram";
    default: return "FarmerSchedule";
    }
}

struct ControllerState
{
    GreenhouseId greenhouse;
    ActuatorId actuator;
    ValveBelief believed_valve = ValveBelief::Closed;
    std::map<MoteId, MoistureSample> last_samples;
    ControlMode mode = ControlMode::Auto;
};

struct Aggregate
{
    double value = 0.0;
    bool stale = false; // every sample was older than the staleness limit
};

/// Mean of the fresh samples; falls back to the mean of all when none is fresh.
inline Aggregate aggregate(std::span<const MoistureSample> samples, SimTime now,
                           SimTime staleness_limit)
{
    if (samples.empty())
        throw ContractViolation("aggregate: no samples");

    double fresh_sum = 0.0;
    double all_sum = 0.0;
    std::size_t fresh = 0;
    for (const auto& s : samples)
    {
        all_sum += s.moisture;
        if (s.sampled_at >= now - staleness_limit)
        {
            fresh_sum += s.moisture;
            ++fresh;
        }
    }
    if (fresh > 0)
        return {fresh_sum / static_cast<double>(fresh), false};
    return {all_sum / static_cast<double>(samples.size()), true};
}

inline std::optional<Aggregate> aggregate(const ControllerState& state, SimTime now,
                                          SimTime staleness_limit)
{
    if (state.last_samples.empty())
        return std::nullopt;
    std::vector<MoistureSample> latest;
    latest.reserve(state.last_samples.size());
    for (const auto& [mote, s] : state.last_samples)
        latest.push_back(s);
    return aggregate(latest, now, staleness_limit);
}

/// Edge-triggered two-threshold control. Inside the band, and exactly on a
/// limit, the valve holds whatever it is doing.
inline std::optional<ValveCommand> evaluate_hysteresis(const ControllerState& state,
                                                       const MoistureBand& band,
                                                       double aggregated, SimTime now)
{
    if (state.mode != ControlMode::Auto)
        throw ContractViolation("evaluate_hysteresis: greenhouse is in manual mode");

    if (aggregated < band.low_lim && state.believed_valve != ValveBelief::Open)
        return ValveCommand{state.actuator, ValveAction::Open, now, CommandOrigin::AutoController};
    if (aggregated > band.upper_lim && state.believed_valve != ValveBelief::Closed)
        return ValveCommand{state.actuator, ValveAction::Close, now, CommandOrigin::AutoController};
    return std::nullopt;
}

inline SimTime floor_mod(SimTime a, SimTime m) noexcept
{
    const SimTime r = a % m;
    return r < SimTime::zero() ? r + m : r;
}

/// True while now lies in an activation window [phase + k*period, +duration).
inline bool schedule_wants_open(const TimedSchedule& schedule, SimTime now) noexcept
{
    return floor_mod(now - schedule.phase, schedule.period) < schedule.duration;
}

/// Next activation or deactivation instant strictly after now.
inline SimTime next_schedule_edge(const TimedSchedule& schedule, SimTime now) noexcept
{
    const SimTime into = floor_mod(now - schedule.phase, schedule.period);
    const SimTime cycle_start = now - into;
    if (into < schedule.duration)
        return cycle_start + schedule.duration;
    return cycle_start + schedule.period;
}

inline std::optional<ValveCommand> evaluate_timed(const TimedSchedule& schedule, SimTime now,
                                                  ValveBelief believed, ActuatorId actuator)
{
    if (!schedule.valid())
        throw ContractViolation("evaluate_timed: invalid schedule");

    const ValveAction want = schedule_wants_open(schedule, now) ? ValveAction::Open
                                                                : ValveAction::Close;
    if (belief_of(want) == believed)
        return std::nullopt;
    return ValveCommand{actuator, want, now, CommandOrigin::AutoController};
}

/// Operator command. Always emitted, even when it matches the current belief,
/// so an actuator that missed an earlier packet can catch up.
inline std::pair<ControllerState, ValveCommand> apply_manual_override(ControllerState state,
                                                                      ValveAction action,
                                                                      SimTime now)
{
    if (state.mode != ControlMode::Manual)
        throw ModeConflict("manual valve override requires Manual mode");

    ValveCommand cmd{state.actuator, action, now, CommandOrigin::ManualOperator};
    state.believed_valve = belief_of(action);
    return {std::move(state), cmd};
}

} // namespace edgeirr::control
