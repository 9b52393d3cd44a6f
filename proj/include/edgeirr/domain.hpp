#pragma once

// Shared domain vocabulary: identifiers, simulated time, moisture readings,
// valve commands, and the error types every module throws.

#include <chrono>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace edgeirr {

/// Simulated time since scenario start. Integer milliseconds, never wall clock.
using SimTime = std::chrono::milliseconds;

inline constexpr SimTime kHour = std::chrono::hours{1};
inline constexpr SimTime kDay = std::chrono::hours{24};

inline constexpr double to_hours(SimTime t) noexcept
{
    return static_cast<double>(t.count()) / 3'600'000.0;
}

inline constexpr double to_seconds(SimTime t) noexcept
{
    return static_cast<double>(t.count()) / 1000.0;
}

inline SimTime from_seconds(double s)
{
    return SimTime{std::llround(s * 1000.0)};
}

template <class Tag>
struct Id
{
    std::uint16_t value{};

    constexpr auto operator<=>(const Id&) const = default;
};

using MoteId = Id<struct MoteTag>;
using ActuatorId = Id<struct ActuatorTag>;
using GatewayId = Id<struct GatewayTag>;
using GreenhouseId = Id<struct GreenhouseTag>;

class ContractViolation : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

class ModeConflict : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class NotFound : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Readings are carried at 0.01 percent resolution.
inline double quantize_moisture(double m) noexcept
{
    return std::round(m * 100.0) / 100.0;
}

inline double clamp_moisture(double m) noexcept
{
    return m < 0.0 ? 0.0 : (m > 100.0 ? 100.0 : m);
}

struct MoistureSample
{
    MoteId mote;
    GreenhouseId greenhouse;
    double moisture = 0.0; // percent VWC
    SimTime sampled_at{0};

    bool operator==(const MoistureSample&) const = default;
};

enum class ValveAction : std::uint8_t
{
    Open,
    Close
};

enum class CommandOrigin : std::uint8_t
{
    AutoController,
    ManualOperator
};

struct ValveCommand
{
    ActuatorId target;
    ValveAction action = ValveAction::Close;
    SimTime issued_at{0};
    CommandOrigin origin = CommandOrigin::AutoController;

    bool operator==(const ValveCommand&) const = default;
};

/// State report an actuator sends back after applying a command.
struct ValveAck
{
    ActuatorId actuator;
    ValveCommand command;
    SimTime applied_at{0};

    bool operator==(const ValveAck&) const = default;
};

struct MoistureBand
{
    double low_lim = 50.0;
    double upper_lim = 55.0;

    bool valid() const noexcept
    {
        return 0.0 <= low_lim && low_lim < upper_lim && upper_lim <= 100.0;
    }

    bool contains(double m, double tolerance = 0.0) const noexcept
    {
        return m >= low_lim - tolerance && m <= upper_lim + tolerance;
    }

    bool operator==(const MoistureBand&) const = default;
};

struct PlantProfile
{
    std::string name;
    double uptake_rate_day = 0.0;   // percent per hour
    double uptake_rate_night = 0.0; // percent per hour

    bool valid() const noexcept
    {
        return uptake_rate_night > 0.0 && uptake_rate_day >= uptake_rate_night;
    }

    bool operator==(const PlantProfile&) const = default;
};

struct AmbientConditions
{
    double temperature = 36.0; // degrees Celsius
    bool is_day = true;
};

enum class EdgeMode : std::uint8_t
{
    EdgeOnly,
    WithBackhaul
};

enum class ControlMode : std::uint8_t
{
    Auto,
    Manual
};

enum class ValveBelief : std::uint8_t
{
    Open,
    Closed,
    Unknown
};

inline ValveBelief belief_of(ValveAction a) noexcept
{
    return a == ValveAction::Open ? ValveBelief::Open : ValveBelief::Closed;
}

inline std::string_view to_string(ValveAction a) noexcept
{
    return a == ValveAction::Open ? "Open" : "Close";
}

inline std::string_view to_string(CommandOrigin o) noexcept
{
    return o == CommandOrigin::AutoController ? "AutoController" : "ManualOperator";
}

inline std::string_view to_string(ControlMode m) noexcept
{
    return m == ControlMode::Auto ? "Auto" : "Manual";
}

inline std::string_view to_string(EdgeMode m) noexcept
{
    return m == EdgeMode::EdgeOnly ? "EdgeOnly" : "WithBackhaul";
}

inline std::string_view to_string(ValveBelief b) noexcept
{
    switch (b)
    {
    case ValveBelief::Open: return "Open";
    case ValveBelief::Closed: return "Closed";
    case ValveBelief::Unknown: return "Unknown";
    }
    return "Unknown";
}

inline ValveAction parse_valve_action(std::string_view s)
{
    if (s == "Open" || s == "open")
        return ValveAction::Open;
    if (s == "Close" || s == "close" || s == "Closed" || s == "closed")
        return ValveAction::Close;
    throw std::invalid_argument("unknown valve action: " + std::string{s});
}

inline ControlMode parse_control_mode(std::string_view s)
{
    if (s == "Auto" || s == "auto")
        return ControlMode::Auto;
    if (s == "Manual" || s == "manual")
        return ControlMode::Manual;
    throw std::invalid_argument("unknown control mode: " + std::string{s});
}

inline EdgeMode parse_edge_mode(std::string_view s)
{
    if (s == "EdgeOnly")
        return EdgeMode::EdgeOnly;
    if (s == "WithBackhaul")
        return EdgeMode::WithBackhaul;
    throw std::invalid_argument("unknown edge mode: " + std::string{s});
}

} // namespace edgeirr

template <class Tag>
struct std::hash<edgeirr::Id<Tag>>
{
    std::size_t operator()(const edgeirr::Id<Tag>& id) const noexcept
    {
        return std::hash<std::uint16_t>{}(id.value);
    }
};
