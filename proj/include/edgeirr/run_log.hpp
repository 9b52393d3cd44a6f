#pragma once

// Complete record of one simulation run, in processing order.
//
// Line format (one record per line, comma separated):
//   t,kind,entity,payload...
// t is simulated seconds with millisecond precision. Payload columns per kind:
//   soil     gh<id>   moisture(4dp),open|closed
//   emit     m<id>    msg,gh,true_moisture(4dp),measured(2dp)
//   relay    gw<id>   msg,class
//   deliver  edge     msg,sample,m<id>,measured(2dp),sampled_at
//   deliver  a<id>    msg,command,action,origin,issued_at
//   deliver  edge     msg,ack,a<id>,action,applied_at
//   command  a<id>    msg,gh,action,origin,cause
//   valve    a<id>    gh,action,origin,changed|same
//   drop     <from>   msg,class,hop
//   final    gh<id>   moisture(4dp),open|closed,open_seconds(3dp),water_liters(3dp)

#include "edgeirr/domain.hpp"

#include <array>
#include <fmt/format.h>
#include <map>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace edgeirr::netsim {

enum class MessageClass : std::uint8_t
{
    Sample,
    Command,
    Ack
};

inline std::string_view to_string(MessageClass c) noexcept
{
    switch (c)
    {
    case MessageClass::Sample: return "sample";
    case MessageClass::Command: return "command";
    case MessageClass::Ack: return "ack";
    }
    return "?";
}

enum class NodeKind : std::uint8_t
{
    Mote,
    Gateway,
    Edge,
    Actuator
};

struct NodeRef
{
    NodeKind kind = NodeKind::Edge;
    std::uint16_t id = 0;

    bool operator==(const NodeRef&) const = default;
};

inline std::string node_name(NodeRef n)
{
    switch (n.kind)
    {
    case NodeKind::Mote: return fmt::format("m{}", n.id);
    case NodeKind::Gateway: return fmt::format("gw{}", n.id);
    case NodeKind::Actuator: return fmt::format("a{}", n.id);
    case NodeKind::Edge: return "edge";
    }
    return "?";
}

/// What made the edge node issue a command.
enum class CommandCause : std::uint8_t
{
    SampleArrival,
    AckArrival,
    Timer,
    External // operator API, outside event processing
};

inline std::string_view to_string(CommandCause c) noexcept
{
    switch (c)
    {
    case CommandCause::SampleArrival: return "sample";
    case CommandCause::AckArrival: return "ack";
    case CommandCause::Timer: return "timer";
    case CommandCause::External: return "external";
    }
    return "?";
}

struct SoilSnapshot
{
    SimTime t;
    GreenhouseId gh;
    double moisture;
    bool valve_open;
};

struct SampleEmitted
{
    SimTime t;
    std::uint64_t msg;
    GreenhouseId gh;
    double true_moisture;
    MoistureSample sample;
};

struct MessageRelayed
{
    SimTime t;
    std::uint64_t msg;
    MessageClass cls;
    GatewayId gateway;
};

struct SampleDelivered
{
    SimTime t;
    std::uint64_t msg;
    MoistureSample sample;
};

struct CommandDelivered
{
    SimTime t;
    std::uint64_t msg;
    ValveCommand cmd;
};

struct AckDelivered
{
    SimTime t;
    std::uint64_t msg;
    ValveAck ack;
};

struct CommandIssued
{
    SimTime t;
    std::uint64_t msg;
    GreenhouseId gh;
    ValveCommand cmd;
    CommandCause cause;
};

struct ValveApplied
{
    SimTime t;
    ActuatorId actuator;
    GreenhouseId gh;
    ValveAction action;
    CommandOrigin origin;
    bool changed;
};

struct MessageDropped
{
    SimTime t;
    std::uint64_t msg;
    MessageClass cls;
    std::size_t hop;
    NodeRef from;
    GreenhouseId gh;
};

using LogEntry = std::variant<SoilSnapshot, SampleEmitted, MessageRelayed, SampleDelivered,
                              CommandDelivered, AckDelivered, CommandIssued, ValveApplied,
                              MessageDropped>;

struct MessageCounters
{
    std::uint64_t emitted = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;

    bool operator==(const MessageCounters&) const = default;
};

struct FinalState
{
    GreenhouseId gh;
    double moisture = 0.0;
    bool valve_open = false;
    SimTime valve_open_time{0};
    double water_liters = 0.0;
};

struct RunLog
{
    SimTime duration{0};
    std::uint64_t seed = 0;
    std::vector<LogEntry> entries;
    std::array<MessageCounters, 3> counters{};
    std::vector<FinalState> finals;

    const MessageCounters& counter(MessageClass c) const
    {
        return counters[static_cast<std::size_t>(c)];
    }

    template <class T>
    std::vector<T> select() const
    {
        std::vector<T> out;
        for (const auto& e : entries)
            if (const T* p = std::get_if<T>(&e))
                out.push_back(*p);
        return out;
    }

    const FinalState& final_state(GreenhouseId gh) const
    {
        for (const auto& f : finals)
            if (f.gh == gh)
                return f;
        throw NotFound(fmt::format("no final state for greenhouse {}", gh.value));
    }
};

inline std::string format_time(SimTime t)
{
    const auto ms = t.count();
    return fmt::format("{}.{:03d}", ms / 1000, ms % 1000);
}

inline std::string_view valve_word(bool open) noexcept
{
    return open ? "open" : "closed";
}

inline std::string_view action_word(ValveAction a) noexcept
{
    return a == ValveAction::Open ? "open" : "close";
}

inline std::string_view origin_word(CommandOrigin o) noexcept
{
    return o == CommandOrigin::AutoController ? "auto" : "manual";
}

inline std::string format_entry(const LogEntry& entry)
{
    return std::visit(
        [](const auto& e) -> std::string {
            using T = std::decay_t<decltype(e)>;
            const auto t = format_time(e.t);
            if constexpr (std::is_same_v<T, SoilSnapshot>)
                return fmt::format("{},soil,gh{},{:.4f},{}", t, e.gh.value, e.moisture,
                                   valve_word(e.valve_open));
            else if constexpr (std::is_same_v<T, SampleEmitted>)
                return fmt::format("{},emit,m{},{},{},{:.4f},{:.2f}", t, e.sample.mote.value, e.msg,
                                   e.gh.value, e.true_moisture, e.sample.moisture);
            else if constexpr (std::is_same_v<T, MessageRelayed>)
                return fmt::format("{},relay,gw{},{},{}", t, e.gateway.value, e.msg, to_string(e.cls));
            else if constexpr (std::is_same_v<T, SampleDelivered>)
                return fmt::format("{},deliver,edge,{},sample,m{},{:.2f},{}", t, e.msg,
                                   e.sample.mote.value, e.sample.moisture,
                                   format_time(e.sample.sampled_at));
            else if constexpr (std::is_same_v<T, CommandDelivered>)
                return fmt::format("{},deliver,a{},{},command,{},{},{}", t, e.cmd.target.value, e.msg,
                                   action_word(e.cmd.action), origin_word(e.cmd.origin),
                                   format_time(e.cmd.issued_at));
            else if constexpr (std::is_same_v<T, AckDelivered>)
                return fmt::format("{},deliver,edge,{},ack,a{},{},{}", t, e.msg, e.ack.actuator.value,
                                   action_word(e.ack.command.action), format_time(e.ack.applied_at));
            else if constexpr (std::is_same_v<T, CommandIssued>)
                return fmt::format("{},command,a{},{},{},{},{},{}", t, e.cmd.target.value, e.msg,
                                   e.gh.value, action_word(e.cmd.action), origin_word(e.cmd.origin),
                                   to_string(e.cause));
            else if constexpr (std::is_same_v<T, ValveApplied>)
                return fmt::format("{},valve,a{},{},{},{},{}", t, e.actuator.value, e.gh.value,
                                   action_word(e.action), origin_word(e.origin),
                                   e.changed ? "changed" : "same");
            else
                return fmt::format("{},drop,{},{},{},{}", t, node_name(e.from), e.msg,
                                   to_string(e.cls), e.hop);
        },
        entry);
}

inline void write_run_log(std::ostream& out, const RunLog& log)
{
    out << "t,kind,entity,payload\n";
    for (const auto& e : log.entries)
        out << format_entry(e) << '\n';
    for (const auto& f : log.finals)
        out << fmt::format("{},final,gh{},{:.4f},{},{},{:.3f}\n", format_time(log.duration),
                           f.gh.value, f.moisture, valve_word(f.valve_open),
                           format_time(f.valve_open_time), f.water_liters);
}

} // namespace edgeirr::netsim
