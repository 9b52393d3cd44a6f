#pragma once

// Deterministic discrete-event simulation of the field network: motes sample
// soil, readings travel mote -> gateway -> edge over lossy links, commands
// travel edge -> gateway -> actuator, actuators switch valves and report
// back, and soil physics advances between events.
//
// The loop is single-threaded. Events are ordered by (fire_at, seq); the edge
// node is called synchronously through EdgeHooks.

#include "edgeirr/rng.hpp"
#include "edgeirr/run_log.hpp"
#include "edgeirr/scenario.hpp"
#include "edgeirr/soil.hpp"

#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <unordered_map>
#include <variant>
#include <vector>

namespace edgeirr::netsim {

using Dispatcher = std::function<void(const ValveCommand&)>;

/// Callback surface the edge node exposes to the simulator.
class EdgeHooks
{
public:
    virtual ~EdgeHooks() = default;

    /// Gives the edge node the channel its commands leave through.
    virtual void connect(Dispatcher dispatch) = 0;
    virtual void on_sample(const MoistureSample& sample, SimTime now) = 0;
    virtual void on_valve_ack(const ValveAck& ack, SimTime now) = 0;
    virtual void on_timer(SimTime now) = 0;
    /// Earliest instant after now at which on_timer must run, if any.
    virtual std::optional<SimTime> next_wakeup(SimTime now) const = 0;
};

using Payload = std::variant<MoistureSample, ValveCommand, ValveAck>;

struct Message
{
    std::uint64_t id = 0;
    MessageClass cls = MessageClass::Sample;
    Payload payload;
    std::vector<NodeRef> route;
    GreenhouseId gh;
    StreamClass stream = StreamClass::Mote;
    std::uint16_t stream_id = 0;
};

struct SampleDue
{
    MoteId mote;
};

struct MsgArrival
{
    Message msg;
    std::size_t hop; // index into msg.route of the node reached
};

struct ValveApply
{
    ActuatorId actuator;
    ValveCommand cmd;
};

struct PhysicsTick
{
    GreenhouseId gh;
};

struct ControlTimer
{
};

using EventKind = std::variant<SampleDue, MsgArrival, ValveApply, PhysicsTick, ControlTimer>;

struct SimEvent
{
    SimTime fire_at;
    std::uint64_t seq;
    EventKind kind;
};

struct EventOrder
{
    bool operator()(const SimEvent& a, const SimEvent& b) const noexcept
    {
        if (a.fire_at != b.fire_at)
            return a.fire_at > b.fire_at;
        return a.seq > b.seq;
    }
};

/// One hop over a link. Draws the loss trial first and, if the message
/// survives, the latency: min + round(u * (max - min)) milliseconds.
template <UniformSource R>
std::optional<SimTime> deliver(const LinkModel& link, R& rng, SimTime now)
{
    if (rng.uniform01() < link.loss_probability)
        return std::nullopt;
    const double u = rng.uniform01();
    const auto span = static_cast<double>((link.latency_max - link.latency_min).count());
    return now + link.latency_min + SimTime{std::llround(u * span)};
}

/// Reading = true moisture + uniform noise in [-noise, +noise), clamped and
/// quantized to 0.01.
template <UniformSource R>
MoistureSample sample_mote(MoteId mote, GreenhouseId gh, double true_moisture, SimTime now, R& rng,
                           double noise = 0.5)
{
    const double n = (2.0 * rng.uniform01() - 1.0) * noise;
    return {mote, gh, quantize_moisture(clamp_moisture(true_moisture + n)), now};
}

class Simulator
{
public:
    Simulator(ScenarioConfig config, EdgeHooks& hooks)
        : config_(std::move(config)), hooks_(hooks), streams_(config_.seed)
    {
        if (auto report = validate_scenario(config_); !report.ok())
            throw ConfigError("invalid scenario:\n" + report.to_string());

        for (const auto& gw : config_.gateways)
        {
            for (auto m : gw.motes)
                mote_gateway_[m.value] = gw.id;
            for (auto a : gw.actuators)
                actuator_gateway_[a.value] = gw.id;
        }
        for (const auto& gh : config_.greenhouses)
        {
            GreenhousePhysics p;
            p.config = &gh;
            p.soil = {gh.initial_moisture, SimTime::zero()};
            physics_.emplace(gh.id.value, p);
            for (auto m : gh.motes)
                mote_gh_[m.value] = gh.id;
            actuator_gh_[gh.actuator.value] = gh.id;
        }

        log_.duration = config_.duration;
        log_.seed = config_.seed;

        hooks_.connect([this](const ValveCommand& cmd) { send_command(cmd); });

        for (const auto& gh : config_.greenhouses)
            schedule(SimTime::zero(), PhysicsTick{gh.id});
        schedule_timer(SimTime::zero());
        for (const auto& gh : config_.greenhouses)
            for (auto m : gh.motes)
                schedule(SimTime::zero(), SampleDue{m});
    }

    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    const ScenarioConfig& config() const noexcept { return config_; }
    SimTime now() const noexcept { return now_; }
    const RunLog& log() const noexcept { return log_; }
    bool finished() const noexcept { return finished_; }

    double true_moisture(GreenhouseId gh) const { return physics_.at(gh.value).soil.moisture; }
    bool valve_open(GreenhouseId gh) const { return physics_.at(gh.value).valve_open; }

    /// Routes a command from the edge node toward its actuator.
    void send_command(const ValveCommand& cmd)
    {
        const auto gh = actuator_gh_.find(cmd.target.value);
        if (gh == actuator_gh_.end())
            throw ConfigError(fmt::format("command for unknown actuator {}", cmd.target.value));

        Message msg;
        msg.id = next_msg_++;
        msg.cls = MessageClass::Command;
        msg.payload = cmd;
        msg.route = {NodeRef{NodeKind::Edge, 0},
                     NodeRef{NodeKind::Gateway, actuator_gateway_.at(cmd.target.value).value},
                     NodeRef{NodeKind::Actuator, cmd.target.value}};
        msg.gh = gh->second;
        msg.stream = StreamClass::ActuatorDown;
        msg.stream_id = cmd.target.value;

        log_.entries.push_back(CommandIssued{now_, msg.id, msg.gh, cmd,
                                             cause_.value_or(CommandCause::External)});
        emit(std::move(msg));
    }

    /// Processes every event due at or before t. Periodic activity stops at
    /// the scenario duration; messages already in flight are still delivered.
    void run_until(SimTime t)
    {
        while (!queue_.empty() && queue_.top().fire_at <= t)
        {
            SimEvent ev = queue_.top();
            queue_.pop();
            now_ = ev.fire_at;
            std::visit([this](auto& k) { handle(k); }, ev.kind);
        }
        if (t > now_)
            now_ = std::min(t, std::max(now_, config_.duration));
    }

    /// Runs to the end, drains in-flight messages, and returns the log.
    const RunLog& finish()
    {
        if (finished_)
            return log_;
        run_until(SimTime::max());
        for (auto& [id, p] : physics_)
        {
            advance(p, config_.duration);
            log_.finals.push_back(FinalState{p.config->id, p.soil.moisture, p.valve_open,
                                             p.open_time,
                                             p.config->flow_rate * to_hours(p.open_time)});
        }
        finished_ = true;
        return log_;
    }

private:
    struct GreenhousePhysics
    {
        const GreenhouseConfig* config = nullptr;
        soil::SoilState soil;
        bool valve_open = false;
        SimTime open_time{0};
    };

    void schedule(SimTime at, EventKind kind)
    {
        if (at < now_)
            throw ContractViolation("netsim: event scheduled in the past");
        queue_.push(SimEvent{at, seq_++, std::move(kind)});
    }

    void schedule_timer(SimTime at)
    {
        if (at > config_.duration || timers_.contains(at))
            return;
        timers_.insert(at);
        schedule(at, ControlTimer{});
    }

public:
    /// Re-reads the edge node's next wakeup; call after commands issued from
    /// outside event processing.
    void refresh_timer()
    {
        if (auto w = hooks_.next_wakeup(now_))
            schedule_timer(std::max(*w, now_));
    }

private:
    bool periodic_active() const noexcept { return now_ <= config_.duration; }

    void advance(GreenhousePhysics& p, SimTime to)
    {
        to = std::min(to, config_.duration);
        while (p.soil.last_update < to)
        {
            const SimTime from = p.soil.last_update;
            const SimTime next =
                std::min({to, from + config_.physics_tick, config_.ambient.next_switch(from)});
            if (p.valve_open)
                p.open_time += next - from;
            p.soil = soil::step(p.soil, p.valve_open, config_.ambient.at(from), p.config->plant,
                                p.config->infil_rate, next - from, config_.soil);
        }
    }

    LinkModel link_between(NodeRef a, NodeRef b) const noexcept
    {
        const bool radio = a.kind == NodeKind::Mote || a.kind == NodeKind::Actuator ||
                           b.kind == NodeKind::Mote || b.kind == NodeKind::Actuator;
        return radio ? config_.links.radio : config_.links.local;
    }

    void emit(Message msg)
    {
        ++log_.counters[static_cast<std::size_t>(msg.cls)].emitted;
        forward(std::move(msg), 0);
    }

    // Sends msg from route[hop] to route[hop + 1].
    void forward(Message msg, std::size_t hop)
    {
        Rng& rng = streams_.stream(msg.stream, msg.stream_id);
        const auto link = link_between(msg.route[hop], msg.route[hop + 1]);
        if (auto at = deliver(link, rng, now_))
        {
            schedule(*at, MsgArrival{std::move(msg), hop + 1});
            return;
        }
        ++log_.counters[static_cast<std::size_t>(msg.cls)].dropped;
        log_.entries.push_back(MessageDropped{now_, msg.id, msg.cls, hop, msg.route[hop], msg.gh});
    }

    void handle(SampleDue& e)
    {
        if (!periodic_active())
            return;
        const GreenhouseId gh = mote_gh_.at(e.mote.value);
        auto& p = physics_.at(gh.value);
        advance(p, now_);

        Rng& rng = streams_.stream(StreamClass::Mote, e.mote.value);
        const auto sample = sample_mote(e.mote, gh, p.soil.moisture, now_, rng, config_.sensor_noise);

        Message msg;
        msg.id = next_msg_++;
        msg.cls = MessageClass::Sample;
        msg.payload = sample;
        msg.route = {NodeRef{NodeKind::Mote, e.mote.value},
                     NodeRef{NodeKind::Gateway, mote_gateway_.at(e.mote.value).value},
                     NodeRef{NodeKind::Edge, 0}};
        msg.gh = gh;
        msg.stream = StreamClass::Mote;
        msg.stream_id = e.mote.value;
        log_.entries.push_back(SampleEmitted{now_, msg.id, gh, p.soil.moisture, sample});
        emit(std::move(msg));

        const SimTime next = now_ + config_.sampling_period;
        if (next <= config_.duration)
            schedule(next, SampleDue{e.mote});
    }

    void handle(MsgArrival& e)
    {
        auto& msg = e.msg;
        if (e.hop + 1 < msg.route.size())
        {
            log_.entries.push_back(
                MessageRelayed{now_, msg.id, msg.cls, GatewayId{msg.route[e.hop].id}});
            forward(std::move(msg), e.hop);
            return;
        }

        ++log_.counters[static_cast<std::size_t>(msg.cls)].delivered;
        if (auto* sample = std::get_if<MoistureSample>(&msg.payload))
        {
            log_.entries.push_back(SampleDelivered{now_, msg.id, *sample});
            with_cause(CommandCause::SampleArrival, [&] { hooks_.on_sample(*sample, now_); });
        }
        else if (auto* cmd = std::get_if<ValveCommand>(&msg.payload))
        {
            log_.entries.push_back(CommandDelivered{now_, msg.id, *cmd});
            schedule(now_, ValveApply{cmd->target, *cmd});
        }
        else
        {
            const auto& ack = std::get<ValveAck>(msg.payload);
            log_.entries.push_back(AckDelivered{now_, msg.id, ack});
            with_cause(CommandCause::AckArrival, [&] { hooks_.on_valve_ack(ack, now_); });
        }
    }

    void handle(ValveApply& e)
    {
        const GreenhouseId gh = actuator_gh_.at(e.actuator.value);
        auto& p = physics_.at(gh.value);
        advance(p, now_);
        const bool open = e.cmd.action == ValveAction::Open;
        const bool changed = open != p.valve_open;
        p.valve_open = open;
        log_.entries.push_back(ValveApplied{now_, e.actuator, gh, e.cmd.action, e.cmd.origin, changed});

        Message msg;
        msg.id = next_msg_++;
        msg.cls = MessageClass::Ack;
        msg.payload = ValveAck{e.actuator, e.cmd, now_};
        msg.route = {NodeRef{NodeKind::Actuator, e.actuator.value},
                     NodeRef{NodeKind::Gateway, actuator_gateway_.at(e.actuator.value).value},
                     NodeRef{NodeKind::Edge, 0}};
        msg.gh = gh;
        msg.stream = StreamClass::ActuatorUp;
        msg.stream_id = e.actuator.value;
        emit(std::move(msg));
    }

    void handle(PhysicsTick& e)
    {
        if (!periodic_active())
            return;
        auto& p = physics_.at(e.gh.value);
        advance(p, now_);
        log_.entries.push_back(SoilSnapshot{now_, e.gh, p.soil.moisture, p.valve_open});
        const SimTime next = now_ + config_.physics_tick;
        if (next <= config_.duration)
            schedule(next, PhysicsTick{e.gh});
    }

    void handle(ControlTimer&)
    {
        timers_.erase(now_);
        if (!periodic_active())
            return;
        with_cause(CommandCause::Timer, [&] { hooks_.on_timer(now_); });
    }

    template <class F>
    void with_cause(CommandCause cause, F&& f)
    {
        cause_ = cause;
        f();
        cause_.reset();
        if (periodic_active())
            refresh_timer();
    }

    ScenarioConfig config_;
    EdgeHooks& hooks_;
    SeedStreams streams_;
    RunLog log_;
    std::priority_queue<SimEvent, std::vector<SimEvent>, EventOrder> queue_;
    std::set<SimTime> timers_;
    std::uint64_t seq_ = 0;
    std::uint64_t next_msg_ = 1;
    SimTime now_{0};
    bool finished_ = false;
    std::optional<CommandCause> cause_;

    std::map<std::uint16_t, GreenhousePhysics> physics_;
    std::unordered_map<std::uint16_t, GatewayId> mote_gateway_;
    std::unordered_map<std::uint16_t, GatewayId> actuator_gateway_;
    std::unordered_map<std::uint16_t, GreenhouseId> mote_gh_;
    std::unordered_map<std::uint16_t, GreenhouseId> actuator_gh_;
};

/// Runs a scenario to completion against the given edge hooks.
inline RunLog run(const ScenarioConfig& config, EdgeHooks& hooks)
{
    Simulator sim(config, hooks);
    return sim.finish();
}

} // namespace edgeirr::netsim
