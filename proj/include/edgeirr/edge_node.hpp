#pragma once

// The edge node: main control unit of the deployment. It ingests readings,
// persists everything to its local store, runs one control loop per
// greenhouse, dispatches valve commands toward the gateways, and keeps all
// data inside the local network boundary.
//
// Every public method takes the current simulated time explicitly. All state
// mutations go through one mutex, which serializes each greenhouse's loop.

#include "edgeirr/controller.hpp"
#include "edgeirr/netsim.hpp"
#include "edgeirr/scenario.hpp"
#include "edgeirr/store.hpp"

#include <atomic>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace edgeirr::edge {

/// Counts records that would leave the local network. In EdgeOnly mode
/// nothing leaves, so the counter never moves.
class EdgeBoundaryGuard
{
public:
    explicit EdgeBoundaryGuard(EdgeMode mode) : mode_(mode) {}

    void offer(const store::Record&)
    {
        if (mode_ == EdgeMode::WithBackhaul)
        {
            ++egress_counter_;
            return;
        }
        ++withheld_;
    }

    EdgeMode mode() const noexcept { return mode_; }
    std::uint64_t egress_counter() const noexcept { return egress_counter_; }
    std::uint64_t withheld() const noexcept { return withheld_; }

    /// Egress recorded by any EdgeOnly guard in this process, ever.
    static std::uint64_t edge_only_egress_total() noexcept { return edge_only_total().load(); }

    ~EdgeBoundaryGuard()
    {
        if (mode_ == EdgeMode::EdgeOnly)
            edge_only_total() += egress_counter_;
    }

private:
    static std::atomic<std::uint64_t>& edge_only_total() noexcept
    {
        static std::atomic<std::uint64_t> total{0};
        return total;
    }

    EdgeMode mode_;
    std::uint64_t egress_counter_ = 0;
    std::uint64_t withheld_ = 0;
};

struct GreenhouseStatus
{
    GreenhouseId id;
    std::string name;
    std::string strategy;
    std::optional<double> aggregate; // empty until the first reading
    bool aggregate_stale = false;
    ValveBelief valve = ValveBelief::Unknown;
    std::optional<MoistureBand> band;
    ControlMode mode = ControlMode::Auto;
    std::optional<SimTime> last_sample_at;
    SimTime data_uptime{0}; // span covered by ingested readings
    std::size_t samples = 0;
    bool command_pending = false;
};

struct StatusSnapshot
{
    SimTime now{0};
    EdgeMode mode = EdgeMode::EdgeOnly;
    std::uint64_t egress_counter = 0;
    std::vector<GreenhouseStatus> greenhouses;
};

class EdgeNode final : public netsim::EdgeHooks
{
public:
    explicit EdgeNode(const ScenarioConfig& config, std::filesystem::path store_path = {})
        : config_(config), guard_(config.mode)
    {
        if (!store_path.empty())
            store_ = std::make_unique<store::TimeSeriesStore>(std::move(store_path));
        else
            store_ = std::make_unique<store::TimeSeriesStore>();

        for (const auto& gh : config_.greenhouses)
        {
            Loop loop;
            loop.config = &gh;
            loop.strategy = gh.strategy;
            loop.state.greenhouse = gh.id;
            loop.state.actuator = gh.actuator;
            if (auto* h = std::get_if<control::Hysteresis>(&gh.strategy))
                loop.band = h->band;
            else
                loop.band = config_.target_band;
            loops_.emplace(gh.id, std::move(loop));
            for (auto m : gh.motes)
                mote_gh_[m] = gh.id;
            actuator_gh_[gh.actuator] = gh.id;
        }
    }

    // -- simulator / gateway surface --------------------------------------

    void connect(netsim::Dispatcher dispatch) override
    {
        std::lock_guard lock(mu_);
        dispatch_ = std::move(dispatch);
    }

    void on_sample(const MoistureSample& sample, SimTime now) override { ingest(sample, now); }

    void on_valve_ack(const ValveAck& ack, SimTime now) override
    {
        std::lock_guard lock(mu_);
        auto it = actuator_gh_.find(ack.actuator);
        if (it == actuator_gh_.end())
            return;
        Loop& loop = loops_.at(it->second);
        persist(store::Record{ack.applied_at, loop.config->id, ack});
        if (loop.pending && *loop.pending == ack.command)
        {
            loop.state.believed_valve = belief_of(ack.command.action);
            loop.pending.reset();
            loop.ack_deadline.reset();
        }
        (void)now;
    }

    void on_timer(SimTime now) override
    {
        std::lock_guard lock(mu_);
        for (auto& [id, loop] : loops_)
        {
            if (loop.ack_deadline && now >= *loop.ack_deadline)
            {
                // The actuator never confirmed: stop trusting our belief.
                loop.state.believed_valve = ValveBelief::Unknown;
                loop.ack_deadline.reset();
                loop.pending.reset();
            }
            evaluate(loop, now);
        }
    }

    std::optional<SimTime> next_wakeup(SimTime now) const override
    {
        std::lock_guard lock(mu_);
        std::optional<SimTime> best;
        auto take = [&](SimTime t) {
            if (t > now && (!best || t < *best))
                best = t;
        };
        for (const auto& [id, loop] : loops_)
        {
            if (loop.ack_deadline)
                take(*loop.ack_deadline);
            if (const auto* s = control::schedule_of(loop.strategy))
                take(control::next_schedule_edge(*s, now));
        }
        return best;
    }

    // -- operations --------------------------------------------------------

    void ingest(const MoistureSample& sample, SimTime now)
    {
        std::lock_guard lock(mu_);
        auto it = mote_gh_.find(sample.mote);
        if (it == mote_gh_.end())
        {
            store_->append_quarantine(sample, sample.sampled_at);
            return;
        }
        Loop& loop = loops_.at(it->second);
        MoistureSample s = sample;
        s.greenhouse = loop.config->id;
        persist(store::Record{s.sampled_at, s.greenhouse, s});

        auto& slot = loop.state.last_samples[s.mote];
        if (slot.sampled_at <= s.sampled_at)
            slot = s;
        if (!loop.first_sample_at)
            loop.first_sample_at = s.sampled_at;
        loop.last_sample_at = std::max(loop.last_sample_at.value_or(s.sampled_at), s.sampled_at);
        ++loop.sample_count;

        if (std::holds_alternative<control::Hysteresis>(loop.strategy))
            evaluate(loop, now);
    }

    void set_band(GreenhouseId gh, const MoistureBand& band, SimTime now,
                  std::string attribution = "operator")
    {
        if (!band.valid())
            throw ContractViolation(band.low_lim >= band.upper_lim ? "band inverted"
                                                                   : "band outside [0, 100]");
        std::lock_guard lock(mu_);
        Loop& loop = find(gh);
        loop.band = band;
        if (auto* h = std::get_if<control::Hysteresis>(&loop.strategy))
            h->band = band;
        persist(store::Record{now, gh, store::BandChange{band, std::move(attribution)}});
    }

    void set_mode(GreenhouseId gh, ControlMode mode, SimTime now,
                  std::string attribution = "operator")
    {
        std::lock_guard lock(mu_);
        Loop& loop = find(gh);
        if (loop.state.mode == mode)
            return;
        loop.state.mode = mode;
        persist(store::Record{now, gh, store::ModeChange{mode, std::move(attribution)}});
        if (mode == ControlMode::Auto)
            evaluate(loop, now);
    }

    ValveCommand manual_valve(GreenhouseId gh, ValveAction action, SimTime now)
    {
        std::lock_guard lock(mu_);
        Loop& loop = find(gh);
        auto [state, cmd] = control::apply_manual_override(loop.state, action, now);
        loop.state = std::move(state);
        issue(loop, cmd, now);
        return cmd;
    }

    std::vector<store::Record> query_series(GreenhouseId gh, SimTime from, SimTime to,
                                            store::Metric metric) const
    {
        {
            std::lock_guard lock(mu_);
            if (!loops_.contains(gh))
                throw NotFound(fmt::format("unknown greenhouse {}", gh.value));
        }
        return store_->query(gh, from, to, metric);
    }

    StatusSnapshot live_status(SimTime now) const
    {
        std::lock_guard lock(mu_);
        StatusSnapshot snap;
        snap.now = now;
        snap.mode = guard_.mode();
        snap.egress_counter = guard_.egress_counter();
        for (const auto& [id, loop] : loops_)
        {
            GreenhouseStatus st;
            st.id = id;
            st.name = loop.config->name;
            st.strategy = std::string{control::strategy_name(loop.strategy)};
            if (auto agg = control::aggregate(loop.state, now, config_.staleness_limit))
            {
                st.aggregate = agg->value;
                st.aggregate_stale = agg->stale;
            }
            st.valve = loop.state.believed_valve;
            st.band = loop.band;
            st.mode = loop.state.mode;
            st.last_sample_at = loop.last_sample_at;
            if (loop.first_sample_at && loop.last_sample_at)
                st.data_uptime = *loop.last_sample_at - *loop.first_sample_at;
            st.samples = loop.sample_count;
            st.command_pending = loop.pending.has_value();
            snap.greenhouses.push_back(std::move(st));
        }
        return snap;
    }

    const EdgeBoundaryGuard& guard() const noexcept { return guard_; }
    store::TimeSeriesStore& store() noexcept { return *store_; }
    const store::TimeSeriesStore& store() const noexcept { return *store_; }
    const ScenarioConfig& config() const noexcept { return config_; }

    std::optional<GreenhouseId> greenhouse_of(MoteId m) const
    {
        std::lock_guard lock(mu_);
        auto it = mote_gh_.find(m);
        return it == mote_gh_.end() ? std::nullopt : std::optional{it->second};
    }

private:
    struct Loop
    {
        const GreenhouseConfig* config = nullptr;
        control::ControlStrategy strategy;
        control::ControllerState state;
        MoistureBand band;
        std::optional<ValveCommand> pending; // last command not yet acknowledged
        std::optional<SimTime> ack_deadline;
        std::optional<SimTime> first_sample_at;
        std::optional<SimTime> last_sample_at;
        std::size_t sample_count = 0;
    };

    Loop& find(GreenhouseId gh)
    {
        auto it = loops_.find(gh);
        if (it == loops_.end())
            throw NotFound(fmt::format("unknown greenhouse {}", gh.value));
        return it->second;
    }

    void persist(store::Record rec)
    {
        guard_.offer(rec);
        store_->append(std::move(rec));
    }

    void evaluate(Loop& loop, SimTime now)
    {
        if (loop.state.mode != ControlMode::Auto)
            return;
        std::optional<ValveCommand> cmd;
        if (auto* h = std::get_if<control::Hysteresis>(&loop.strategy))
        {
            if (auto agg = control::aggregate(loop.state, now, config_.staleness_limit))
                cmd = control::evaluate_hysteresis(loop.state, h->band, agg->value, now);
        }
        else
        {
            cmd = control::evaluate_timed(*control::schedule_of(loop.strategy), now,
                                          loop.state.believed_valve, loop.state.actuator);
        }
        if (cmd)
        {
            loop.state.believed_valve = belief_of(cmd->action);
            issue(loop, *cmd, now);
        }
    }

    void issue(Loop& loop, const ValveCommand& cmd, SimTime now)
    {
        persist(store::Record{cmd.issued_at, loop.config->id, cmd});
        loop.pending = cmd;
        loop.ack_deadline = now + config_.ack_timeout;
        if (dispatch_)
            dispatch_(cmd);
    }

    ScenarioConfig config_;
    EdgeBoundaryGuard guard_;
    std::unique_ptr<store::TimeSeriesStore> store_;
    std::map<GreenhouseId, Loop> loops_;
    std::map<MoteId, GreenhouseId> mote_gh_;
    std::map<ActuatorId, GreenhouseId> actuator_gh_;
    netsim::Dispatcher dispatch_;
    mutable std::mutex mu_;
};

} // namespace edgeirr::edge
