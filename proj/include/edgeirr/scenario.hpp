#pragma once

// Scenario configuration model: topology, plants, link parameters, control
// strategies. validate_scenario() reports violations as data.

#include "edgeirr/controller.hpp"
#include "edgeirr/domain.hpp"
#include "edgeirr/soil.hpp"

#include <cstdint>
#include <fmt/format.h>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace edgeirr {

struct LinkModel
{
    double loss_probability = 0.05;
    SimTime latency_min{50};
    SimTime latency_max{500};

    bool operator==(const LinkModel&) const = default;
};

/// radio: mote/actuator <-> gateway. local: gateway <-> edge node.
struct LinkConfig
{
    LinkModel radio{0.05, SimTime{50}, SimTime{500}};
    LinkModel local{0.0, SimTime{1}, SimTime{10}};

    bool operator==(const LinkConfig&) const = default;
};

struct GatewayConfig
{
    GatewayId id;
    std::vector<MoteId> motes;
    std::vector<ActuatorId> actuators;

    bool operator==(const GatewayConfig&) const = default;
};

struct GreenhouseConfig
{
    GreenhouseId id;
    std::string name;
    int lines = 1;
    std::vector<MoteId> motes;
    ActuatorId actuator;
    PlantProfile plant;
    double flow_rate = 600.0;      // liters per hour while the valve is open
    double infil_rate = 30.0;      // percent per hour while the valve is open
    double initial_moisture = 52.0;
    control::ControlStrategy strategy;

    bool operator==(const GreenhouseConfig&) const = default;
};

struct ScenarioConfig
{
    std::string name = "scenario";
    std::uint64_t seed = 1;
    SimTime duration = 3 * kDay;
    EdgeMode mode = EdgeMode::EdgeOnly;
    SimTime sampling_period = std::chrono::seconds{60};
    SimTime physics_tick = std::chrono::seconds{60};
    SimTime staleness_limit = std::chrono::seconds{300};
    SimTime ack_timeout = std::chrono::seconds{30};
    double sensor_noise = 0.5; // uniform noise half-width, percent
    MoistureBand target_band{50.0, 55.0};
    soil::AmbientCycle ambient;
    soil::SoilParams soil;
    LinkConfig links;
    std::vector<GatewayConfig> gateways;
    std::vector<GreenhouseConfig> greenhouses;

    const GreenhouseConfig& greenhouse(GreenhouseId id) const
    {
        for (const auto& g : greenhouses)
            if (g.id == id)
                return g;
        throw NotFound(fmt::format("unknown greenhouse {}", id.value));
    }

    bool operator==(const ScenarioConfig&) const = default;
};

struct ValidationReport
{
    std::vector<std::string> violations;

    bool ok() const noexcept { return violations.empty(); }

    std::string to_string() const
    {
        std::string out;
        for (const auto& v : violations)
            out += v + '\n';
        return out;
    }
};

/// Calibrated plant and soil parameters; data/calibration.json mirrors these.
namespace calibration {

inline PlantProfile strawberry() { return {"strawberry", 2.5, 1.25}; }
inline PlantProfile geranium() { return {"geranium", 0.300, 0.150}; }
inline PlantProfile lavender() { return {"lavender", 0.930, 0.465}; }
inline PlantProfile mint() { return {"mint", 4.452, 2.226}; }

inline constexpr double kInfilRate = 30.0;
inline constexpr double kFlowRate = 600.0;
inline constexpr double kEtaMin = 0.3;
inline constexpr double kKnee = 40.0;

} // namespace calibration

inline ValidationReport validate_scenario(const ScenarioConfig& config)
{
    ValidationReport report;
    auto fail = [&](std::string msg) { report.violations.push_back(std::move(msg)); };

    if (config.duration <= SimTime::zero())
        fail("duration must be positive");
    if (config.sampling_period <= SimTime::zero())
        fail("sampling_period must be positive");
    if (config.physics_tick <= SimTime::zero() || config.physics_tick > soil::kMaxStep)
        fail("physics_tick must be in (0, 3600] seconds");
    if (config.physics_tick > config.sampling_period)
        fail("physics_tick must not exceed sampling_period");
    if (config.staleness_limit <= SimTime::zero())
        fail("staleness_limit must be positive");
    if (config.ack_timeout <= SimTime::zero())
        fail("ack_timeout must be positive");
    if (config.sensor_noise < 0.0)
        fail("sensor_noise must be nonnegative");
    if (!config.target_band.valid())
        fail("target_band: band inverted or out of [0,100]");

    const auto& amb = config.ambient;
    for (double t : {amb.day_temperature, amb.night_temperature})
        if (t < -10.0 || t > 60.0)
            fail(fmt::format("ambient temperature {} outside [-10, 60]", t));
    if (!(SimTime::zero() <= amb.day_start && amb.day_start < amb.day_end && amb.day_end <= kDay))
        fail("ambient: day window must satisfy 0 <= day_start < day_end <= 86400");

    if (!(config.soil.eta_min > 0.0 && config.soil.eta_min <= 1.0))
        fail("soil: eta_min must be in (0, 1]");
    if (!(config.soil.m_knee > 0.0 && config.soil.m_knee <= 100.0))
        fail("soil: m_knee must be in (0, 100]");

    for (const auto& [name, link] : {std::pair{"radio", config.links.radio},
                                     std::pair{"local", config.links.local}})
    {
        if (!(link.loss_probability >= 0.0 && link.loss_probability <= 1.0))
            fail(fmt::format("links.{}: loss_probability must be in [0, 1]", name));
        if (link.latency_min < SimTime::zero() || link.latency_min > link.latency_max)
            fail(fmt::format("links.{}: need 0 <= latency_min <= latency_max", name));
    }

    // Gateway attachments: every device on exactly one gateway.
    std::map<MoteId, int> mote_attach;
    std::map<ActuatorId, int> act_attach;
    std::set<GatewayId> gateway_ids;
    for (const auto& gw : config.gateways)
    {
        if (!gateway_ids.insert(gw.id).second)
            fail(fmt::format("gateway {} declared twice", gw.id.value));
        for (auto m : gw.motes)
            ++mote_attach[m];
        for (auto a : gw.actuators)
            ++act_attach[a];
    }
    if (config.gateways.empty())
        fail("at least one gateway is required");

    if (config.greenhouses.empty())
        fail("at least one greenhouse is required");

    std::set<GreenhouseId> gh_ids;
    std::set<MoteId> all_motes;
    std::set<ActuatorId> all_acts;
    for (const auto& gh : config.greenhouses)
    {
        const auto where = fmt::format("greenhouse {}", gh.id.value);
        if (!gh_ids.insert(gh.id).second)
            fail(where + ": id declared twice");
        if (gh.lines < 1)
            fail(where + ": lines must be >= 1");
        if (gh.motes.empty())
            fail(where + ": motes must be nonempty");
        if (!(gh.flow_rate > 0.0))
            fail(where + ": flow_rate must be positive");
        if (!(gh.infil_rate >= 0.0))
            fail(where + ": infil_rate must be nonnegative");
        if (!(gh.initial_moisture >= 0.0 && gh.initial_moisture <= 100.0))
            fail(where + ": initial_moisture must be in [0, 100]");
        if (!gh.plant.valid())
            fail(where + ": plant uptake rates must be positive with day >= night");

        for (auto m : gh.motes)
        {
            if (!all_motes.insert(m).second)
                fail(fmt::format("mote {} used more than once", m.value));
            const int n = mote_attach.contains(m) ? mote_attach[m] : 0;
            if (n != 1)
                fail(fmt::format("mote {} attached to {} gateways (need exactly 1)", m.value, n));
        }
        if (!all_acts.insert(gh.actuator).second)
            fail(fmt::format("actuator {} used more than once", gh.actuator.value));
        const int n = act_attach.contains(gh.actuator) ? act_attach[gh.actuator] : 0;
        if (n != 1)
            fail(fmt::format("actuator {} attached to {} gateways (need exactly 1)",
                             gh.actuator.value, n));

        if (auto* h = std::get_if<control::Hysteresis>(&gh.strategy))
        {
            if (h->band.low_lim >= h->band.upper_lim)
                fail(where + ": band inverted");
            else if (!h->band.valid())
                fail(where + ": band outside [0, 100]");
        }
        else if (const auto* s = control::schedule_of(gh.strategy); s && !s->valid())
        {
            fail(where + ": schedule needs 0 < duration < period and phase >= 0");
        }
    }

    for (const auto& [m, n] : mote_attach)
        if (!all_motes.contains(m))
            fail(fmt::format("gateway references unknown mote {}", m.value));
    for (const auto& [a, n] : act_attach)
        if (!all_acts.contains(a))
            fail(fmt::format("gateway references unknown actuator {}", a.value));

    return report;
}

/// The full-scale pilot: two greenhouses of four lines, two motes and one
/// actuator each, a single gateway. A is farmer-irrigated, B runs hysteresis.
inline ScenarioConfig default_scenario()
{
    using namespace std::chrono_literals;
    ScenarioConfig cfg;
    cfg.name = "strawberry-pilot";
    cfg.seed = 1;
    cfg.duration = 3 * kDay;
    cfg.soil = {calibration::kEtaMin, calibration::kKnee};

    auto make = [](std::uint16_t id, std::string name, std::vector<MoteId> motes,
                   control::ControlStrategy strategy) {
        GreenhouseConfig gh;
        gh.id = GreenhouseId{id};
        gh.name = std::move(name);
        gh.lines = 4;
        gh.motes = std::move(motes);
        gh.actuator = ActuatorId{id};
        gh.plant = calibration::strawberry();
        gh.flow_rate = calibration::kFlowRate;
        gh.infil_rate = calibration::kInfilRate;
        gh.initial_moisture = 52.0;
        gh.strategy = std::move(strategy);
        return gh;
    };
    cfg.greenhouses.push_back(make(1, "A", {MoteId{1}, MoteId{2}},
                                   control::FarmerSchedule{control::farmer_schedule()}));
    cfg.greenhouses.push_back(make(2, "B", {MoteId{3}, MoteId{4}},
                                   control::Hysteresis{MoistureBand{50.0, 55.0}}));
    cfg.gateways.push_back(GatewayConfig{GatewayId{1},
                                         {MoteId{1}, MoteId{2}, MoteId{3}, MoteId{4}},
                                         {ActuatorId{1}, ActuatorId{2}}});
    return cfg;
}

} // namespace edgeirr
