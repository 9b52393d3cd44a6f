#pragma once

// Scenario file format: one JSON document, keys in a fixed order so that
// serialize(parse(serialize(c))) reproduces the same bytes.

#include "edgeirr/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

namespace edgeirr {

using ojson = nlohmann::ordered_json;

class ScenarioParseError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

// Whole seconds are written as integers, fractional ones as decimals.
inline ojson seconds_json(SimTime t)
{
    if (t.count() % 1000 == 0)
        return t.count() / 1000;
    return to_seconds(t);
}

inline SimTime seconds_from(const ojson& j)
{
    if (j.is_number_integer())
        return SimTime{j.get<std::int64_t>() * 1000};
    if (j.is_number())
        return from_seconds(j.get<double>());
    throw ScenarioParseError("expected a number of seconds");
}

inline ojson band_json(const MoistureBand& b)
{
    ojson j;
    j["low_lim"] = b.low_lim;
    j["upper_lim"] = b.upper_lim;
    return j;
}

inline MoistureBand band_from(const ojson& j)
{
    return {j.at("low_lim").get<double>(), j.at("upper_lim").get<double>()};
}

inline ojson link_json(const LinkModel& l)
{
    ojson j;
    j["loss_probability"] = l.loss_probability;
    j["latency_min"] = seconds_json(l.latency_min);
    j["latency_max"] = seconds_json(l.latency_max);
    return j;
}

inline LinkModel link_from(const ojson& j)
{
    return {j.at("loss_probability").get<double>(), seconds_from(j.at("latency_min")),
            seconds_from(j.at("latency_max"))};
}

template <class IdT>
ojson ids_json(const std::vector<IdT>& ids)
{
    ojson a = ojson::array();
    for (auto id : ids)
        a.push_back(id.value);
    return a;
}

template <class IdT>
std::vector<IdT> ids_from(const ojson& j)
{
    std::vector<IdT> out;
    for (const auto& v : j)
        out.push_back(IdT{v.get<std::uint16_t>()});
    return out;
}

inline ojson schedule_json(const char* kind, const control::TimedSchedule& s)
{
    ojson j;
    j["kind"] = kind;
    j["period"] = seconds_json(s.period);
    j["duration"] = seconds_json(s.duration);
    j["phase"] = seconds_json(s.phase);
    return j;
}

inline ojson strategy_json(const control::ControlStrategy& s)
{
    if (auto* h = std::get_if<control::Hysteresis>(&s))
    {
        ojson j;
        j["kind"] = "Hysteresis";
        j["band"] = band_json(h->band);
        return j;
    }
    if (auto* t = std::get_if<control::TimedProgram>(&s))
        return schedule_json("TimedProgram", t->schedule);
    return schedule_json("FarmerSchedule", std::get<control::FarmerSchedule>(s).schedule);
}

inline control::ControlStrategy strategy_from(const ojson& j)
{
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "Hysteresis")
        return control::Hysteresis{band_from(j.at("band"))};
    control::TimedSchedule s{seconds_from(j.at("period")), seconds_from(j.at("duration")),
                             seconds_from(j.at("phase"))};
    if (kind == "TimedProgram")
        return control::TimedProgram{s};
    if (kind == "FarmerSchedule")
        return control::FarmerSchedule{s};
    throw ScenarioParseError("unknown strategy kind: " + kind);
}

} // namespace detail

inline ojson to_json(const ScenarioConfig& c)
{
    using namespace detail;
    ojson j;
    j["name"] = c.name;
    j["seed"] = c.seed;
    j["duration"] = seconds_json(c.duration);
    j["mode"] = std::string{to_string(c.mode)};
    j["sampling_period"] = seconds_json(c.sampling_period);
    j["physics_tick"] = seconds_json(c.physics_tick);
    j["staleness_limit"] = seconds_json(c.staleness_limit);
    j["ack_timeout"] = seconds_json(c.ack_timeout);
    j["sensor_noise"] = c.sensor_noise;
    j["target_band"] = band_json(c.target_band);

    ojson amb;
    amb["day_temperature"] = c.ambient.day_temperature;
    amb["night_temperature"] = c.ambient.night_temperature;
    amb["day_start"] = seconds_json(c.ambient.day_start);
    amb["day_end"] = seconds_json(c.ambient.day_end);
    j["ambient"] = amb;

    ojson soil;
    soil["eta_min"] = c.soil.eta_min;
    soil["m_knee"] = c.soil.m_knee;
    j["soil"] = soil;

    ojson links;
    links["radio"] = link_json(c.links.radio);
    links["local"] = link_json(c.links.local);
    j["links"] = links;

    ojson gws = ojson::array();
    for (const auto& g : c.gateways)
    {
        ojson gj;
        gj["id"] = g.id.value;
        gj["motes"] = ids_json(g.motes);
        gj["actuators"] = ids_json(g.actuators);
        gws.push_back(gj);
    }
    j["gateways"] = gws;

    ojson ghs = ojson::array();
    for (const auto& g : c.greenhouses)
    {
        ojson gj;
        gj["id"] = g.id.value;
        gj["name"] = g.name;
        gj["lines"] = g.lines;
        gj["motes"] = ids_json(g.motes);
        gj["actuator"] = g.actuator.value;
        ojson plant;
        plant["name"] = g.plant.name;
        plant["uptake_rate_day"] = g.plant.uptake_rate_day;
        plant["uptake_rate_night"] = g.plant.uptake_rate_night;
        gj["plant"] = plant;
        gj["flow_rate"] = g.flow_rate;
        gj["infil_rate"] = g.infil_rate;
        gj["initial_moisture"] = g.initial_moisture;
        gj["strategy"] = strategy_json(g.strategy);
        ghs.push_back(gj);
    }
    j["greenhouses"] = ghs;
    return j;
}

/// Missing optional keys fall back to ScenarioConfig defaults.
inline ScenarioConfig scenario_from_json(const ojson& j)
{
    using namespace detail;
    ScenarioConfig c;
    try
    {
        c.name = j.value("name", c.name);
        c.seed = j.value("seed", c.seed);
        c.duration = seconds_from(j.at("duration"));
        if (j.contains("mode"))
            c.mode = parse_edge_mode(j.at("mode").get<std::string>());
        if (j.contains("sampling_period"))
            c.sampling_period = seconds_from(j.at("sampling_period"));
        if (j.contains("physics_tick"))
            c.physics_tick = seconds_from(j.at("physics_tick"));
        if (j.contains("staleness_limit"))
            c.staleness_limit = seconds_from(j.at("staleness_limit"));
        else
            c.staleness_limit = 5 * c.sampling_period;
        if (j.contains("ack_timeout"))
            c.ack_timeout = seconds_from(j.at("ack_timeout"));
        c.sensor_noise = j.value("sensor_noise", c.sensor_noise);
        if (j.contains("target_band"))
            c.target_band = band_from(j.at("target_band"));
        if (j.contains("ambient"))
        {
            const auto& a = j.at("ambient");
            c.ambient.day_temperature = a.value("day_temperature", c.ambient.day_temperature);
            c.ambient.night_temperature = a.value("night_temperature", c.ambient.night_temperature);
            if (a.contains("day_start"))
                c.ambient.day_start = seconds_from(a.at("day_start"));
            if (a.contains("day_end"))
                c.ambient.day_end = seconds_from(a.at("day_end"));
        }
        if (j.contains("soil"))
        {
            c.soil.eta_min = j.at("soil").value("eta_min", c.soil.eta_min);
            c.soil.m_knee = j.at("soil").value("m_knee", c.soil.m_knee);
        }
        if (j.contains("links"))
        {
            const auto& l = j.at("links");
            if (l.contains("radio"))
                c.links.radio = link_from(l.at("radio"));
            if (l.contains("local"))
                c.links.local = link_from(l.at("local"));
        }
        for (const auto& gj : j.at("gateways"))
        {
            c.gateways.push_back(GatewayConfig{GatewayId{gj.at("id").get<std::uint16_t>()},
                                               ids_from<MoteId>(gj.value("motes", ojson::array())),
                                               ids_from<ActuatorId>(gj.value("actuators", ojson::array()))});
        }
        for (const auto& gj : j.at("greenhouses"))
        {
            GreenhouseConfig g;
            g.id = GreenhouseId{gj.at("id").get<std::uint16_t>()};
            g.name = gj.value("name", std::to_string(g.id.value));
            g.lines = gj.value("lines", 1);
            g.motes = ids_from<MoteId>(gj.at("motes"));
            g.actuator = ActuatorId{gj.at("actuator").get<std::uint16_t>()};
            const auto& p = gj.at("plant");
            g.plant = {p.value("name", std::string{"plant"}), p.at("uptake_rate_day").get<double>(),
                       p.at("uptake_rate_night").get<double>()};
            g.flow_rate = gj.value("flow_rate", g.flow_rate);
            g.infil_rate = gj.value("infil_rate", g.infil_rate);
            g.initial_moisture = gj.value("initial_moisture", g.initial_moisture);
            g.strategy = strategy_from(gj.at("strategy"));
            c.greenhouses.push_back(std::move(g));
        }
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ScenarioParseError(std::string{"scenario: "} + e.what());
    }
    catch (const std::invalid_argument& e)
    {
        throw ScenarioParseError(std::string{"scenario: "} + e.what());
    }
    return c;
}

inline std::string serialize_scenario(const ScenarioConfig& c)
{
    return to_json(c).dump(2) + "\n";
}

inline ScenarioConfig parse_scenario(std::string_view text)
{
    ojson j;
    try
    {
        j = ojson::parse(text);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ScenarioParseError(std::string{"scenario: "} + e.what());
    }
    return scenario_from_json(j);
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ScenarioParseError("cannot read scenario file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

} // namespace edgeirr
