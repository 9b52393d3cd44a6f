#include "edgeirr/scenario_io.hpp"
#include "support.hpp"

#include <fstream>
#include <sstream>

using namespace edgeirr;

namespace {

bool has_violation(const ValidationReport& r, std::string_view text)
{
    for (const auto& v : r.violations)
        if (v.find(text) != std::string::npos)
            return true;
    return false;
}

std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST(Scenario, InvertedBandIsReported)
{
    auto cfg = default_scenario();
    cfg.greenhouses[1].strategy = control::Hysteresis{MoistureBand{55.0, 50.0}};
    const auto r = validate_scenario(cfg);
    EXPECT_TRUE(has_violation(r, "band inverted")) << r.to_string();
}

TEST(Scenario, ZeroDurationIsReported)
{
    auto cfg = default_scenario();
    cfg.duration = SimTime::zero();
    EXPECT_TRUE(has_violation(validate_scenario(cfg), "duration must be positive"));
}

TEST(Scenario, PilotTopologyIsValid)
{
    const auto cfg = default_scenario();
    EXPECT_TRUE(validate_scenario(cfg).ok()) << validate_scenario(cfg).to_string();
    ASSERT_EQ(cfg.greenhouses.size(), 2u);
    ASSERT_EQ(cfg.gateways.size(), 1u);
    for (const auto& gh : cfg.greenhouses)
    {
        EXPECT_EQ(gh.lines, 4);
        EXPECT_EQ(gh.motes.size(), 2u);
    }
    EXPECT_EQ(cfg.mode, EdgeMode::EdgeOnly);
}

TEST(Scenario, DefaultBandAndDuration)
{
    const auto cfg = default_scenario();
    EXPECT_EQ(cfg.duration, std::chrono::seconds{259200});
    const auto* h = std::get_if<control::Hysteresis>(&cfg.greenhouses[1].strategy);
    ASSERT_NE(h, nullptr);
    EXPECT_EQ(h->band, (MoistureBand{50.0, 55.0}));
    EXPECT_TRUE(std::holds_alternative<control::FarmerSchedule>(cfg.greenhouses[0].strategy));
}

TEST(Scenario, AttachmentViolations)
{
    auto cfg = default_scenario();
    cfg.gateways.push_back(GatewayConfig{GatewayId{2}, {MoteId{1}}, {}});
    EXPECT_TRUE(has_violation(validate_scenario(cfg), "mote 1 attached to 2 gateways"));

    cfg = default_scenario();
    cfg.gateways[0].motes.push_back(MoteId{99});
    EXPECT_TRUE(has_violation(validate_scenario(cfg), "unknown mote 99"));

    cfg = default_scenario();
    cfg.gateways[0].actuators.clear();
    EXPECT_TRUE(has_violation(validate_scenario(cfg), "actuator 1 attached to 0 gateways"));
}

TEST(Scenario, ReportsEveryViolation)
{
    auto cfg = default_scenario();
    cfg.duration = SimTime::zero();
    cfg.greenhouses[0].motes.clear();
    cfg.greenhouses[0].flow_rate = 0.0;
    cfg.links.radio.latency_min = SimTime{900};
    EXPECT_GE(validate_scenario(cfg).violations.size(), 4u);
}

TEST(Scenario, GoldenDefaultFile)
{
    EXPECT_EQ(read_file(support::source_path("scenarios/default.json")),
              serialize_scenario(default_scenario()));
}

TEST(Scenario, FixturesRoundTrip)
{
    for (const auto* name : {"default", "lossless", "lossy", "swapped", "programmer", "pots"})
    {
        const auto path = support::source_path(std::string{"scenarios/"} + name + ".json");
        const auto cfg = load_scenario(path);
        EXPECT_TRUE(validate_scenario(cfg).ok()) << name;
        const auto text = serialize_scenario(cfg);
        EXPECT_EQ(serialize_scenario(parse_scenario(text)), text) << name;
    }
}

TEST(Scenario, InvalidFixtureParsesButFailsValidation)
{
    const auto cfg = load_scenario(support::source_path("scenarios/invalid.json"));
    const auto r = validate_scenario(cfg);
    EXPECT_TRUE(has_violation(r, "duration must be positive"));
    EXPECT_TRUE(has_violation(r, "band inverted"));
}

TEST(Scenario, ParseErrors)
{
    EXPECT_THROW(parse_scenario("{not json"), ScenarioParseError);
    EXPECT_THROW(parse_scenario(R"({"greenhouses": [{"id": 1, "strategy": {"kind": "Rain"}}]})"),
                 ScenarioParseError);
    EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), ScenarioParseError);
}

TEST(Scenario, RandomConfigsRoundTripByteIdentical)
{
    std::mt19937_64 gen(20240611);
    auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); };
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };

    for (int i = 0; i < 300; ++i)
    {
        auto cfg = default_scenario();
        cfg.name = "random-" + std::to_string(i);
        cfg.seed = gen();
        cfg.duration = SimTime{pick(1, 10'000'000) * 7};
        cfg.sensor_noise = uni(0.0, 2.0);
        cfg.links.radio.loss_probability = uni(0.0, 1.0);
        cfg.links.radio.latency_min = SimTime{pick(0, 100)};
        cfg.links.radio.latency_max = cfg.links.radio.latency_min + SimTime{pick(0, 1000)};
        cfg.mode = pick(0, 1) ? EdgeMode::EdgeOnly : EdgeMode::WithBackhaul;
        for (auto& gh : cfg.greenhouses)
        {
            gh.initial_moisture = uni(0.0, 100.0);
            gh.flow_rate = uni(1.0, 2000.0);
            gh.plant.uptake_rate_night = uni(0.01, 3.0);
            gh.plant.uptake_rate_day = gh.plant.uptake_rate_night * uni(1.0, 3.0);
            const double lo = uni(0.0, 90.0);
            switch (pick(0, 2))
            {
            case 0: gh.strategy = control::Hysteresis{MoistureBand{lo, lo + uni(0.1, 10.0)}}; break;
            case 1: gh.strategy = control::TimedProgram{control::programmer_schedule(SimTime{pick(0, 1000) * 1000})}; break;
            default: gh.strategy = control::FarmerSchedule{control::farmer_schedule(SimTime{pick(0, 43199)} * 1000)}; break;
            }
        }
        const auto text = serialize_scenario(cfg);
        const auto back = parse_scenario(text);
        EXPECT_EQ(back, cfg) << text;
        EXPECT_EQ(serialize_scenario(back), text);
    }
}
