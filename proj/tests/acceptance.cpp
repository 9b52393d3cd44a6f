// Acceptance gate: one PASS/FAIL line per primary criterion, nonzero exit if
// any fails. Runs without a test framework so the output is the report.

#include "edgeirr/cli.hpp"
#include "edgeirr/edge_node.hpp"
#include "edgeirr/metrics.hpp"
#include "edgeirr/netsim.hpp"
#include "edgeirr/scenario_io.hpp"
#include "edgeirr/soil.hpp"

#include <chrono>
#include <fmt/format.h>
#include <random>
#include <sstream>

using namespace edgeirr;
using namespace std::chrono_literals;

namespace {

struct Verdict
{
    bool pass = true;
    std::string detail;
};

std::filesystem::path source_path(const std::string& rel)
{
    return std::filesystem::path{EDGEIRR_SOURCE_DIR} / rel;
}

// Every run made by this binary, kept for the accounting and isolation checks.
struct Observed
{
    std::string label;
    ScenarioConfig cfg;
    netsim::RunLog log;
    std::uint64_t egress = 0;
    std::uint64_t withheld = 0;
};
std::vector<Observed> g_runs;

const netsim::RunLog& observe(std::string label, const ScenarioConfig& cfg)
{
    edge::EdgeNode node(cfg);
    auto log = netsim::run(cfg, node);
    g_runs.push_back({std::move(label), cfg, std::move(log), node.guard().egress_counter(),
                      node.guard().withheld()});
    return g_runs.back().log;
}

std::string artifacts(const ScenarioConfig& cfg, const netsim::RunLog& log)
{
    std::ostringstream out;
    netsim::write_run_log(out, log);
    for (const auto& gh : cfg.greenhouses)
        out << cli::series_csv(log, cfg, gh.id);
    out << metrics::to_csv(metrics::summarize(log, cfg));
    return out.str();
}

// -- criteria ----------------------------------------------------------------

Verdict water_and_stability(Verdict& stability)
{
    const auto cfg = default_scenario();
    const auto t0 = std::chrono::steady_clock::now();
    const auto& log = observe("default", cfg);
    const auto summary = metrics::summarize(log, cfg, {6h, 2.0, false});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const auto& farmer = summary.greenhouse(GreenhouseId{1});
    const auto& sin = summary.greenhouse(GreenhouseId{2});
    const double share = metrics::safe_ratio(sin.valve_open_hours, farmer.valve_open_hours);

    const double amp_ratio = metrics::safe_ratio(sin.amplitude, farmer.amplitude);
    stability.pass = sin.time_in_band >= 0.90 && amp_ratio <= 1.0 / 3.0;
    stability.detail = fmt::format("time_in_band {:.4f} (need >= 0.90), amplitude {:.2f} vs {:.2f} "
                                   "(ratio {:.3f}, need <= 0.333)",
                                   sin.time_in_band, sin.amplitude, farmer.amplitude, amp_ratio);

    return {share <= 0.5 && secs < 10.0,
            fmt::format("SIN {:.2f} h vs farmer {:.2f} h (share {:.3f}, need <= 0.5), runtime {:.2f} s",
                        sin.valve_open_hours, farmer.valve_open_hours, share, secs)};
}

Verdict determinism()
{
    Verdict v;
    int checked = 0;
    for (const char* name : {"lossless.json", "default.json", "lossy.json"})
    {
        const auto cfg = load_scenario(source_path("scenarios/" + std::string{name}));
        const auto a = artifacts(cfg, observe(name, cfg));
        const auto b = artifacts(cfg, observe(name, cfg));
        if (a != b)
        {
            v.pass = false;
            v.detail += fmt::format("{} differs; ", name);
        }
        ++checked;
        v.detail += fmt::format("{} (loss {:.2f}) {} bytes identical; ", name,
                                cfg.links.radio.loss_probability, a.size());
    }
    v.pass = v.pass && checked >= 3;
    v.detail.resize(v.detail.size() - 2);
    return v;
}

Verdict hysteresis_properties()
{
    std::mt19937_64 gen(20240601);
    auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); };
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };
    auto band = [&] {
        const double lo = uni(0.01, 95.0);
        return MoistureBand{lo, uni(lo + 0.01, 100.0)};
    };
    auto fresh = [](ValveBelief b) {
        control::ControllerState s;
        s.greenhouse = GreenhouseId{1};
        s.actuator = ActuatorId{1};
        s.believed_valve = b;
        return s;
    };
    auto drive = [](control::ControllerState& s, const MoistureBand& b, const std::vector<double>& xs) {
        std::vector<ValveCommand> out;
        SimTime t{0};
        for (double x : xs)
        {
            if (auto c = control::evaluate_hysteresis(s, b, x, t))
            {
                s.believed_valve = belief_of(c->action);
                out.push_back(*c);
            }
            t += 60s;
        }
        return out;
    };

    int cases = 0, failures = 0;
    for (int i = 0; i < 1000; ++i, ++cases)
    {
        // Edge triggering: in band, one dip below, back in band.
        const auto b = band();
        std::vector<double> xs;
        for (int k = pick(1, 20); k > 0; --k)
            xs.push_back(uni(b.low_lim, b.upper_lim));
        for (int k = pick(1, 20); k > 0; --k)
            xs.push_back(uni(std::max(0.0, b.low_lim - 20.0), std::nextafter(b.low_lim, -1.0)));
        for (int k = pick(0, 20); k > 0; --k)
            xs.push_back(uni(b.low_lim, b.upper_lim));
        auto s = fresh(ValveBelief::Closed);
        const auto cmds = drive(s, b, xs);
        failures += !(cmds.size() == 1 && cmds[0].action == ValveAction::Open);
    }
    for (int i = 0; i < 1000; ++i, ++cases)
    {
        // Alternation over a random walk.
        const auto b = band();
        std::vector<double> xs;
        double x = uni(0.0, 100.0);
        for (int k = pick(10, 200); k > 0; --k)
            xs.push_back(x = std::clamp(x + uni(-8.0, 8.0), 0.0, 100.0));
        auto s = fresh(ValveBelief::Closed);
        const auto cmds = drive(s, b, xs);
        for (std::size_t k = 1; k < cmds.size(); ++k)
            failures += cmds[k].action == cmds[k - 1].action;
    }
    for (int i = 0; i < 1000; ++i, ++cases)
    {
        // Idempotence: the same reading twice never produces a second command.
        const auto b = band();
        auto s = fresh(static_cast<ValveBelief>(pick(0, 2)));
        const double x = uni(0.0, 100.0);
        if (auto c = control::evaluate_hysteresis(s, b, x, 0s))
            s.believed_valve = belief_of(c->action);
        failures += control::evaluate_hysteresis(s, b, x, 60s).has_value();
    }
    for (int i = 0; i < 1000; ++i, ++cases)
    {
        // Boundaries belong to the band.
        const auto b = band();
        for (auto belief : {ValveBelief::Open, ValveBelief::Closed})
        {
            auto s = fresh(belief);
            failures += control::evaluate_hysteresis(s, b, b.low_lim, 0s).has_value();
            failures += control::evaluate_hysteresis(s, b, b.upper_lim, 0s).has_value();
        }
    }
    return {failures == 0, fmt::format("{} generated cases, {} failures", cases, failures)};
}

Verdict soil_numerics()
{
    std::mt19937_64 gen(77);
    auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); };
    auto ms = [&](std::int64_t lo, std::int64_t hi) {
        return SimTime{std::uniform_int_distribution<std::int64_t>(lo, hi)(gen)};
    };
    const soil::SoilParams params{calibration::kEtaMin, calibration::kKnee};
    const AmbientConditions day{36.0, true}, night{30.0, false};

    int cases = 0, bounded_fail = 0, forcing_fail = 0;
    double worst_split = 0.0;
    for (int i = 0; i < 1000; ++i, ++cases)
    {
        const double n = uni(0.01, 5.0);
        const PlantProfile plant{"p", n * uni(1.0, 3.0), n};
        const auto& amb = uni(0, 1) < 0.5 ? day : night;
        const soil::SoilState s{uni(0.0, 100.0), SimTime{0}};
        const bool open = uni(0, 1) < 0.5;

        const SimTime dt = 2 * ms(500, 150'000); // up to 300 s
        const auto whole = soil::step(s, open, amb, plant, calibration::kInfilRate, dt, params);
        const auto half = soil::step(s, open, amb, plant, calibration::kInfilRate, dt / 2, params);
        const auto twice = soil::step(half, open, amb, plant, calibration::kInfilRate, dt / 2, params);
        worst_split = std::max(worst_split, std::abs(whole.moisture - twice.moisture));

        const SimTime big = ms(1, 3'600'000);
        const double infil = uni(0.0, 200.0);
        const auto wet = soil::step(s, true, amb, plant, infil, big, params);
        const auto dry = soil::step(s, false, amb, plant, infil, big, params);
        for (double m : {wet.moisture, dry.moisture})
            bounded_fail += !(m >= 0.0 && m <= 100.0);
        forcing_fail += wet.moisture < dry.moisture;
    }
    return {worst_split <= 0.05 && bounded_fail == 0 && forcing_fail == 0,
            fmt::format("{} random states: worst split diff {:.5f} (need <= 0.05), "
                        "{} out of bounds, {} forcing inversions",
                        cases, worst_split, bounded_fail, forcing_fail)};
}

Verdict timed_baseline()
{
    const auto cfg = load_scenario(source_path("scenarios/programmer.json"));
    const auto& log = observe("programmer", cfg);
    const auto iv = metrics::valve_open_intervals(log, GreenhouseId{1}, cfg.duration);
    bool ok = iv.size() == 2;
    std::string lens;
    for (const auto& [a, b] : iv)
    {
        ok = ok && b - a == SimTime{1800s};
        lens += fmt::format(" [{}, {}]", netsim::format_time(a), netsim::format_time(b));
    }
    return {ok && cfg.duration == 4 * kDay,
            fmt::format("{} intervals over {} days:{}", iv.size(), cfg.duration / kDay, lens)};
}

// Runs the remaining fixtures and checks every run made so far.
Verdict water_accounting()
{
    for (const char* name : {"swapped.json", "pots.json"})
        observe(name, load_scenario(source_path("scenarios/" + std::string{name})));

    Verdict v;
    for (const auto& r : g_runs)
    {
        for (const auto& f : r.log.finals)
        {
            const double expect = r.cfg.greenhouse(f.gh).flow_rate * to_hours(f.valve_open_time);
            if (f.water_liters != expect)
            {
                v.pass = false;
                v.detail += fmt::format("{} gh{} water {} != {}; ", r.label, f.gh.value, f.water_liters, expect);
            }
        }
        const auto s = metrics::summarize(r.log, r.cfg, {SimTime::zero(), 0.0, false});
        for (const auto& g : s.greenhouses)
            if (g.water_liters != r.cfg.greenhouse(g.gh).flow_rate * g.valve_open_hours)
                v.pass = false;
        for (auto c : {netsim::MessageClass::Sample, netsim::MessageClass::Command, netsim::MessageClass::Ack})
        {
            const auto& k = r.log.counter(c);
            if (k.emitted != k.delivered + k.dropped)
            {
                v.pass = false;
                v.detail += fmt::format("{} class {} not conserved; ", r.label, static_cast<int>(c));
            }
        }
    }
    v.detail += fmt::format("{} runs checked, exact equality", g_runs.size());
    return v;
}

Verdict edge_isolation()
{
    Verdict v;
    std::uint64_t withheld = 0;
    for (const auto& r : g_runs)
    {
        if (r.cfg.mode != EdgeMode::EdgeOnly)
            continue;
        withheld += r.withheld;
        if (r.egress != 0)
        {
            v.pass = false;
            v.detail += fmt::format("{} egress {}; ", r.label, r.egress);
        }
    }
    const auto total = edge::EdgeBoundaryGuard::edge_only_egress_total();
    v.pass = v.pass && total == 0 && withheld > 0;
    v.detail += fmt::format("egress_counter total {} across {} runs, {} records withheld at the boundary",
                            total, g_runs.size(), withheld);
    return v;
}

} // namespace

int main()
{
    struct Line
    {
        std::string name;
        Verdict v;
    };
    std::vector<Line> lines;
    auto run = [&](std::string name, auto&& f) {
        try
        {
            lines.push_back({std::move(name), f()});
        }
        catch (const std::exception& e)
        {
            lines.push_back({std::move(name), {false, fmt::format("threw: {}", e.what())}});
        }
    };

    Verdict stability{false, "not evaluated"};
    run("water-saving", [&] { return water_and_stability(stability); });
    run("stability", [&] { return stability; });
    run("determinism", determinism);
    run("hysteresis-properties", hysteresis_properties);
    run("soil-numerics", soil_numerics);
    run("timed-baseline", timed_baseline);
    run("water-accounting", water_accounting);
    run("edge-isolation", edge_isolation);

    bool all = true;
    for (const auto& l : lines)
    {
        fmt::print("{} {}: {}\n", l.v.pass ? "PASS" : "FAIL", l.name, l.v.detail);
        all = all && l.v.pass;
    }
    return all ? 0 : 1;
}
