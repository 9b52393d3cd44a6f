#pragma once

// Experiment driver commands. Each returns a process exit status:
// 0 success, 1 runtime failure, 2 invalid scenario or arguments.
//
// Output files written by run (all CSV, fixed column order):
//   runlog.csv        t,kind,entity,payload... (see run_log.hpp)
//   series_gh<id>.csv t,true_moisture,aggregate,valve,command_events
//   summary.csv       greenhouse,mean,stddev,amplitude,time_in_band,
//                     valve_open_hours,water_liters,commands,drops
// compare additionally writes comparison.txt (key=value lines).

#include "edgeirr/edge_node.hpp"
#include "edgeirr/metrics.hpp"
#include "edgeirr/netsim.hpp"
#include "edgeirr/scenario_io.hpp"
#include "edgeirr/service.hpp"

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

namespace edgeirr::cli {

inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kInvalid = 2;

struct Options
{
    std::filesystem::path scenario;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out = "out";
    std::string listen = "127.0.0.1:8080";
    double time_scale = 60.0;
    double warm_up_seconds = 6 * 3600.0;
    std::optional<int> gateway_port;
};

inline constexpr std::string_view kSeriesHeader = "t,true_moisture,aggregate,valve,command_events";

/// Loads and validates a scenario; prints problems to err.
inline std::optional<ScenarioConfig> load_valid(const Options& o, std::ostream& err)
{
    ScenarioConfig cfg;
    try
    {
        cfg = load_scenario(o.scenario);
    }
    catch (const std::exception& e)
    {
        err << e.what() << '\n';
        return std::nullopt;
    }
    if (o.seed)
        cfg.seed = *o.seed;
    if (auto report = validate_scenario(cfg); !report.ok())
    {
        err << "invalid scenario " << o.scenario.string() << ":\n" << report.to_string();
        return std::nullopt;
    }
    return cfg;
}

/// Per-tick series for one greenhouse. The aggregate column replays what the
/// edge node had received by each tick; it is empty before the first reading.
inline std::string series_csv(const netsim::RunLog& log, const ScenarioConfig& cfg, GreenhouseId gh)
{
    std::string out{kSeriesHeader};
    out += '\n';
    control::ControllerState seen;
    seen.greenhouse = gh;
    std::size_t commands = 0;
    for (const auto& e : log.entries)
    {
        if (const auto* d = std::get_if<netsim::SampleDelivered>(&e); d && d->sample.greenhouse == gh)
        {
            auto& slot = seen.last_samples[d->sample.mote];
            if (slot.sampled_at <= d->sample.sampled_at)
                slot = d->sample;
        }
        else if (const auto* c = std::get_if<netsim::CommandIssued>(&e); c && c->gh == gh)
        {
            ++commands;
        }
        else if (const auto* s = std::get_if<netsim::SoilSnapshot>(&e); s && s->gh == gh)
        {
            std::string agg;
            if (auto a = control::aggregate(seen, s->t, cfg.staleness_limit))
                agg = fmt::format("{:.2f}", a->value);
            out += fmt::format("{},{:.4f},{},{},{}\n", netsim::format_time(s->t), s->moisture, agg,
                               netsim::valve_word(s->valve_open), commands);
            commands = 0;
        }
    }
    return out;
}

inline void write_file(const std::filesystem::path& p, std::string_view content)
{
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f)
        throw std::runtime_error("cannot write " + p.string());
    f << content;
}

inline metrics::SummaryOptions summary_options(const Options& o)
{
    metrics::SummaryOptions so;
    so.warm_up = from_seconds(o.warm_up_seconds);
    return so;
}

inline int cmd_validate(const Options& o, std::ostream& out, std::ostream& err)
{
    if (!load_valid(o, err))
        return kInvalid;
    out << "ok\n";
    return kOk;
}

struct RunResult
{
    netsim::RunLog log;
    metrics::RunSummary summary;
};

inline RunResult simulate(const ScenarioConfig& cfg, const metrics::SummaryOptions& so)
{
    edge::EdgeNode node(cfg);
    auto log = netsim::run(cfg, node);
    auto summary = metrics::summarize(log, cfg, so);
    return {std::move(log), std::move(summary)};
}

inline void write_run_outputs(const std::filesystem::path& dir, const ScenarioConfig& cfg,
                              const RunResult& r)
{
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "runlog.csv", std::ios::binary | std::ios::trunc);
        if (!f)
            throw std::runtime_error("cannot write " + (dir / "runlog.csv").string());
        netsim::write_run_log(f, r.log);
    }
    for (const auto& gh : cfg.greenhouses)
        write_file(dir / fmt::format("series_gh{}.csv", gh.id.value), series_csv(r.log, cfg, gh.id));
    write_file(dir / "summary.csv", metrics::to_csv(r.summary));
}

inline int cmd_run(const Options& o, std::ostream& out, std::ostream& err)
{
    auto cfg = load_valid(o, err);
    if (!cfg)
        return kInvalid;
    try
    {
        const auto r = simulate(*cfg, summary_options(o));
        write_run_outputs(o.out, *cfg, r);
        out << metrics::to_csv(r.summary);
        return kOk;
    }
    catch (const std::exception& e)
    {
        err << "run failed: " << e.what() << '\n';
        return kFailure;
    }
}

/// The first greenhouse is the baseline; the comparison partner is the first
/// later greenhouse with a different strategy.
inline int cmd_compare(const Options& o, std::ostream& out, std::ostream& err)
{
    auto cfg = load_valid(o, err);
    if (!cfg)
        return kInvalid;
    const auto& ghs = cfg->greenhouses;
    const GreenhouseConfig* partner = nullptr;
    for (std::size_t i = 1; i < ghs.size() && !partner; ++i)
        if (control::strategy_name(ghs[i].strategy) != control::strategy_name(ghs[0].strategy))
            partner = &ghs[i];
    if (!partner)
    {
        err << "compare needs at least two greenhouses with different strategies\n";
        return kInvalid;
    }
    try
    {
        const auto r = simulate(*cfg, summary_options(o));
        write_run_outputs(o.out, *cfg, r);
        const auto report =
            metrics::compare(r.summary.greenhouse(ghs[0].id), r.summary.greenhouse(partner->id));
        write_file(o.out / "comparison.txt", metrics::to_key_value(report));
        out << fmt::format("baseline gh{} ({}): {:.2f} valve-open hours\n", report.a.gh.value,
                           report.a.strategy, report.a.valve_open_hours);
        out << fmt::format("candidate gh{} ({}): {:.2f} valve-open hours\n", report.b.gh.value,
                           report.b.strategy, report.b.valve_open_hours);
        out << fmt::format("water saving: {:.1f}%\n", 100.0 * report.water_saving);
        return kOk;
    }
    catch (const std::exception& e)
    {
        err << "compare failed: " << e.what() << '\n';
        return kFailure;
    }
}

inline std::pair<std::string, int> split_listen(const std::string& listen)
{
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("listen address must be host:port");
    return {listen.substr(0, colon), std::stoi(listen.substr(colon + 1))};
}

namespace detail {
inline volatile std::sig_atomic_t stop_requested = 0;
inline void on_signal(int) { stop_requested = 1; }
} // namespace detail

inline int cmd_serve(const Options& o, std::ostream& out, std::ostream& err)
{
    auto cfg = load_valid(o, err);
    if (!cfg)
        return kInvalid;
    service::ServiceOptions so;
    try
    {
        std::tie(so.host, so.port) = split_listen(o.listen);
    }
    catch (const std::exception& e)
    {
        err << "bad --listen: " << e.what() << '\n';
        return kInvalid;
    }
    so.time_scale = o.time_scale;
    so.store_path = o.out / "edge" / "store.log";
    so.gateway_port = o.gateway_port;
    so.warm_up = SimTime::zero();
    try
    {
        service::EdgeService svc(*cfg, so);
        const int port = svc.start();
        out << fmt::format("edge node serving http://{}:{} (time scale {})\n", so.host, port,
                           so.time_scale)
            << std::flush;
        if (svc.gateway_port())
            out << fmt::format("gateway frames on {}:{}\n", so.host, *svc.gateway_port()) << std::flush;

        std::signal(SIGINT, detail::on_signal);
        std::signal(SIGTERM, detail::on_signal);
        while (!detail::stop_requested)
            std::this_thread::sleep_for(std::chrono::milliseconds{100});
        svc.stop();
        out << "store flushed, shutting down\n";
        return kOk;
    }
    catch (const std::exception& e)
    {
        err << "serve failed: " << e.what() << '\n';
        return kFailure;
    }
}

} // namespace edgeirr::cli
