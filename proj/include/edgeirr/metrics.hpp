#pragma once

// Evaluation quantities over a finished run: moisture stability, time in
// band, valve-open hours, water volume, and A/B comparison.
//
// Moisture statistics use the true soil state recorded at every physics tick
// inside the window [warm_up, duration]; pass sample_based to use the noisy
// readings that reached the edge node instead.

#include "edgeirr/run_log.hpp"
#include "edgeirr/scenario.hpp"
#include "edgeirr/store.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <string>
#include <utility>
#include <vector>

namespace edgeirr::metrics {

struct SummaryOptions
{
    SimTime warm_up = std::chrono::hours{6};
    double band_tolerance = 0.0; // widens the band on both sides for time_in_band
    bool sample_based = false;
};

struct GreenhouseSummary
{
    GreenhouseId gh;
    std::string name;
    std::string strategy;
    SimTime window_start{0};
    SimTime window_end{0};
    MoistureBand band;
    double mean = 0.0;
    double stddev = 0.0;
    double amplitude = 0.0;
    double time_in_band = 0.0;
    double valve_open_hours = 0.0;
    double water_liters = 0.0;
    std::uint64_t commands = 0;
    std::uint64_t drops = 0;
    std::size_t points = 0;
};

struct RunSummary
{
    SimTime window_start{0};
    SimTime window_end{0};
    std::vector<GreenhouseSummary> greenhouses;

    const GreenhouseSummary& greenhouse(GreenhouseId id) const
    {
        for (const auto& g : greenhouses)
            if (g.gh == id)
                return g;
        throw NotFound(fmt::format("no summary for greenhouse {}", id.value));
    }
};

using Interval = std::pair<SimTime, SimTime>;

struct Moments
{
    double mean = 0.0;
    double stddev = 0.0;
    double amplitude = 0.0;
    double in_band = 0.0;
    std::size_t n = 0;
};

/// Population statistics of a moisture trace.
inline Moments moments(const std::vector<double>& xs, const MoistureBand& band, double tolerance)
{
    Moments m;
    m.n = xs.size();
    if (xs.empty())
        return m;
    double sum = 0.0;
    std::size_t inside = 0;
    for (double x : xs)
    {
        sum += x;
        if (band.contains(x, tolerance))
            ++inside;
    }
    m.mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs)
        ss += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(ss / static_cast<double>(xs.size()));
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    m.amplitude = *hi - *lo;
    m.in_band = static_cast<double>(inside) / static_cast<double>(xs.size());
    return m;
}

/// Physical open intervals of a greenhouse valve, ending no later than `end`.
/// The valve starts closed at t = 0.
inline std::vector<Interval> valve_open_intervals(const netsim::RunLog& log, GreenhouseId gh,
                                                  SimTime end)
{
    std::vector<Interval> out;
    std::optional<SimTime> opened;
    for (const auto& e : log.entries)
    {
        const auto* v = std::get_if<netsim::ValveApplied>(&e);
        if (!v || v->gh != gh || !v->changed)
            continue;
        const SimTime t = std::min(v->t, end);
        if (v->action == ValveAction::Open)
            opened = t;
        else if (opened)
        {
            if (t > *opened)
                out.emplace_back(*opened, t);
            opened.reset();
        }
    }
    if (opened && end > *opened)
        out.emplace_back(*opened, end);
    return out;
}

/// Total open time inside [from, to]; intervals are truncated at the edges.
inline SimTime open_time_within(const std::vector<Interval>& intervals, SimTime from, SimTime to)
{
    SimTime total{0};
    for (const auto& [a, b] : intervals)
    {
        const SimTime lo = std::max(a, from);
        const SimTime hi = std::min(b, to);
        if (hi > lo)
            total += hi - lo;
    }
    return total;
}

inline MoistureBand band_for(const GreenhouseConfig& gh, const ScenarioConfig& config)
{
    if (const auto* h = std::get_if<control::Hysteresis>(&gh.strategy))
        return h->band;
    return config.target_band;
}

inline RunSummary summarize(const netsim::RunLog& log, const ScenarioConfig& config,
                            const SummaryOptions& opts = {})
{
    if (log.duration != config.duration)
        throw ConfigError("log/config mismatch: durations differ");
    if (log.finals.size() != config.greenhouses.size())
        throw ConfigError("log/config mismatch: greenhouse count differs");
    for (const auto& gh : config.greenhouses)
        (void)log.final_state(gh.id);
    if (opts.warm_up < SimTime::zero() || opts.warm_up >= config.duration)
        throw ContractViolation("warm_up must lie in [0, duration)");

    const SimTime w0 = opts.warm_up;
    const SimTime w1 = config.duration;
    auto in_window = [&](SimTime t) { return t >= w0 && t <= w1; };

    RunSummary summary{w0, w1, {}};
    for (const auto& gh : config.greenhouses)
    {
        GreenhouseSummary s;
        s.gh = gh.id;
        s.name = gh.name;
        s.strategy = std::string{control::strategy_name(gh.strategy)};
        s.window_start = w0;
        s.window_end = w1;
        s.band = band_for(gh, config);

        std::vector<double> trace;
        for (const auto& e : log.entries)
        {
            if (opts.sample_based)
            {
                if (const auto* d = std::get_if<netsim::SampleDelivered>(&e);
                    d && d->sample.greenhouse == gh.id && in_window(d->sample.sampled_at))
                    trace.push_back(d->sample.moisture);
            }
            else if (const auto* snap = std::get_if<netsim::SoilSnapshot>(&e);
                     snap && snap->gh == gh.id && in_window(snap->t))
            {
                trace.push_back(snap->moisture);
            }

            if (const auto* c = std::get_if<netsim::CommandIssued>(&e);
                c && c->gh == gh.id && in_window(c->t))
                ++s.commands;
            else if (const auto* d = std::get_if<netsim::MessageDropped>(&e);
                     d && d->gh == gh.id && in_window(d->t))
                ++s.drops;
        }
        const auto m = moments(trace, s.band, opts.band_tolerance);
        s.mean = m.mean;
        s.stddev = m.stddev;
        s.amplitude = m.amplitude;
        s.time_in_band = m.in_band;
        s.points = m.n;

        const auto intervals = valve_open_intervals(log, gh.id, w1);
        s.valve_open_hours = to_hours(open_time_within(intervals, w0, w1));
        s.water_liters = gh.flow_rate * s.valve_open_hours;
        summary.greenhouses.push_back(std::move(s));
    }
    return summary;
}

/// Summary over what the edge node itself has stored, up to `now`. Moisture
/// statistics come from ingested readings; valve time from acknowledged
/// commands.
inline RunSummary summarize_store(const store::TimeSeriesStore& st, const ScenarioConfig& config,
                                  SimTime now, const SummaryOptions& opts = {})
{
    const SimTime w0 = std::min(opts.warm_up, now);
    RunSummary summary{w0, now, {}};
    for (const auto& gh : config.greenhouses)
    {
        GreenhouseSummary s;
        s.gh = gh.id;
        s.name = gh.name;
        s.strategy = std::string{control::strategy_name(gh.strategy)};
        s.window_start = w0;
        s.window_end = now;
        s.band = band_for(gh, config);

        std::vector<double> trace;
        for (const auto& r : st.query(gh.id, w0, now, store::Metric::Moisture))
            trace.push_back(std::get<MoistureSample>(r.payload).moisture);
        const auto m = moments(trace, s.band, opts.band_tolerance);
        s.mean = m.mean;
        s.stddev = m.stddev;
        s.amplitude = m.amplitude;
        s.time_in_band = m.in_band;
        s.points = m.n;

        s.commands = st.query(gh.id, w0, now, store::Metric::Commands).size();

        std::vector<Interval> intervals;
        std::optional<SimTime> opened;
        for (const auto& r : st.query(gh.id, SimTime::zero(), now, store::Metric::Valve))
        {
            const auto& ack = std::get<ValveAck>(r.payload);
            if (ack.command.action == ValveAction::Open)
            {
                if (!opened)
                    opened = ack.applied_at;
            }
            else if (opened)
            {
                intervals.emplace_back(*opened, ack.applied_at);
                opened.reset();
            }
        }
        if (opened)
            intervals.emplace_back(*opened, now);
        s.valve_open_hours = to_hours(open_time_within(intervals, w0, now));
        s.water_liters = gh.flow_rate * s.valve_open_hours;
        summary.greenhouses.push_back(std::move(s));
    }
    return summary;
}

struct FieldComparison
{
    std::string field;
    double a = 0.0;
    double b = 0.0;
    double ratio = 1.0; // b / a; 1 when both are zero
    double delta = 0.0; // b - a
};

struct ComparisonReport
{
    GreenhouseSummary a;
    GreenhouseSummary b;
    std::vector<FieldComparison> fields;
    double water_saving = 0.0; // 1 - b.valve_open_hours / a.valve_open_hours

    const FieldComparison& field(std::string_view name) const
    {
        for (const auto& f : fields)
            if (f.field == name)
                return f;
        throw NotFound("no comparison field " + std::string{name});
    }
};

inline double safe_ratio(double num, double den) noexcept
{
    if (den == 0.0)
        return num == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    return num / den;
}

inline ComparisonReport compare(const GreenhouseSummary& a, const GreenhouseSummary& b)
{
    if (a.window_start != b.window_start || a.window_end != b.window_end)
        throw ContractViolation("compare: mismatched windows");
    ComparisonReport r{a, b, {}, 0.0};
    auto add = [&](std::string name, double x, double y) {
        r.fields.push_back({std::move(name), x, y, safe_ratio(y, x), y - x});
    };
    add("mean", a.mean, b.mean);
    add("stddev", a.stddev, b.stddev);
    add("amplitude", a.amplitude, b.amplitude);
    add("time_in_band", a.time_in_band, b.time_in_band);
    add("valve_open_hours", a.valve_open_hours, b.valve_open_hours);
    add("water_liters", a.water_liters, b.water_liters);
    add("commands", static_cast<double>(a.commands), static_cast<double>(b.commands));
    add("drops", static_cast<double>(a.drops), static_cast<double>(b.drops));
    r.water_saving = 1.0 - safe_ratio(b.valve_open_hours, a.valve_open_hours);
    return r;
}

// -- serialization -----------------------------------------------------------

inline constexpr std::string_view kCsvHeader =
    "greenhouse,mean,stddev,amplitude,time_in_band,valve_open_hours,water_liters,commands,drops";

inline std::string csv_row(const GreenhouseSummary& s)
{
    return fmt::format("{},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.3f},{},{}", s.gh.value, s.mean,
                       s.stddev, s.amplitude, s.time_in_band, s.valve_open_hours, s.water_liters,
                       s.commands, s.drops);
}

inline std::string to_csv(const RunSummary& summary)
{
    std::string out{kCsvHeader};
    out += '\n';
    for (const auto& g : summary.greenhouses)
        out += csv_row(g) + '\n';
    return out;
}

/// Flat key=value lines, keys prefixed with gh<id>.
inline std::string to_key_value(const RunSummary& summary)
{
    std::string out = fmt::format("window_start={}\nwindow_end={}\n",
                                  netsim::format_time(summary.window_start),
                                  netsim::format_time(summary.window_end));
    for (const auto& s : summary.greenhouses)
    {
        const auto p = fmt::format("gh{}.", s.gh.value);
        out += fmt::format("{}name={}\n{}strategy={}\n", p, s.name, p, s.strategy);
        out += fmt::format("{}mean={:.4f}\n{}stddev={:.4f}\n{}amplitude={:.4f}\n", p, s.mean, p,
                           s.stddev, p, s.amplitude);
        out += fmt::format("{}time_in_band={:.4f}\n{}valve_open_hours={:.4f}\n", p, s.time_in_band,
                           p, s.valve_open_hours);
        out += fmt::format("{}water_liters={:.3f}\n{}commands={}\n{}drops={}\n", p, s.water_liters,
                           p, s.commands, p, s.drops);
    }
    return out;
}

inline std::string to_key_value(const ComparisonReport& r)
{
    std::string out = fmt::format("a=gh{}\nb=gh{}\na.strategy={}\nb.strategy={}\n", r.a.gh.value,
                                  r.b.gh.value, r.a.strategy, r.b.strategy);
    for (const auto& f : r.fields)
        out += fmt::format("{0}.a={1:.4f}\n{0}.b={2:.4f}\n{0}.ratio={3:.4f}\n{0}.delta={4:.4f}\n",
                           f.field, f.a, f.b, f.ratio, f.delta);
    out += fmt::format("water_saving={:.4f}\n", r.water_saving);
    return out;
}

} // namespace edgeirr::metrics
