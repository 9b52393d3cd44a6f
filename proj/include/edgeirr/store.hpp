#pragma once

// Append-only local time-series store for the edge node.
//
// Records are kept in memory, indexed per greenhouse in timestamp order, and
// optionally mirrored to a line-oriented log file on the local filesystem.
// Reopening a store replays that file. One writer, many readers.

#include "edgeirr/domain.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

namespace edgeirr::store {

enum class Metric
{
    Moisture, // ingested samples
    Valve,    // actuator-reported valve states
    Commands, // issued valve commands
    Audit     // band and mode changes
};

inline Metric parse_metric(std::string_view s)
{
    if (s == "moisture")
        return Metric::Moisture;
    if (s == "valve")
        return Metric::Valve;
    if (s == "commands")
        return Metric::Commands;
    if (s == "audit")
        return Metric::Audit;
    throw std::invalid_argument("unknown metric: " + std::string{s});
}

struct BandChange
{
    MoistureBand band;
    std::string attribution;
    bool operator==(const BandChange&) const = default;
};

struct ModeChange
{
    ControlMode mode = ControlMode::Auto;
    std::string attribution;
    bool operator==(const ModeChange&) const = default;
};

using RecordPayload = std::variant<MoistureSample, ValveCommand, ValveAck, BandChange, ModeChange>;

struct Record
{
    SimTime t{0};
    GreenhouseId greenhouse;
    RecordPayload payload;

    bool operator==(const Record&) const = default;
};

inline Metric metric_of(const Record& r) noexcept
{
    switch (r.payload.index())
    {
    case 0: return Metric::Moisture;
    case 1: return Metric::Commands;
    case 2: return Metric::Valve;
    default: return Metric::Audit;
    }
}

namespace detail {

inline std::string encode(const Record& r, bool quarantine)
{
    const auto head = fmt::format("{},{}", r.t.count(), r.greenhouse.value);
    return std::visit(
        [&](const auto& p) -> std::string {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, MoistureSample>)
                return fmt::format("{},{},{},{},{}", quarantine ? "Q" : "S", head, p.mote.value,
                                   p.moisture, p.sampled_at.count());
            else if constexpr (std::is_same_v<T, ValveCommand>)
                return fmt::format("C,{},{},{},{},{}", head, p.target.value,
                                   static_cast<int>(p.action), p.issued_at.count(),
                                   static_cast<int>(p.origin));
            else if constexpr (std::is_same_v<T, ValveAck>)
                return fmt::format("V,{},{},{},{},{},{}", head, p.actuator.value,
                                   static_cast<int>(p.command.action), p.command.issued_at.count(),
                                   static_cast<int>(p.command.origin), p.applied_at.count());
            else if constexpr (std::is_same_v<T, BandChange>)
                return fmt::format("B,{},{},{},{}", head, p.band.low_lim, p.band.upper_lim,
                                   p.attribution);
            else
                return fmt::format("M,{},{},{}", head, static_cast<int>(p.mode), p.attribution);
        },
        r.payload);
}

inline std::vector<std::string_view> split(std::string_view line, std::size_t max_fields)
{
    std::vector<std::string_view> out;
    while (out.size() + 1 < max_fields)
    {
        auto pos = line.find(',');
        if (pos == std::string_view::npos)
            break;
        out.push_back(line.substr(0, pos));
        line.remove_prefix(pos + 1);
    }
    out.push_back(line);
    return out;
}

template <class T>
T num(std::string_view s)
{
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw std::runtime_error("store: malformed number '" + std::string{s} + "'");
    return v;
}

inline double dbl(std::string_view s)
{
    return std::stod(std::string{s});
}

/// Returns the decoded record and whether it belongs to the quarantine stream.
inline std::pair<Record, bool> decode(std::string_view line)
{
    if (line.size() < 2)
        throw std::runtime_error("store: empty record");
    const char kind = line[0];
    const auto f = split(line.substr(2), kind == 'B' ? 5 : (kind == 'M' ? 4 : 16));
    if (f.size() < 3)
        throw std::runtime_error("store: short record");
    Record r;
    r.t = SimTime{num<std::int64_t>(f[0])};
    r.greenhouse = GreenhouseId{num<std::uint16_t>(f[1])};
    switch (kind)
    {
    case 'S':
    case 'Q':
        r.payload = MoistureSample{MoteId{num<std::uint16_t>(f.at(2))}, r.greenhouse, dbl(f.at(3)),
                                   SimTime{num<std::int64_t>(f.at(4))}};
        return {r, kind == 'Q'};
    case 'C':
        r.payload = ValveCommand{ActuatorId{num<std::uint16_t>(f.at(2))},
                                 static_cast<ValveAction>(num<int>(f.at(3))),
                                 SimTime{num<std::int64_t>(f.at(4))},
                                 static_cast<CommandOrigin>(num<int>(f.at(5)))};
        return {r, false};
    case 'V': {
        const ActuatorId a{num<std::uint16_t>(f.at(2))};
        r.payload = ValveAck{a,
                             ValveCommand{a, static_cast<ValveAction>(num<int>(f.at(3))),
                                          SimTime{num<std::int64_t>(f.at(4))},
                                          static_cast<CommandOrigin>(num<int>(f.at(5)))},
                             SimTime{num<std::int64_t>(f.at(6))}};
        return {r, false};
    }
    case 'B':
        r.payload = BandChange{{dbl(f.at(2)), dbl(f.at(3))}, std::string{f.at(4)}};
        return {r, false};
    case 'M':
        r.payload = ModeChange{static_cast<ControlMode>(num<int>(f.at(2))), std::string{f.at(3)}};
        return {r, false};
    default:
        throw std::runtime_error(fmt::format("store: unknown record kind '{}'", kind));
    }
}

} // namespace detail

class TimeSeriesStore
{
public:
    /// Memory-only store.
    TimeSeriesStore() = default;

    /// File-backed store; replays whatever the file already holds.
    explicit TimeSeriesStore(std::filesystem::path path, std::size_t flush_every = 64)
        : path_(std::move(path)), flush_every_(flush_every)
    {
        if (path_.has_parent_path())
            std::filesystem::create_directories(path_.parent_path());
        if (std::ifstream in{path_})
        {
            std::string line;
            while (std::getline(in, line))
            {
                if (line.empty())
                    continue;
                auto [rec, quarantined] = detail::decode(line);
                insert(std::move(rec), quarantined);
            }
        }
        out_.open(path_, std::ios::app);
        if (!out_)
            throw std::runtime_error("store: cannot open " + path_.string());
    }

    TimeSeriesStore(const TimeSeriesStore&) = delete;
    TimeSeriesStore& operator=(const TimeSeriesStore&) = delete;

    ~TimeSeriesStore()
    {
        if (out_.is_open())
            out_.flush();
    }

    void append(Record rec) { write(std::move(rec), false); }

    /// Readings from motes the deployment does not know.
    void append_quarantine(const MoistureSample& sample, SimTime t)
    {
        write(Record{t, sample.greenhouse, sample}, true);
    }

    void flush()
    {
        std::unique_lock lock(mu_);
        if (out_.is_open())
            out_.flush();
        pending_ = 0;
    }

    /// Records of one metric for one greenhouse with from <= t <= to, ordered by t.
    std::vector<Record> query(GreenhouseId gh, SimTime from, SimTime to, Metric metric) const
    {
        if (from > to)
            throw ContractViolation("query: inverted time range");
        std::shared_lock lock(mu_);
        std::vector<Record> out;
        auto it = series_.find(gh);
        if (it == series_.end())
            return out;
        const auto& v = it->second;
        auto lo = std::lower_bound(v.begin(), v.end(), from,
                                   [](const Record& r, SimTime t) { return r.t < t; });
        for (; lo != v.end() && lo->t <= to; ++lo)
            if (metric_of(*lo) == metric)
                out.push_back(*lo);
        return out;
    }

    std::vector<Record> quarantine() const
    {
        std::shared_lock lock(mu_);
        return quarantine_;
    }

    std::size_t size() const
    {
        std::shared_lock lock(mu_);
        std::size_t n = quarantine_.size();
        for (const auto& [gh, v] : series_)
            n += v.size();
        return n;
    }

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    void write(Record rec, bool quarantined)
    {
        std::unique_lock lock(mu_);
        if (out_.is_open())
        {
            out_ << detail::encode(rec, quarantined) << '\n';
            if (++pending_ >= flush_every_)
            {
                out_.flush();
                pending_ = 0;
            }
        }
        insert(std::move(rec), quarantined);
    }

    // Stable: equal timestamps keep arrival order.
    void insert(Record rec, bool quarantined)
    {
        if (quarantined)
        {
            quarantine_.push_back(std::move(rec));
            return;
        }
        auto& v = series_[rec.greenhouse];
        auto pos = std::upper_bound(v.begin(), v.end(), rec.t,
                                    [](SimTime t, const Record& r) { return t < r.t; });
        v.insert(pos, std::move(rec));
    }

    mutable std::shared_mutex mu_;
    std::map<GreenhouseId, std::vector<Record>> series_;
    std::vector<Record> quarantine_;
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t flush_every_ = 64;
    std::size_t pending_ = 0;
};

} // namespace edgeirr::store
