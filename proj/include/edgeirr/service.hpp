#pragma once

// Long-running edge-node service: the simulator drives a time-scaled clock,
// the edge node controls it, and an HTTP API exposes status, series, and
// operator controls. Optionally real gateways connect over the frame
// protocol and share the same ingest/dispatch path.
//
// API (JSON bodies):
//   GET  /status
//   GET  /greenhouses/{id}/series?metric=moisture|valve|commands|audit&from=&to=
//   PUT  /greenhouses/{id}/band    {"low_lim": 50, "upper_lim": 55}
//   PUT  /greenhouses/{id}/mode    {"mode": "Manual"}
//   POST /greenhouses/{id}/valve   {"action": "Open"}
//   GET  /metrics/summary
// Times in requests and responses are simulated seconds.

#include "edgeirr/edge_node.hpp"
#include "edgeirr/gateway_server.hpp"
#include "edgeirr/metrics.hpp"
#include "edgeirr/netsim.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

namespace edgeirr::service {

using json = nlohmann::json;

/// Maps wall time to simulated time: sim = scale * wall since start. A scale
/// of 0 freezes the clock; tests then drive it with advance_to().
class ScaledClock
{
public:
    explicit ScaledClock(double scale) : scale_(scale), start_(std::chrono::steady_clock::now()) {}

    SimTime now() const
    {
        if (scale_ <= 0.0)
            return manual_.load();
        const auto wall = std::chrono::steady_clock::now() - start_;
        const double ms = std::chrono::duration<double, std::milli>(wall).count() * scale_;
        return SimTime{static_cast<std::int64_t>(ms)};
    }

    void advance_to(SimTime t) { manual_.store(t); }
    double scale() const noexcept { return scale_; }

private:
    double scale_;
    std::chrono::steady_clock::time_point start_;
    std::atomic<SimTime> manual_{SimTime{0}};
};

inline double secs(SimTime t) { return to_seconds(t); }

inline json band_json(const MoistureBand& b)
{
    return {{"low_lim", b.low_lim}, {"upper_lim", b.upper_lim}};
}

inline json sample_json(const MoistureSample& s)
{
    return {{"mote", s.mote.value},
            {"greenhouse", s.greenhouse.value},
            {"moisture", s.moisture},
            {"sampled_at", secs(s.sampled_at)}};
}

inline json command_json(const ValveCommand& c)
{
    return {{"target", c.target.value},
            {"action", to_string(c.action)},
            {"issued_at", secs(c.issued_at)},
            {"origin", to_string(c.origin)}};
}

inline json record_json(const store::Record& r)
{
    json j = std::visit(
        [](const auto& p) -> json {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, MoistureSample>)
                return sample_json(p);
            else if constexpr (std::is_same_v<T, ValveCommand>)
                return command_json(p);
            else if constexpr (std::is_same_v<T, ValveAck>)
                return {{"actuator", p.actuator.value},
                        {"state", p.command.action == ValveAction::Open ? "Open" : "Closed"},
                        {"applied_at", secs(p.applied_at)},
                        {"command", command_json(p.command)}};
            else if constexpr (std::is_same_v<T, store::BandChange>)
                return {{"band", band_json(p.band)}, {"attribution", p.attribution}};
            else
                return {{"mode", to_string(p.mode)}, {"attribution", p.attribution}};
        },
        r.payload);
    j["t"] = secs(r.t);
    return j;
}

inline json status_json(const edge::StatusSnapshot& s)
{
    json gh = json::array();
    for (const auto& g : s.greenhouses)
    {
        gh.push_back({{"id", g.id.value},
                      {"name", g.name},
                      {"strategy", g.strategy},
                      {"aggregate", g.aggregate ? json(*g.aggregate) : json(nullptr)},
                      {"aggregate_stale", g.aggregate_stale},
                      {"valve", to_string(g.valve)},
                      {"band", g.band ? band_json(*g.band) : json(nullptr)},
                      {"mode", to_string(g.mode)},
                      {"last_sample_at", g.last_sample_at ? json(secs(*g.last_sample_at)) : json(nullptr)},
                      {"data_uptime", secs(g.data_uptime)},
                      {"samples", g.samples},
                      {"command_pending", g.command_pending}});
    }
    return {{"now", secs(s.now)},
            {"mode", to_string(s.mode)},
            {"egress_counter", s.egress_counter},
            {"greenhouses", std::move(gh)}};
}

inline json summary_json(const metrics::RunSummary& s)
{
    json gh = json::array();
    for (const auto& g : s.greenhouses)
        gh.push_back({{"greenhouse", g.gh.value},
                      {"name", g.name},
                      {"strategy", g.strategy},
                      {"mean", g.mean},
                      {"stddev", g.stddev},
                      {"amplitude", g.amplitude},
                      {"time_in_band", g.time_in_band},
                      {"valve_open_hours", g.valve_open_hours},
                      {"water_liters", g.water_liters},
                      {"commands", g.commands},
                      {"drops", g.drops}});
    return {{"window_start", secs(s.window_start)},
            {"window_end", secs(s.window_end)},
            {"greenhouses", std::move(gh)}};
}

struct ServiceOptions
{
    std::string host = "127.0.0.1";
    int port = 8080; // 0 picks a free port
    double time_scale = 60.0;
    std::filesystem::path store_path; // empty keeps the store in memory
    std::optional<int> gateway_port;  // frame protocol listener
    SimTime warm_up{0};
};

class EdgeService
{
public:
    EdgeService(ScenarioConfig config, ServiceOptions opts)
        : config_(std::move(config)), opts_(std::move(opts)), clock_(opts_.time_scale),
          node_(config_, opts_.store_path), sim_(config_, node_)
    {
        // The simulator wired itself as the dispatcher; widen it so real
        // gateways see the same commands.
        node_.connect([this](const ValveCommand& cmd) {
            sim_.send_command(cmd);
            if (gateways_)
                gateways_->send(cmd);
        });
        routes();
    }

    EdgeService(const EdgeService&) = delete;
    EdgeService& operator=(const EdgeService&) = delete;

    ~EdgeService() { stop(); }

    /// Binds the API (and the gateway listener if configured) and starts the
    /// simulation thread. Returns the bound HTTP port.
    int start()
    {
        port_ = opts_.port == 0 ? http_.bind_to_any_port(opts_.host)
                                : (http_.bind_to_port(opts_.host, opts_.port) ? opts_.port : -1);
        if (port_ < 0)
            throw std::runtime_error(fmt::format("cannot listen on {}:{}", opts_.host, opts_.port));
        if (opts_.gateway_port)
        {
            gateways_ = std::make_unique<gateway::GatewayServer>(
                [this](const MoistureSample& s) {
                    std::lock_guard lock(sim_mu_);
                    node_.ingest(s, sim_.now());
                    sim_.refresh_timer();
                },
                [this](const ValveAck& a) {
                    std::lock_guard lock(sim_mu_);
                    node_.on_valve_ack(a, sim_.now());
                });
            gateway_port_ = gateways_->start(opts_.host, *opts_.gateway_port);
        }
        running_ = true;
        http_thread_ = std::thread([this] { http_.listen_after_bind(); });
        sim_thread_ = std::thread([this] { sim_loop(); });
        http_.wait_until_ready();
        return port_;
    }

    /// Stops serving and flushes the store.
    void stop()
    {
        if (!running_.exchange(false))
            return;
        cv_.notify_all();
        http_.stop();
        if (http_thread_.joinable())
            http_thread_.join();
        if (sim_thread_.joinable())
            sim_thread_.join();
        if (gateways_)
            gateways_->stop();
        node_.store().flush();
    }

    /// Manual clock only: advances simulated time and processes due events.
    void advance_to(SimTime t)
    {
        clock_.advance_to(t);
        std::lock_guard lock(sim_mu_);
        sim_.run_until(std::min(t, config_.duration));
    }

    SimTime now() const
    {
        std::lock_guard lock(sim_mu_);
        return sim_.now();
    }

    int port() const noexcept { return port_; }
    std::optional<int> gateway_port() const noexcept { return gateway_port_; }
    edge::EdgeNode& node() noexcept { return node_; }
    const ScenarioConfig& config() const noexcept { return config_; }

private:
    void sim_loop()
    {
        std::unique_lock wait_lock(wait_mu_);
        while (running_)
        {
            if (clock_.scale() > 0.0)
            {
                std::lock_guard lock(sim_mu_);
                sim_.run_until(std::min(clock_.now(), config_.duration));
            }
            cv_.wait_for(wait_lock, std::chrono::milliseconds{20});
        }
    }

    static void reply(httplib::Response& res, int status, const json& body)
    {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void error(httplib::Response& res, int status, std::string_view message)
    {
        reply(res, status, json{{"error", message}});
    }

    static GreenhouseId gh_param(const httplib::Request& req)
    {
        const auto& s = req.matches[1].str();
        const auto v = std::stoul(s);
        if (v > 0xFFFF)
            throw NotFound("unknown greenhouse " + s);
        return GreenhouseId{static_cast<std::uint16_t>(v)};
    }

    template <class F>
    void guarded(httplib::Response& res, F&& f)
    {
        try
        {
            f();
        }
        catch (const NotFound& e)
        {
            error(res, 404, e.what());
        }
        catch (const ModeConflict& e)
        {
            error(res, 409, e.what());
        }
        catch (const ContractViolation& e)
        {
            error(res, 400, e.what());
        }
        catch (const json::exception& e)
        {
            error(res, 400, std::string{"bad request body: "} + e.what());
        }
        catch (const std::invalid_argument& e)
        {
            error(res, 400, e.what());
        }
        catch (const std::out_of_range& e)
        {
            error(res, 400, e.what());
        }
    }

    void routes()
    {
        // httplib also sets SO_REUSEPORT, which would let a second node share
        // the port silently.
        http_.set_socket_options([](socket_t sock) {
            int yes = 1;
            ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
        });
        http_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                   {"Access-Control-Allow-Methods", "GET, PUT, POST, OPTIONS"},
                                   {"Access-Control-Allow-Headers", "Content-Type"}});
        http_.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
            res.status = 204;
        });

        http_.Get("/status", [this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard lock(sim_mu_);
            reply(res, 200, status_json(node_.live_status(sim_.now())));
        });

        http_.Get(R"(/greenhouses/(\d+)/series)",
                  [this](const httplib::Request& req, httplib::Response& res) {
                      guarded(res, [&] {
                          const auto gh = gh_param(req);
                          const auto metric = store::parse_metric(
                              req.has_param("metric") ? req.get_param_value("metric") : "moisture");
                          const SimTime now = this->now();
                          const SimTime from = req.has_param("from")
                                                   ? from_seconds(std::stod(req.get_param_value("from")))
                                                   : SimTime::zero();
                          const SimTime to = req.has_param("to")
                                                 ? from_seconds(std::stod(req.get_param_value("to")))
                                                 : now;
                          json records = json::array();
                          for (const auto& r : node_.query_series(gh, from, to, metric))
                              records.push_back(record_json(r));
                          reply(res, 200,
                                {{"greenhouse", gh.value},
                                 {"metric", req.has_param("metric") ? req.get_param_value("metric")
                                                                    : "moisture"},
                                 {"from", secs(from)},
                                 {"to", secs(to)},
                                 {"records", std::move(records)}});
                      });
                  });

        http_.Put(R"(/greenhouses/(\d+)/band)",
                  [this](const httplib::Request& req, httplib::Response& res) {
                      guarded(res, [&] {
                          const auto gh = gh_param(req);
                          const auto body = json::parse(req.body);
                          const MoistureBand band{body.at("low_lim").get<double>(),
                                                  body.at("upper_lim").get<double>()};
                          std::lock_guard lock(sim_mu_);
                          node_.set_band(gh, band, sim_.now(),
                                         body.value("attribution", std::string{"operator"}));
                          reply(res, 200, {{"greenhouse", gh.value}, {"band", band_json(band)}});
                      });
                  });

        http_.Put(R"(/greenhouses/(\d+)/mode)",
                  [this](const httplib::Request& req, httplib::Response& res) {
                      guarded(res, [&] {
                          const auto gh = gh_param(req);
                          const auto body = json::parse(req.body);
                          const auto mode = parse_control_mode(body.at("mode").get<std::string>());
                          std::lock_guard lock(sim_mu_);
                          node_.set_mode(gh, mode, sim_.now(),
                                         body.value("attribution", std::string{"operator"}));
                          sim_.refresh_timer();
                          reply(res, 200, {{"greenhouse", gh.value}, {"mode", to_string(mode)}});
                      });
                  });

        http_.Post(R"(/greenhouses/(\d+)/valve)",
                   [this](const httplib::Request& req, httplib::Response& res) {
                       guarded(res, [&] {
                           const auto gh = gh_param(req);
                           const auto body = json::parse(req.body);
                           const auto action =
                               parse_valve_action(body.at("action").get<std::string>());
                           std::lock_guard lock(sim_mu_);
                           const auto cmd = node_.manual_valve(gh, action, sim_.now());
                           sim_.refresh_timer();
                           reply(res, 200, {{"greenhouse", gh.value}, {"command", command_json(cmd)}});
                       });
                   });

        http_.Get("/metrics/summary", [this](const httplib::Request&, httplib::Response& res) {
            const SimTime now = this->now();
            metrics::SummaryOptions o;
            o.warm_up = opts_.warm_up;
            reply(res, 200, summary_json(metrics::summarize_store(node_.store(), config_, now, o)));
        });
    }

    ScenarioConfig config_;
    ServiceOptions opts_;
    ScaledClock clock_;
    edge::EdgeNode node_;
    netsim::Simulator sim_;
    httplib::Server http_;
    std::unique_ptr<gateway::GatewayServer> gateways_;
    std::thread http_thread_;
    std::thread sim_thread_;
    std::atomic<bool> running_{false};
    mutable std::mutex sim_mu_;
    std::mutex wait_mu_;
    std::condition_variable cv_;
    int port_ = -1;
    std::optional<int> gateway_port_;
};

} // namespace edgeirr::service
