#include "edgeirr/edge_node.hpp"
#include "edgeirr/metrics.hpp"
#include "edgeirr/netsim.hpp"
#include "support.hpp"

using namespace edgeirr;
using namespace edgeirr::edge;
using namespace std::chrono_literals;

namespace {

const GreenhouseId kSin{2};
const GreenhouseId kFarmer{1};

class EdgeNodeTest : public ::testing::Test
{
protected:
    ScenarioConfig cfg = default_scenario();
    std::unique_ptr<EdgeNode> node;
    std::vector<ValveCommand> sent;

    void SetUp() override
    {
        node = std::make_unique<EdgeNode>(cfg);
        node->connect([this](const ValveCommand& c) { sent.push_back(c); });
    }

    void feed(double m, SimTime t, std::uint16_t mote = 3)
    {
        node->ingest(MoistureSample{MoteId{mote}, kSin, m, t}, t);
    }

    void ack_last(SimTime t)
    {
        node->on_valve_ack(ValveAck{sent.back().target, sent.back(), t}, t);
    }
};

} // namespace

TEST_F(EdgeNodeTest, LowSampleOpens)
{
    feed(48.0, 60s);
    ASSERT_EQ(sent.size(), 1u);
    EXPECT_EQ(sent[0].action, ValveAction::Open);
    EXPECT_EQ(sent[0].target, ActuatorId{2});
    EXPECT_EQ(node->query_series(kSin, 0s, 60s, store::Metric::Commands).size(), 1u);
}

TEST_F(EdgeNodeTest, InBandSampleHolds)
{
    feed(48.0, 60s);
    ack_last(61s);
    feed(52.0, 120s);
    EXPECT_EQ(sent.size(), 1u);
    EXPECT_EQ(node->query_series(kSin, 0s, 200s, store::Metric::Moisture).size(), 2u);
}

TEST_F(EdgeNodeTest, UnknownMoteQuarantined)
{
    node->ingest(MoistureSample{MoteId{99}, GreenhouseId{0}, 10.0, 5s}, 5s);
    EXPECT_TRUE(sent.empty());
    EXPECT_EQ(node->store().quarantine().size(), 1u);
    EXPECT_EQ(node->guard().egress_counter(), 0u);
    EXPECT_FALSE(node->greenhouse_of(MoteId{99}));
}

TEST_F(EdgeNodeTest, SetBandRejectsInverted)
{
    EXPECT_THROW(node->set_band(kSin, MoistureBand{55.0, 50.0}, 0s), ContractViolation);
    EXPECT_THROW(node->set_band(GreenhouseId{9}, MoistureBand{50.0, 55.0}, 0s), NotFound);
}

TEST_F(EdgeNodeTest, SetBandTakesEffectAndIsAudited)
{
    node->set_band(kSin, MoistureBand{60.0, 65.0}, 10s);
    feed(58.0, 60s);
    ASSERT_EQ(sent.size(), 1u);
    EXPECT_EQ(sent[0].action, ValveAction::Open);
    const auto audit = node->query_series(kSin, 0s, 100s, store::Metric::Audit);
    ASSERT_EQ(audit.size(), 1u);
    const auto& change = std::get<store::BandChange>(audit[0].payload);
    EXPECT_EQ(change.band, (MoistureBand{60.0, 65.0}));
    EXPECT_EQ(change.attribution, "operator");
}

TEST_F(EdgeNodeTest, ManualSuppressesAuto)
{
    node->set_mode(kSin, ControlMode::Manual, 0s);
    feed(40.0, 60s);
    EXPECT_TRUE(sent.empty());
}

TEST_F(EdgeNodeTest, BackToAutoEvaluatesImmediately)
{
    node->set_mode(kSin, ControlMode::Manual, 0s);
    feed(40.0, 60s);
    node->set_mode(kSin, ControlMode::Auto, 10000s); // sample is stale by now
    ASSERT_EQ(sent.size(), 1u);
    EXPECT_EQ(sent[0].action, ValveAction::Open);
    EXPECT_EQ(sent[0].issued_at, SimTime{10000s});
}

TEST_F(EdgeNodeTest, RedundantModeIsNoOp)
{
    node->set_mode(kSin, ControlMode::Auto, 0s);
    EXPECT_TRUE(node->query_series(kSin, 0s, 10s, store::Metric::Audit).empty());
    EXPECT_TRUE(sent.empty());
}

TEST_F(EdgeNodeTest, ManualValve)
{
    EXPECT_THROW(node->manual_valve(kSin, ValveAction::Open, 0s), ModeConflict);
    node->set_mode(kSin, ControlMode::Manual, 0s);
    node->manual_valve(kSin, ValveAction::Open, 5s);
    node->manual_valve(kSin, ValveAction::Open, 6s);
    ASSERT_EQ(sent.size(), 2u);
    for (const auto& c : sent)
        EXPECT_EQ(c.origin, CommandOrigin::ManualOperator);
    const auto cmds = node->query_series(kSin, 0s, 10s, store::Metric::Commands);
    ASSERT_EQ(cmds.size(), 2u);
    EXPECT_EQ(std::get<ValveCommand>(cmds[0].payload).origin, CommandOrigin::ManualOperator);
}

TEST_F(EdgeNodeTest, QueryEdgeCases)
{
    feed(52.0, 60s);
    EXPECT_TRUE(node->query_series(kSin, 61s, 61s, store::Metric::Moisture).empty());
    EXPECT_THROW(node->query_series(kSin, 10s, 5s, store::Metric::Moisture), ContractViolation);
    EXPECT_THROW(node->query_series(GreenhouseId{9}, 0s, 5s, store::Metric::Moisture), NotFound);
}

TEST_F(EdgeNodeTest, LiveStatus)
{
    auto before = node->live_status(0s);
    ASSERT_EQ(before.greenhouses.size(), 2u);
    EXPECT_FALSE(before.greenhouses[1].aggregate);

    feed(53.0, 60s);
    feed(51.0, 60s, 4);
    auto after = node->live_status(60s);
    ASSERT_TRUE(after.greenhouses[1].aggregate);
    EXPECT_DOUBLE_EQ(*after.greenhouses[1].aggregate, 52.0);
    EXPECT_EQ(after.greenhouses[1].samples, 2u);
    EXPECT_EQ(after.greenhouses[1].band, (MoistureBand{50.0, 55.0}));

    feed(49.0, 120s);
    feed(49.0, 120s, 4);
    ack_last(121s);
    feed(57.0, 600s);
    feed(57.0, 600s, 4);
    ASSERT_EQ(sent.back().action, ValveAction::Close);
    EXPECT_EQ(node->live_status(600s).greenhouses[1].valve, ValveBelief::Closed);
}

TEST_F(EdgeNodeTest, MissingAckMakesBeliefUnknownAndRetries)
{
    feed(45.0, 60s);
    ASSERT_EQ(sent.size(), 1u);
    EXPECT_EQ(node->next_wakeup(60s), SimTime{90s});
    node->on_timer(90s);
    ASSERT_EQ(sent.size(), 2u);
    EXPECT_EQ(sent[1].action, ValveAction::Open);
    ack_last(91s);
    EXPECT_FALSE(node->live_status(91s).greenhouses[1].command_pending);
}

TEST_F(EdgeNodeTest, StaleAckDoesNotConfirmNewerCommand)
{
    feed(45.0, 60s);
    const auto first = sent.back();
    node->on_timer(90s);
    node->on_valve_ack(ValveAck{first.target, first, 95s}, 95s);
    EXPECT_TRUE(node->live_status(95s).greenhouses[1].command_pending);
}

TEST_F(EdgeNodeTest, TimedGreenhouseFollowsSchedule)
{
    node->on_timer(0s);
    EXPECT_TRUE(sent.empty()); // before the 07:00 activation
    EXPECT_EQ(node->next_wakeup(0s), SimTime{7h});
    node->on_timer(7h);
    ASSERT_EQ(sent.size(), 1u);
    EXPECT_EQ(sent[0].target, ActuatorId{1});
    EXPECT_EQ(sent[0].action, ValveAction::Open);
}

TEST(EdgeBoundary, BackhaulCountsEgress)
{
    auto cfg = default_scenario();
    cfg.mode = EdgeMode::WithBackhaul;
    cfg.duration = 1h;
    EdgeNode node(cfg);
    netsim::run(cfg, node);
    EXPECT_GT(node.guard().egress_counter(), 0u);
}

TEST(EdgeBoundary, EdgeOnlyNeverCounts)
{
    auto cfg = default_scenario();
    cfg.duration = 6h;
    EdgeNode node(cfg);
    netsim::run(cfg, node);
    EXPECT_EQ(node.guard().egress_counter(), 0u);
    EXPECT_GT(node.guard().withheld(), 0u);
}

class EdgeRun : public ::testing::Test
{
protected:
    static void SetUpTestSuite()
    {
        cfg_ = new ScenarioConfig(default_scenario());
        node_ = new EdgeNode(*cfg_);
        log_ = new netsim::RunLog(netsim::run(*cfg_, *node_));
    }
    static void TearDownTestSuite()
    {
        delete log_;
        delete node_;
        delete cfg_;
    }
    static ScenarioConfig* cfg_;
    static EdgeNode* node_;
    static netsim::RunLog* log_;
};
ScenarioConfig* EdgeRun::cfg_ = nullptr;
EdgeNode* EdgeRun::node_ = nullptr;
netsim::RunLog* EdgeRun::log_ = nullptr;

TEST_F(EdgeRun, EveryDeliveredSampleIsStored)
{
    for (const auto& gh : cfg_->greenhouses)
    {
        std::size_t delivered = 0;
        for (const auto& d : log_->select<netsim::SampleDelivered>())
            delivered += d.sample.greenhouse == gh.id;
        EXPECT_EQ(node_->query_series(gh.id, 0s, cfg_->duration, store::Metric::Moisture).size(),
                  delivered);
    }
}

TEST_F(EdgeRun, EveryIssuedCommandIsStoredWithOneOrigin)
{
    for (const auto& gh : cfg_->greenhouses)
    {
        std::vector<ValveCommand> issued;
        for (const auto& c : log_->select<netsim::CommandIssued>())
            if (c.gh == gh.id)
                issued.push_back(c.cmd);
        std::vector<ValveCommand> stored;
        for (const auto& r : node_->query_series(gh.id, 0s, cfg_->duration, store::Metric::Commands))
            stored.push_back(std::get<ValveCommand>(r.payload));
        EXPECT_EQ(stored, issued);
    }
}

// Valve query cross-check: acknowledged states rebuild the RunLog's open
// intervals, shifted only by ack latency and missing acks.
TEST_F(EdgeRun, ValveSeriesMatchesRunLogTransitions)
{
    const auto gh = GreenhouseId{2};
    const auto acks = node_->query_series(gh, 0s, cfg_->duration + 1h, store::Metric::Valve);
    std::vector<SimTime> applied_changes;
    for (const auto& v : log_->select<netsim::ValveApplied>())
        if (v.gh == gh)
            applied_changes.push_back(v.t);
    std::size_t matched = 0;
    for (const auto& r : acks)
    {
        const auto& ack = std::get<ValveAck>(r.payload);
        matched += std::find(applied_changes.begin(), applied_changes.end(), ack.applied_at) !=
                   applied_changes.end();
    }
    EXPECT_EQ(matched, acks.size());
    EXPECT_GT(acks.size(), 0u);

    const auto store_summary = metrics::summarize_store(node_->store(), *cfg_, cfg_->duration,
                                                           {SimTime::zero(), 0.0, false});
    const auto run_summary = metrics::summarize(*log_, *cfg_, {SimTime::zero(), 0.0, false});
    EXPECT_NEAR(store_summary.greenhouse(gh).valve_open_hours,
                run_summary.greenhouse(gh).valve_open_hours, 0.25);
}

TEST(EdgeModes, NoAutoCommandInsideManualInterval)
{
    auto cfg = default_scenario();
    cfg.duration = 2 * kDay;
    EdgeNode node(cfg);
    netsim::Simulator sim(cfg, node);
    const std::vector<std::pair<SimTime, ControlMode>> plan{
        {5h, ControlMode::Manual}, {11h, ControlMode::Auto}, {20h, ControlMode::Manual},
        {30h, ControlMode::Auto}};
    for (const auto& [t, mode] : plan)
    {
        sim.run_until(t);
        for (const auto& gh : cfg.greenhouses)
        {
            node.set_mode(gh.id, mode, t);
            if (mode == ControlMode::Manual)
                node.manual_valve(gh.id, ValveAction::Close, t);
        }
        sim.refresh_timer();
    }
    const auto& log = sim.finish();

    for (const auto& gh : cfg.greenhouses)
    {
        std::vector<std::pair<SimTime, ControlMode>> audit;
        for (const auto& r : node.query_series(gh.id, 0s, cfg.duration, store::Metric::Audit))
            audit.emplace_back(r.t, std::get<store::ModeChange>(r.payload).mode);
        ASSERT_EQ(audit, plan);
        for (const auto& r : node.query_series(gh.id, 0s, cfg.duration, store::Metric::Commands))
        {
            const auto& c = std::get<ValveCommand>(r.payload);
            const bool manual = (c.issued_at > 5h && c.issued_at < 11h) ||
                                (c.issued_at > 20h && c.issued_at < 30h);
            if (manual)
            {
                EXPECT_EQ(c.origin, CommandOrigin::ManualOperator) << netsim::format_time(c.issued_at);
            }
        }
    }
    std::size_t external = 0;
    for (const auto& c : log.select<netsim::CommandIssued>())
        external += c.cause == netsim::CommandCause::External;
    EXPECT_GE(external, 4u);
}
