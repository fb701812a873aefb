#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "tvc/config.hpp"
#include "tvc/model.hpp"
#include "tvc/simulator.hpp"
#include "tvc/stats.hpp"

using namespace tvc;
using namespace tvc::stats;
using sim::Sample;
using sim::Trace;

namespace {

model::Community make_community(const std::string& id, double x, double y, double edge,
                                double field) {
    model::Community c;
    c.id = id;
    c.rect = {x, y, x + edge, y + edge};
    c.edge_length = edge;
    c.is_roaming = x == 0.0 && y == 0.0 && edge == field;
    return c;
}

model::NodeProfile roaming_profile(double v = 10.0) {
    model::NodeProfile p;
    p.id = "roamer";
    p.field.edge_length = 1000.0;
    model::TimePeriod period;
    period.duration = 1000000.0;
    period.speed = {v, v};
    period.communities = {make_community("roam", 0, 0, 1000, 1000)};
    period.transition = {{1.0}};
    period.mean_epoch_length = {520.0};
    period.max_pause = {0.0};
    p.schedule = {period};
    return p;
}

model::NodeProfile pinned_profile(const std::string& id, double x, double y) {
    model::NodeProfile p;
    p.id = id;
    p.field.edge_length = 1000.0;
    model::TimePeriod period;
    period.duration = 100000.0;
    period.speed = {0.001, 0.001};
    period.communities = {make_community("spot", x, y, 1, 1000)};
    period.transition = {{1.0}};
    period.mean_epoch_length = {0.001};
    period.max_pause = {1000000.0};
    p.schedule = {period};
    return p;
}

Trace make_trace(const std::vector<std::vector<Sample>>& nodes, double dt = 1.0) {
    Trace t;
    t.dt = dt;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        sim::NodeTrace node;
        node.id = std::to_string(i);
        node.samples = nodes[i];
        if (!nodes[i].empty()) t.duration = std::max(t.duration, nodes[i].back().t);
        t.nodes.push_back(std::move(node));
    }
    return t;
}

std::string config_dir() { return std::string(TVC_SOURCE_DIR) + "/configs/"; }

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("csv round trip: emit then ingest reproduces the samples") {
    sim::RunSpec run;
    run.seed = 5;
    run.duration = 300.0;
    run.profiles = {roaming_profile(), pinned_profile("p", 400, 400)};
    const Trace original = sim::generate_trace(run);

    std::stringstream buffer;
    sim::emit(original, sim::TraceFormat::CSV, buffer);
    const Trace parsed = ingest_csv(buffer);

    REQUIRE(parsed.nodes.size() == original.nodes.size());
    CHECK(parsed.dt == original.dt);
    for (std::size_t i = 0; i < original.nodes.size(); ++i) {
        REQUIRE(parsed.nodes[i].samples.size() == original.nodes[i].samples.size());
        for (std::size_t k = 0; k < original.nodes[i].samples.size(); ++k) {
            const Sample& a = original.nodes[i].samples[k];
            const Sample& b = parsed.nodes[i].samples[k];
            CHECK(a.t == b.t);
            CHECK(a.x == b.x);  // shortest round-trip formatting is exact
            CHECK(a.y == b.y);
            CHECK(a.on == b.on);
        }
    }
}

TEST_CASE("ingest rejects malformed input") {
    SUBCASE("empty file") {
        std::istringstream empty("");
        try {
            ingest_csv(empty);
            FAIL("expected PARSE_ERROR");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::PARSE_ERROR);
            CHECK(std::string(e.what()).find("missing header") != std::string::npos);
        }
    }
    SUBCASE("shuffled rows for one node") {
        std::istringstream shuffled("t,node,x,y,on\n5,0,1,1,1\n3,0,2,2,1\n");
        CHECK_THROWS_AS(ingest_csv(shuffled), Error);
        std::istringstream again("t,node,x,y,on\n5,0,1,1,1\n3,0,2,2,1\n");
        try {
            ingest_csv(again);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NON_MONOTONE_TIME);
        }
    }
    SUBCASE("garbage row") {
        std::istringstream bad("t,node,x,y,on\n1,0,oops,2,1\n");
        CHECK_THROWS_AS(ingest_csv(bad), Error);
    }
}

TEST_CASE("visiting preference ranks on-time fractions") {
    // one node: 60 s in cell A, 30 s in cell B, 10 s in cell C
    std::vector<Sample> samples;
    auto add = [&](double t0, int count, double x, double y) {
        for (int i = 0; i < count; ++i)
            samples.push_back({t0 + i, x, y, true});
    };
    add(0, 60, 50, 50);
    add(60, 30, 250, 50);
    add(90, 10, 450, 50);
    const Trace trace = make_trace({samples});
    const auto report = visiting_preference(trace, 1000.0, 100.0);
    REQUIRE(report.per_node.size() == 1);
    REQUIRE(report.per_node[0].fractions.size() == 3);
    CHECK(report.per_node[0].fractions[0] == doctest::Approx(0.6));
    CHECK(report.per_node[0].fractions[1] == doctest::Approx(0.3));
    CHECK(report.per_node[0].fractions[2] == doctest::Approx(0.1));

    // always-off node is flagged and excluded from the mean curve
    std::vector<Sample> off = samples;
    for (auto& s : off) s.on = false;
    const auto report2 = visiting_preference(make_trace({samples, off}), 1000.0, 100.0);
    CHECK(report2.per_node[1].always_off);
    CHECK(report2.mean_curve[0] == doctest::Approx(0.6));
}

TEST_CASE("visiting preference of a synthetic trace matches the occupancy prediction") {
    // WLAN-style profile: observed only while paused; the top location share
    // should match the pause-time share of the local community.
    const auto profiles = config::load_and_validate(slurp(config_dir() + "model1-wlan.json"), 3);
    sim::RunSpec run;
    run.seed = 90210;
    run.duration = 3.0 * profiles[0].cycle_duration();
    run.profiles = model::replicate(profiles[0], 4);
    const Trace trace = sim::generate_trace(run);
    const auto report = visiting_preference(trace, 1000.0, 100.0);

    double predicted_top = 0.0;
    double predicted_on = 0.0;
    const double cycle = profiles[0].cycle_duration();
    for (std::size_t t = 0; t < profiles[0].period_count(); ++t) {
        const auto probs = model::state_probabilities(profiles[0], t);
        const double w = profiles[0].schedule[t].duration / cycle;
        predicted_top += w * probs.p_pause[0];
        predicted_on += w * (probs.p_pause[0] + probs.p_pause[1]);
    }
    const double predicted_fraction = predicted_top / predicted_on;
    CHECK(report.mean_curve[0] == doctest::Approx(predicted_fraction).epsilon(0.10));
}

TEST_CASE("reappearance curve basics") {
    SUBCASE("static always-on node scores 1 at every gap") {
        std::vector<Sample> samples;
        for (int i = 0; i < 100; ++i) samples.push_back({static_cast<double>(i), 55, 55, true});
        const auto curve = reappearance_curve(make_trace({samples}), 1000.0, 100.0, {10.0, 40.0});
        CHECK(curve.probabilities[0] == doctest::Approx(1.0));
        CHECK(curve.probabilities[1] == doctest::Approx(1.0));
    }
    SUBCASE("deterministic two-cell alternation") {
        std::vector<Sample> samples;
        for (int i = 0; i < 100; ++i)
            samples.push_back({static_cast<double>(i), i % 2 == 0 ? 50.0 : 250.0, 50, true});
        const auto curve =
            reappearance_curve(make_trace({samples}), 1000.0, 100.0, {2.0, 3.0});
        CHECK(curve.probabilities[0] == doctest::Approx(1.0));  // even gap
        CHECK(curve.probabilities[1] == doctest::Approx(0.0));  // odd gap
    }
}

TEST_CASE("contact extraction") {
    SUBCASE("two static nodes in range form one trace-spanning contact") {
        std::vector<Sample> a, b;
        for (int i = 0; i < 50; ++i) {
            a.push_back({static_cast<double>(i), 100, 100, true});
            b.push_back({static_cast<double>(i), 100 + 9.0, 100, true});
        }
        const auto report = contacts(make_trace({a, b}), 10.0);
        REQUIRE(report.events.size() == 1);
        CHECK(report.events[0].start == 0.0);
        CHECK(report.events[0].end == doctest::Approx(50.0));
    }
    SUBCASE("closed threshold: distance exactly K is in contact") {
        std::vector<Sample> a{{0.0, 0, 0, true}}, b{{0.0, 10.0, 0, true}};
        const auto report = contacts(make_trace({a, b}), 10.0);
        CHECK(report.events.size() == 1);
    }
    SUBCASE("periodic meetings: durations 10, inter-meetings 90") {
        std::vector<Sample> a, b;
        for (int i = 0; i < 300; ++i) {
            const bool near = i % 100 < 10;
            a.push_back({static_cast<double>(i), 100, 100, true});
            b.push_back({static_cast<double>(i), near ? 105.0 : 500.0, 100, true});
        }
        const auto report = contacts(make_trace({a, b}), 10.0);
        REQUIRE(report.events.size() == 3);
        for (const auto& e : report.events) CHECK(e.end - e.start == doctest::Approx(10.0));
        REQUIRE(report.inter_meeting.values.size() == 1);
        CHECK(report.inter_meeting.values[0] == doctest::Approx(90.0));
    }
    SUBCASE("off nodes do not form contacts") {
        std::vector<Sample> a{{0.0, 0, 0, true}}, b{{0.0, 5.0, 0, false}};
        CHECK(contacts(make_trace({a, b}), 10.0).events.empty());
    }
}

TEST_CASE("ecdf properties") {
    const auto e = make_ecdf({5.0, 1.0, 3.0, 3.0, 2.0});
    REQUIRE(!e.values.empty());
    CHECK(e.fractions.back() == doctest::Approx(1.0));
    for (std::size_t i = 1; i < e.values.size(); ++i) {
        CHECK(e.values[i] > e.values[i - 1]);
        CHECK(e.fractions[i] > e.fractions[i - 1]);
    }
    // tie collapsed: value 3 jumps straight to its cumulative share
    CHECK(e.values[2] == 3.0);
    CHECK(e.fractions[2] == doctest::Approx(0.8));
}

TEST_CASE("empirical node degree of two static nodes in range") {
    std::vector<Sample> a, b;
    for (int i = 0; i < 20; ++i) {
        a.push_back({static_cast<double>(i), 100, 100, true});
        b.push_back({static_cast<double>(i), 105, 100, true});
    }
    const auto degree = empirical_node_degree(make_trace({a, b}), 10.0);
    CHECK(degree.per_node[0] == doctest::Approx(1.0));
    CHECK(degree.per_node[1] == doctest::Approx(1.0));
    CHECK(degree.mean == doctest::Approx(1.0));
}

TEST_CASE("empirical node degree is stable under sampling refinement") {
    const auto profiles = config::load_and_validate(slurp(config_dir() + "model1.json"), 11);
    sim::RunSpec run;
    run.seed = 2024;
    run.duration = 4000.0;
    run.profiles = model::replicate(profiles[0], 3);
    run.dt = 1.0;
    const auto coarse = empirical_node_degree(sim::generate_trace(run), 200.0);
    run.dt = 0.5;
    const auto fine = empirical_node_degree(sim::generate_trace(run), 200.0);
    CHECK(coarse.mean == doctest::Approx(fine.mean).epsilon(0.01));
}

TEST_CASE("empirical hitting time of a roaming node") {
    const auto profile = roaming_profile();
    const auto mc = empirical_hitting_time(profile, 10.0, 400, 88);
    CHECK(mc.timeouts == 0);
    // analytic value 1/P_h = 5000 s
    CHECK(std::abs(mc.mean - 5000.0) < 3.0 * mc.std_error);
}

TEST_CASE("empirical hitting time with a field-covering range is zero") {
    const auto profile = roaming_profile();
    const auto mc = empirical_hitting_time(profile, 1500.0, 50, 7);
    CHECK(mc.mean == 0.0);
}

TEST_CASE("empirical meeting time of co-located pinned nodes is zero") {
    const auto a = pinned_profile("a", 400, 400);
    const auto b = pinned_profile("b", 400, 400);
    const auto mc = empirical_meeting_time(a, b, 5.0, 50, 9);
    CHECK(mc.mean == 0.0);
}

TEST_CASE("hitting timeout cap is honored and reported") {
    // pinned node, target almost surely out of reach: every iteration times out
    const auto profile = pinned_profile("p", 400, 400);
    const auto mc = empirical_hitting_time(profile, 5.0, 10, 3, 50.0);
    CHECK(mc.timeouts > 0);
    CHECK(mc.iterations == 10);
}

TEST_CASE("contact log ingestion") {
    std::istringstream in("a,b,start_s,end_s\n0,1,10,25\n0,2,30,31\n");
    const auto events = ingest_contact_csv(in);
    REQUIRE(events.size() == 2);
    CHECK(events[0].end == 25.0);

    std::istringstream bad("a,b,start_s,end_s\n0,1,30,20\n");
    CHECK_THROWS_AS(ingest_contact_csv(bad), Error);
}

TEST_CASE("contact log statistics") {
    // pair (0,1) meets twice with a 50 s gap; pair (0,2) once
    std::istringstream in("a,b,start_s,end_s\n0,1,10,25\n0,2,40,44\n0,1,75,80\n");
    const auto report = contact_statistics(ingest_contact_csv(in));
    REQUIRE(report.events.size() == 3);
    CHECK(report.durations.values.front() == doctest::Approx(4.0));
    CHECK(report.durations.values.back() == doctest::Approx(15.0));
    REQUIRE(report.inter_meeting.values.size() == 1);
    CHECK(report.inter_meeting.values[0] == doctest::Approx(50.0));
}
