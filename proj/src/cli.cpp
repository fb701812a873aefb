#include "tvc/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tvc/analytics.hpp"
#include "tvc/config.hpp"
#include "tvc/experiments.hpp"
#include "tvc/model.hpp"
#include "tvc/rng.hpp"
#include "tvc/simulator.hpp"
#include "tvc/stats.hpp"

namespace tvc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    double duration = 0.0;
    double dt = 1.0;
    std::size_t iters = 5000;
    double range = 10.0;
    double grid = 100.0;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IO_ERROR, "cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IO_ERROR, "cannot write '" + path.string() + "'");
    out << content;
}

void write_manifest(const fs::path& out_dir, const std::string& verb,
                    const std::string& config_text, std::uint64_t seed) {
    json m;
    m["tool"] = "tvc";
    m["version"] = kVersion;
    m["verb"] = verb;
    m["seed"] = seed;
    m["config_digest"] = config::digest(config_text);
    // Wall-clock stamp lives in the manifest only, so every other output
    // stays byte-identical across reruns.
    m["generated_at"] =
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count();
    write_file(out_dir / "manifest.json", m.dump(2) + "\n");
}

std::vector<model::NodeProfile> load_profiles(const CommonOpts& opt,
                                              std::string* config_text_out) {
    const std::string text = read_file(opt.config_path);
    if (config_text_out) *config_text_out = text;
    return config::load_and_validate(text, opt.seed);
}

int cmd_generate(const CommonOpts& opt, const std::string& format) {
    std::string config_text;
    sim::RunSpec run;
    run.profiles = load_profiles(opt, &config_text);
    run.seed = opt.seed;
    run.duration = opt.duration > 0.0 ? opt.duration : 1000.0;
    run.dt = opt.dt;

    const sim::Trace trace = sim::generate_trace(run);
    fs::create_directories(opt.out_dir);
    if (format.empty() || format == "csv") {
        std::ofstream csv(fs::path(opt.out_dir) / "trace.csv", std::ios::binary);
        sim::emit(trace, sim::TraceFormat::CSV, csv);
    }
    if (format.empty() || format == "ns2") {
        std::ofstream ns2(fs::path(opt.out_dir) / "trace.ns2", std::ios::binary);
        sim::emit(trace, sim::TraceFormat::NS2, ns2);
    }
    write_file(fs::path(opt.out_dir) / "trace.meta.json", sim::metadata_json(trace));
    write_manifest(opt.out_dir, "generate", config_text, opt.seed);
    return 0;
}

int cmd_stats(const CommonOpts& opt, const std::string& trace_path,
              const std::string& contacts_path) {
    if (!contacts_path.empty()) {
        // externally collected encounter log: duration / inter-meeting curves
        std::ifstream in(contacts_path);
        if (!in) throw Error(ErrorCode::IO_ERROR, "cannot open '" + contacts_path + "'");
        const auto report = stats::contact_statistics(stats::ingest_contact_csv(in));
        fs::create_directories(opt.out_dir);
        write_file(fs::path(opt.out_dir) / "encounter_duration.csv",
                   stats::to_csv(report.durations, "duration_s"));
        write_file(fs::path(opt.out_dir) / "inter_meeting.csv",
                   stats::to_csv(report.inter_meeting, "gap_s"));
        write_manifest(opt.out_dir, "stats", contacts_path, 0);
        return 0;
    }
    std::ifstream in(trace_path);
    if (!in) throw Error(ErrorCode::IO_ERROR, "cannot open trace '" + trace_path + "'");
    const sim::Trace trace = stats::ingest_csv(in);

    // infer the field edge as the smallest multiple of the grid covering all samples
    double max_coord = 0.0;
    for (const auto& node : trace.nodes)
        for (const auto& s : node.samples) max_coord = std::max({max_coord, s.x, s.y});
    double field_edge = std::ceil(max_coord / opt.grid) * opt.grid;
    if (field_edge <= 0.0) field_edge = opt.grid;

    fs::create_directories(opt.out_dir);
    const auto pref = stats::visiting_preference(trace, field_edge, opt.grid);
    write_file(fs::path(opt.out_dir) / "visiting_preference.csv", stats::to_csv(pref));

    std::vector<double> gaps;
    for (double g = 3600.0; g <= trace.duration / 2.0; g += 3600.0) gaps.push_back(g);
    if (!gaps.empty()) {
        const auto curve = stats::reappearance_curve(trace, field_edge, opt.grid, gaps);
        write_file(fs::path(opt.out_dir) / "reappearance.csv", stats::to_csv(curve));
    }

    const auto contact_report = stats::contacts(trace, opt.range);
    write_file(fs::path(opt.out_dir) / "encounter_duration.csv",
               stats::to_csv(contact_report.durations, "duration_s"));
    write_file(fs::path(opt.out_dir) / "inter_meeting.csv",
               stats::to_csv(contact_report.inter_meeting, "gap_s"));

    const auto degree = stats::empirical_node_degree(trace, opt.range);
    std::ostringstream deg;
    deg << "node,mean_degree\n";
    for (std::size_t i = 0; i < degree.per_node.size(); ++i)
        deg << i << ',' << degree.per_node[i] << '\n';
    deg << "all," << degree.mean << '\n';
    write_file(fs::path(opt.out_dir) / "node_degree.csv", deg.str());

    write_manifest(opt.out_dir, "stats", trace_path, 0);
    return 0;
}

int cmd_theory(const CommonOpts& opt, bool with_monte_carlo) {
    std::string config_text;
    const auto profiles = load_profiles(opt, &config_text);
    fs::create_directories(opt.out_dir);
    analytics::CommRange k(opt.range);

    json out;
    double mean_degree = 0.0;
    json degrees = json::array();
    for (const auto& node : profiles) {
        const auto report = analytics::average_node_degree(node, profiles, k);
        degrees.push_back({{"node", report.node}, {"degree", report.expected_degree}});
        mean_degree += report.expected_degree;
    }
    mean_degree /= static_cast<double>(profiles.size());
    out["average_node_degree"] = {{"mean", mean_degree}, {"per_node", degrees}};

    const auto ht = analytics::hitting_time(profiles[0], k);
    out["hitting_time"] = json::parse(analytics::to_json(ht));
    write_file(fs::path(opt.out_dir) / "hitting_cells.csv", analytics::to_csv(ht));
    if (profiles.size() >= 2) {
        const auto mt = analytics::meeting_time(profiles[0], profiles[1], k);
        out["meeting_time"] = json::parse(analytics::to_json(mt));
    }
    if (with_monte_carlo) {
        // optional simulation cross-check of the closed forms
        json mc;
        const auto ht_mc = stats::empirical_hitting_time(
            profiles[0], opt.range, opt.iters, Rng::derive(opt.seed, 0x177),
            std::isinf(ht.expected_time) ? 0.0 : 100.0 * ht.expected_time);
        mc["hitting_time_s"] = {{"mean", ht_mc.mean},
                                {"std_error", ht_mc.std_error},
                                {"timeouts", ht_mc.timeouts}};
        if (profiles.size() >= 2) {
            const auto mt = analytics::meeting_time(profiles[0], profiles[1], k);
            const auto mt_mc = stats::empirical_meeting_time(
                profiles[0], profiles[1], opt.range, opt.iters, Rng::derive(opt.seed, 0x317),
                std::isinf(mt.expected_time) ? 0.0 : 100.0 * mt.expected_time);
            mc["meeting_time_s"] = {{"mean", mt_mc.mean},
                                    {"std_error", mt_mc.std_error},
                                    {"timeouts", mt_mc.timeouts}};
        }
        out["monte_carlo"] = mc;
    }
    write_file(fs::path(opt.out_dir) / "theory.json", out.dump(2) + "\n");
    write_manifest(opt.out_dir, "theory", config_text, opt.seed);
    return 0;
}

struct ValidationRow {
    std::string quantity;
    double analytic = 0.0;
    double simulated = 0.0;
    double std_error = 0.0;
    double threshold = 0.0;

    double relative_error() const {
        return simulated != 0.0 ? std::abs(analytic - simulated) / std::abs(simulated) : 0.0;
    }
    bool pass() const { return relative_error() <= threshold; }
};

int cmd_validate(const CommonOpts& opt, double th_ht, double th_mt, double th_deg) {
    std::string config_text;
    const auto profiles = load_profiles(opt, &config_text);
    analytics::CommRange k(opt.range);
    std::vector<ValidationRow> rows;

    // degree: analytic mean vs time-average over a generated run
    {
        double analytic = 0.0;
        for (const auto& node : profiles)
            analytic +=
                analytics::average_node_degree(node, profiles, k).expected_degree;
        analytic /= static_cast<double>(profiles.size());

        sim::RunSpec run;
        run.profiles = profiles;
        run.seed = opt.seed;
        run.dt = opt.dt;
        run.duration =
            opt.duration > 0.0 ? opt.duration : 4.0 * profiles[0].cycle_duration();
        const auto trace = sim::generate_trace(run);
        const auto degree = stats::empirical_node_degree(trace, opt.range);
        rows.push_back({"node_degree", analytic, degree.mean, 0.0, th_deg});
    }
    // hitting time: node 0
    {
        const auto ht = analytics::hitting_time(profiles[0], k);
        const auto mc = stats::empirical_hitting_time(
            profiles[0], opt.range, opt.iters, Rng::derive(opt.seed, 0x177),
            std::isinf(ht.expected_time) ? 0.0 : 100.0 * ht.expected_time);
        rows.push_back({"hitting_time_s", ht.expected_time, mc.mean, mc.std_error, th_ht});
    }
    // meeting time: nodes 0 and 1
    if (profiles.size() >= 2) {
        const auto mt = analytics::meeting_time(profiles[0], profiles[1], k);
        const auto mc = stats::empirical_meeting_time(
            profiles[0], profiles[1], opt.range, opt.iters, Rng::derive(opt.seed, 0x317),
            std::isinf(mt.expected_time) ? 0.0 : 100.0 * mt.expected_time);
        rows.push_back({"meeting_time_s", mt.expected_time, mc.mean, mc.std_error, th_mt});
    }

    bool all_pass = true;
    json report;
    report["k"] = opt.range;
    report["iterations"] = opt.iters;
    json jrows = json::array();
    for (const auto& row : rows) {
        const bool ok = row.pass();
        all_pass = all_pass && ok;
        std::cout << (ok ? "PASS " : "FAIL ") << row.quantity << ": analytic=" << row.analytic
                  << " simulated=" << row.simulated << " (stderr " << row.std_error
                  << ") rel_err=" << row.relative_error() << " threshold=" << row.threshold
                  << "\n";
        jrows.push_back({{"quantity", row.quantity},
                         {"analytic", row.analytic},
                         {"simulated", row.simulated},
                         {"std_error", row.std_error},
                         {"relative_error", row.relative_error()},
                         {"threshold", row.threshold},
                         {"pass", ok}});
    }
    report["rows"] = jrows;
    report["pass"] = all_pass;
    fs::create_directories(opt.out_dir);
    write_file(fs::path(opt.out_dir) / "validation.json", report.dump(2) + "\n");
    write_manifest(opt.out_dir, "validate", config_text, opt.seed);
    return all_pass ? 0 : 1;
}

int cmd_epidemic(const CommonOpts& opt, long source) {
    const std::string text = read_file(opt.config_path);
    const config::Document doc = config::load(text);
    if (doc.nodes.empty()) throw Error(ErrorCode::SCHEMA_ERROR, "no node groups");

    auto profiles = config::load_and_validate(text, opt.seed);
    sim::RunSpec run;
    run.seed = opt.seed;
    run.dt = opt.dt;
    run.duration = opt.duration > 0.0 ? opt.duration : 4.0 * profiles[0].cycle_duration();
    run.profiles = profiles;

    // Group representatives: first materialized node of each template.
    std::vector<std::size_t> group_start;
    std::vector<double> group_size;
    std::size_t offset = 0;
    for (const auto& tmpl : doc.nodes) {
        group_start.push_back(offset);
        group_size.push_back(static_cast<double>(tmpl.count));
        offset += tmpl.count;
    }
    const std::size_t groups = group_start.size();

    experiments::SiParams si;
    si.group_sizes = group_size;
    si.beta.assign(groups, std::vector<double>(groups, 0.0));
    const double cycle = profiles[0].cycle_duration();
    const auto sr = profiles[0].schedule[0].speed;
    const auto kc = geometry::relative_speed_factor(sr.v_min, sr.v_max, 1000000);
    for (std::size_t g = 0; g < groups; ++g) {
        for (std::size_t h = 0; h < groups; ++h) {
            double beta = 0.0;
            const auto& a = profiles[group_start[g]];
            // distinct nodes even within one group
            const auto& b = profiles[group_start[h] + (g == h && doc.nodes[h].count > 1 ? 1 : 0)];
            for (std::size_t t = 0; t < a.period_count(); ++t)
                beta += a.schedule[t].duration / cycle *
                        analytics::unit_meeting_probability(a, b, t, opt.range, kc.v_hat);
            si.beta[g][h] = beta;
        }
    }
    // symmetrize away representative-choice noise
    for (std::size_t g = 0; g < groups; ++g)
        for (std::size_t h = g + 1; h < groups; ++h) {
            const double b = 0.5 * (si.beta[g][h] + si.beta[h][g]);
            si.beta[g][h] = b;
            si.beta[h][g] = b;
        }

    si.initial_infected.assign(groups, 0.0);
    if (source >= 0) {
        for (std::size_t g = groups; g-- > 0;)
            if (static_cast<std::size_t>(source) >= group_start[g]) {
                si.initial_infected[g] = 1.0;
                break;
            }
    } else {
        // uniformly random source: split the initial unit mass by group share
        const double total = si.total();
        for (std::size_t g = 0; g < groups; ++g)
            si.initial_infected[g] = group_size[g] / total;
    }

    const auto theory = experiments::si_solve(si, run.duration, run.dt);
    const auto simulated =
        experiments::epidemic_simulate(run, opt.range, source, opt.iters);

    double max_gap = 0.0;
    for (std::size_t i = 0; i < std::min(theory.t.size(), simulated.t.size()); ++i)
        max_gap = std::max(max_gap, std::abs(theory.infected[i] - simulated.infected[i]));

    fs::create_directories(opt.out_dir);
    write_file(fs::path(opt.out_dir) / "epidemic_theory.csv", experiments::to_csv(theory));
    write_file(fs::path(opt.out_dir) / "epidemic_sim.csv", experiments::to_csv(simulated));
    json summary;
    summary["k"] = opt.range;
    summary["trials"] = opt.iters;
    summary["beta"] = si.beta;
    summary["v_hat"] = kc.v_hat;
    summary["max_abs_gap"] = max_gap;
    summary["population"] = si.total();
    write_file(fs::path(opt.out_dir) / "epidemic.json", summary.dump(2) + "\n");
    write_manifest(opt.out_dir, "epidemic", text, opt.seed);
    return 0;
}

int cmd_route(const CommonOpts& opt, double src_x, double src_y, double dst_x, double dst_y) {
    std::string config_text;
    auto profiles = load_profiles(opt, &config_text);
    sim::RunSpec run;
    run.seed = opt.seed;
    run.dt = opt.dt;
    run.duration = opt.duration > 0.0 ? opt.duration : 4.0 * profiles[0].cycle_duration();
    run.profiles = std::move(profiles);

    const auto result = experiments::greedy_forwarding_success(
        run, opt.range, {src_x, src_y}, {dst_x, dst_y}, opt.iters);
    std::cout << "success_rate " << result.success_rate << " (attach failures "
              << result.attach_failures << "/" << result.trials << ")\n";

    fs::create_directories(opt.out_dir);
    json summary;
    summary["k"] = opt.range;
    summary["trials"] = result.trials;
    summary["success_rate"] = result.success_rate;
    summary["attach_failures"] = result.attach_failures;
    summary["src"] = {src_x, src_y};
    summary["dst"] = {dst_x, dst_y};
    write_file(fs::path(opt.out_dir) / "route.json", summary.dump(2) + "\n");
    write_manifest(opt.out_dir, "route", config_text, opt.seed);
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Time-variant community mobility toolkit"};
    app.require_subcommand(1);

    CommonOpts opt;
    std::string format;
    std::string trace_path;
    std::string contacts_path;
    double th_ht = 0.15, th_mt = 0.20, th_deg = 0.20;
    long source = -1;
    double src_x = 250.0, src_y = 250.0, dst_x = 350.0, dst_y = 350.0;

    auto add_common = [&](CLI::App* sub, bool needs_seed) {
        sub->add_option("--out", opt.out_dir, "output directory");
        sub->add_option("--duration", opt.duration, "simulated seconds");
        sub->add_option("--dt", opt.dt, "sample interval seconds");
        sub->add_option("--iters", opt.iters, "Monte Carlo iterations / trials");
        sub->add_option("--range", opt.range, "transmission range K (m)");
        sub->add_option("--grid", opt.grid, "grid cell size g (m)");
        auto* seed = sub->add_option("--seed", opt.seed, "run seed");
        if (needs_seed) seed->required();
    };
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "config JSON")->required();
    };

    auto* generate = app.add_subcommand("generate", "generate mobility traces");
    add_config(generate);
    add_common(generate, true);
    generate->add_option("--format", format, "ns2|csv (default: both)");

    auto* stats_cmd = app.add_subcommand("stats", "empirical metrics over a trace CSV");
    stats_cmd->add_option("--trace", trace_path, "trace CSV path");
    stats_cmd->add_option("--contacts", contacts_path, "encounter log CSV (a,b,start_s,end_s)");
    add_common(stats_cmd, false);

    auto* theory = app.add_subcommand("theory", "closed-form degree / hitting / meeting");
    add_config(theory);
    add_common(theory, false);

    auto* validate = app.add_subcommand("validate", "theory vs Monte Carlo");
    add_config(validate);
    add_common(validate, true);
    validate->add_option("--threshold-ht", th_ht, "hitting-time threshold");
    validate->add_option("--threshold-mt", th_mt, "meeting-time threshold");
    validate->add_option("--threshold-deg", th_deg, "degree threshold");

    auto* epidemic = app.add_subcommand("epidemic", "SI prediction vs trace-driven spread");
    add_config(epidemic);
    add_common(epidemic, true);
    epidemic->add_option("--source", source, "source node index (-1: random)");

    auto* route = app.add_subcommand("route", "greedy geographic forwarding success");
    add_config(route);
    add_common(route, true);
    route->add_option("--src-x", src_x, "source x");
    route->add_option("--src-y", src_y, "source y");
    route->add_option("--dst-x", dst_x, "destination x");
    route->add_option("--dst-y", dst_y, "destination y");

    try {
        app.parse(argc, const_cast<char**>(argv));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (generate->parsed()) return cmd_generate(opt, format);
        if (stats_cmd->parsed()) {
            if (trace_path.empty() && contacts_path.empty())
                throw Error(ErrorCode::USAGE_ERROR, "stats needs --trace or --contacts");
            return cmd_stats(opt, trace_path, contacts_path);
        }
        if (theory->parsed()) return cmd_theory(opt, theory->count("--iters") > 0);
        if (validate->parsed()) return cmd_validate(opt, th_ht, th_mt, th_deg);
        if (epidemic->parsed()) return cmd_epidemic(opt, source);
        if (route->parsed()) return cmd_route(opt, src_x, src_y, dst_x, dst_y);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace tvc::cli
