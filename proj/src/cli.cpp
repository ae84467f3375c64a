#include "pfb/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "pfb/config.hpp"
#include "pfb/error.hpp"
#include "pfb/realtime.hpp"
#include "pfb/server.hpp"

namespace pfb {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

struct Common {
    std::optional<std::string> config_path;
    std::vector<std::string> overrides;
    std::vector<std::uint64_t> seeds;
    std::string out_dir = "runs";
    std::optional<std::int64_t> duration_ticks;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw RuntimeError("io_error", "cannot write " + path.string());
    f << text;
    if (!f) throw RuntimeError("io_error", "failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw RuntimeError("io_error", "cannot read " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

ExperimentConfig load_config(const Common& c) {
    auto overrides = c.overrides;
    if (c.duration_ticks) overrides.push_back("duration_ticks=" + std::to_string(*c.duration_ticks));
    return load_experiment_config(c.config_path, overrides);
}

// One seed writes straight into the output directory; several get one
// subdirectory each so no two runs share a file.
fs::path seed_dir(const Common& c, std::uint64_t seed) {
    fs::path dir(c.out_dir);
    if (c.seeds.size() > 1) dir /= "seed-" + std::to_string(seed);
    fs::create_directories(dir);
    return dir;
}

std::string log_name(FeedbackMode task) { return std::string(to_string(task)) + ".log"; }

int run_simulate(const Common& c, const std::string& task_name, const std::optional<std::string>& snapshot_path,
                 bool realtime, std::ostream& out) {
    const auto task = parse_feedback_mode(task_name);
    if (!task) throw ConfigError("task", "unknown task " + task_name);
    const ExperimentConfig base = load_config(c);

    for (const auto seed : c.seeds) {
        const fs::path dir = seed_dir(c, seed);
        LearnerSource source = FreshLearning{};
        if (*task != FeedbackMode::Training) {
            const fs::path snap = snapshot_path ? fs::path(*snapshot_path) : dir / "snapshot.json";
            if (*task == FeedbackMode::Predictive || fs::exists(snap))
                source = FromSnapshotFile{snap.string()};
            else
                source = NoLearner{};
        }
        const TrialConfig trial = make_trial_config(base, *task, seed, source);

        TickHook hook;
        std::optional<Pacer> pacer;
        if (realtime) {
            pacer.emplace(std::chrono::duration_cast<Pacer::Clock::duration>(
                std::chrono::duration<double, std::milli>(base.sim.dt_ms)));
            pacer->start(Pacer::Clock::now());
            hook = [&pacer](const TrialStepRecord&) {
                std::this_thread::sleep_until(pacer->deadline());
                pacer->on_tick(Pacer::Clock::now());
            };
        }
        const TrialResult result = run_trial(trial, hook);

        save_log_file((dir / log_name(*task)).string(), result.log);
        if (result.snapshot) save_snapshot_file((dir / "snapshot.json").string(), *result.snapshot);
        ordered_json line;
        line["seed"] = seed;
        line["task"] = std::string(to_string(*task));
        line["log"] = (dir / log_name(*task)).string();
        line["metrics"] = to_json(result.metrics);
        if (pacer) line["tick_fraction_within_tolerance"] = pacer->stats().fraction_within();
        out << line.dump() << '\n';
    }
    return kExitOk;
}

int run_protocol_cmd(const Common& c, std::ostream& out) {
    const ExperimentConfig base = load_config(c);
    for (const auto seed : c.seeds) {
        const fs::path dir = seed_dir(c, seed);
        const ProtocolReport report = run_protocol(base, seed);
        std::string bins = per_bin_csv_header();
        for (const auto mode : kProtocolOrder) {
            save_log_file((dir / log_name(mode)).string(), report.trial(mode).log);
            bins += per_bin_csv_rows(seed, mode, report.trial(mode).metrics);
        }
        save_snapshot_file((dir / "snapshot.json").string(), *report.trial(FeedbackMode::Training).snapshot);
        const auto doc = to_json(report, base);
        write_text(dir / "report.json", doc.dump(2) + "\n");
        write_text(dir / "bins.csv", bins);

        ordered_json line;
        line["seed"] = seed;
        line["out"] = dir.string();
        line["comparisons"] = doc["comparisons"];
        out << line.dump() << '\n';
    }
    return kExitOk;
}

int run_replay(const std::string& path, const Common& c, std::ostream& out) {
    const ExperimentConfig base = load_config(c);
    TrialLog log;
    try {
        log = load_log_file(path);
    } catch (const ParseError& e) {
        throw RuntimeError("bad_log", path + ": " + e.what());
    }
    TrialMetrics metrics;
    try {
        metrics = compute_metrics(log, base.codec);
    } catch (const ParseError& e) {
        throw RuntimeError("bad_log", path + ": " + e.what());
    }
    out << to_json(metrics).dump() << '\n';
    return kExitOk;
}

std::vector<fs::path> find_reports(const std::vector<std::string>& inputs) {
    std::set<fs::path> found;
    for (const auto& in : inputs) {
        const fs::path p(in);
        if (fs::is_regular_file(p)) {
            found.insert(p);
        } else if (fs::is_directory(p)) {
            for (const auto& e : fs::recursive_directory_iterator(p))
                if (e.is_regular_file() && e.path().filename() == "report.json") found.insert(e.path());
        } else {
            throw RuntimeError("io_error", "no such report or directory: " + in);
        }
    }
    if (found.empty()) throw RuntimeError("no_reports", "no report.json found");
    return {found.begin(), found.end()};
}

std::string fmt_double(double v) {
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
}

// Per-seed rows plus a summary across seeds; the cross-task comparison table
// used for plotting load and bin-profile differences.
int run_report(const std::vector<std::string>& inputs, const std::optional<std::string>& out_dir, std::ostream& out) {
    std::ostringstream table;
    table << "seed,task,total_summed_load,wall_contact_count,median_feedback_lead_ms,interior_visit_fraction,"
             "beyond_wall_visit_fraction\n";
    std::map<std::string, std::vector<double>> loads;
    std::map<std::string, std::vector<double>> interior, beyond;
    int seeds = 0, ordering = 0;
    for (const auto& path : find_reports(inputs)) {
        json doc = json::parse(read_text(path), nullptr, false);
        try {
            if (doc.is_discarded()) throw ParseError("not JSON");
            const auto& cmp = doc.at("comparisons");
            ++seeds;
            if (cmp.at("ordering_holds").get<bool>()) ++ordering;
            for (const auto mode : kProtocolOrder) {
                const std::string name(to_string(mode));
                const TrialMetrics m = metrics_from_json(doc.at("tasks").at(name));
                const double in = cmp.at("interior_visit_fraction").at(name).get<double>();
                const double out_frac = cmp.at("beyond_wall_visit_fraction").at(name).get<double>();
                table << doc.at("seed").get<std::uint64_t>() << ',' << name << ',' << m.total_summed_load << ','
                      << m.wall_contact_count << ','
                      << (m.median_feedback_lead_ms ? fmt_double(*m.median_feedback_lead_ms) : std::string()) << ','
                      << fmt_double(in) << ',' << fmt_double(out_frac) << '\n';
                loads[name].push_back(static_cast<double>(m.total_summed_load));
                interior[name].push_back(in);
                beyond[name].push_back(out_frac);
            }
        } catch (const json::exception& e) {
            throw RuntimeError("bad_report", path.string() + ": " + e.what());
        } catch (const ParseError& e) {
            throw RuntimeError("bad_report", path.string() + ": " + e.what());
        }
    }

    const auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };
    ordered_json summary;
    summary["seeds"] = seeds;
    summary["ordering_holds_count"] = ordering;
    for (const auto mode : kProtocolOrder) {
        const std::string name(to_string(mode));
        summary["mean_total_summed_load"][name] = mean(loads[name]);
        summary["mean_interior_visit_fraction"][name] = mean(interior[name]);
        summary["mean_beyond_wall_visit_fraction"][name] = mean(beyond[name]);
    }
    const double reactive = mean(loads["reactive"]);
    summary["predictive_over_reactive_mean_load"] = reactive > 0 ? mean(loads["predictive"]) / reactive : 0.0;

    if (out_dir) {
        fs::create_directories(*out_dir);
        write_text(fs::path(*out_dir) / "comparison.csv", table.str());
        write_text(fs::path(*out_dir) / "summary.json", summary.dump(2) + "\n");
        out << summary.dump() << '\n';
    } else {
        out << table.str();
    }
    return kExitOk;
}

std::pair<std::string, unsigned short> parse_bind(const std::string& bind) {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw ConfigError("bind", "expected host:port");
    const std::string host = bind.substr(0, colon);
    const std::string port = bind.substr(colon + 1);
    try {
        std::size_t used = 0;
        const int p = std::stoi(port, &used);
        if (used != port.size() || p < 0 || p > 65535) throw std::out_of_range("port");
        return {host, static_cast<unsigned short>(p)};
    } catch (const std::exception&) {
        throw ConfigError("bind", "bad port " + port);
    }
}

int run_serve(const Common& c, const std::string& bind, const std::optional<std::string>& static_root,
              const std::optional<std::string>& snapshot_path, bool out_given, std::ostream& out) {
    ServerOptions options;
    std::tie(options.bind_address, options.port) = parse_bind(bind);
    options.static_root = static_root;
    options.session.config = load_config(c);
    if (out_given) options.session.output_dir = c.out_dir;
    if (snapshot_path) {
        try {
            options.session.snapshot = load_snapshot_file(*snapshot_path);
        } catch (const ParseError& e) {
            throw RuntimeError("bad_snapshot", *snapshot_path + ": " + e.what());
        }
    }
    options.handle_signals = true;
    Server server(std::move(options));
    ordered_json hello;
    hello["listening"] = bind.substr(0, bind.rfind(':')) + ":" + std::to_string(server.port());
    out << hello.dump() << std::endl;
    server.run();
    const IntervalStats stats = server.tick_stats();
    ordered_json bye;
    bye["ticks"] = stats.intervals + (stats.intervals > 0 ? 1 : 0);
    bye["tick_fraction_within_tolerance"] = stats.fraction_within();
    bye["mean_tick_interval_ms"] = stats.mean_ms();
    out << bye.dump() << std::endl;
    return kExitOk;
}

void print_error(std::ostream& err, const std::string& code, const std::string& message,
                 const std::optional<std::string>& field = std::nullopt) {
    ordered_json e;
    e["error"] = code;
    if (field) e["field"] = *field;
    e["message"] = message;
    err << e.dump() << '\n';
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Predictive-feedback arm simulator and experiment harness", "pfb"};
    app.require_subcommand(1, 1);

    Common common;
    std::string task = "training";
    std::optional<std::string> snapshot_path;
    bool realtime = false;
    std::string bind = "127.0.0.1:8765";
    std::optional<std::string> static_root;
    std::string log_path;
    std::vector<std::string> report_inputs;
    std::optional<std::string> report_out;

    const auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "Experiment config file (JSON)");
        sub->add_option("--set", common.overrides, "Override a config value: dotted.key=value (repeatable)");
    };
    const auto add_run = [&](CLI::App* sub) {
        add_config(sub);
        sub->add_option("--seed", common.seeds, "Seed (repeatable; default 0)");
        sub->add_option("--out", common.out_dir, "Output directory")->capture_default_str();
        sub->add_option("--duration-ticks", common.duration_ticks, "Ticks per trial")->check(CLI::PositiveNumber);
    };

    auto* simulate = app.add_subcommand("simulate", "Run one trial per seed");
    add_run(simulate);
    simulate->add_option("--task", task, "training|no_feedback|reactive|predictive")->capture_default_str();
    simulate->add_option("--snapshot", snapshot_path, "Weight snapshot (default: <out>/snapshot.json)");
    simulate->add_flag("--realtime", realtime, "Pace ticks to the wall clock");

    auto* protocol = app.add_subcommand("protocol", "Run training then the three test tasks per seed");
    add_run(protocol);

    auto* serve = app.add_subcommand("serve", "Run the interactive websocket session server");
    add_config(serve);
    auto* serve_out = serve->add_option("--out", common.out_dir, "Directory for session logs and snapshot");
    serve->add_option("--bind", bind, "host:port to listen on")->capture_default_str();
    serve->add_option("--static", static_root, "Directory served over plain HTTP");
    serve->add_option("--snapshot", snapshot_path, "Snapshot enabling predictive tasks before training");

    auto* replay = app.add_subcommand("replay", "Recompute metrics from a trial log");
    add_config(replay);
    replay->add_option("log", log_path, "Trial log file")->required();

    auto* report = app.add_subcommand("report", "Aggregate protocol reports into a comparison table");
    report->add_option("inputs", report_inputs, "report.json files or directories containing them")->required();
    report->add_option("--out", report_out, "Write comparison.csv and summary.json here");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        print_error(err, "usage", e.what());
        err << app.help();
        return kExitConfig;
    }
    if (common.seeds.empty()) common.seeds.push_back(0);

    try {
        if (simulate->parsed()) return run_simulate(common, task, snapshot_path, realtime, out);
        if (protocol->parsed()) return run_protocol_cmd(common, out);
        if (serve->parsed()) return run_serve(common, bind, static_root, snapshot_path, serve_out->count() > 0, out);
        if (replay->parsed()) return run_replay(log_path, common, out);
        if (report->parsed()) return run_report(report_inputs, report_out, out);
    } catch (const ConfigError& e) {
        print_error(err, "config_error", e.what(), e.field());
        return kExitConfig;
    } catch (const RuntimeError& e) {
        print_error(err, e.code(), e.what());
        return kExitRuntime;
    } catch (const fs::filesystem_error& e) {
        print_error(err, "io_error", e.what());
        return kExitRuntime;
    } catch (const std::exception& e) {
        print_error(err, "internal", e.what());
        return kExitRuntime;
    }
    return kExitConfig;
}

}  // namespace pfb
