#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vvccs/engine.hpp"
#include "vvccs/report.hpp"
#include "vvccs/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitUnsafe = 2; // collision or invariant violation observed

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ',')) {
        auto dots = part.find("..");
        if (dots != std::string::npos) {
            std::uint64_t lo = std::stoull(part.substr(0, dots));
            std::uint64_t hi = std::stoull(part.substr(dots + 2));
            if (hi < lo) throw std::invalid_argument("seed range is backwards: " + part);
            for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
        } else if (!part.empty()) {
            seeds.push_back(std::stoull(part));
        }
    }
    if (seeds.empty()) throw std::invalid_argument("no seeds in '" + spec + "'");
    return seeds;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
}

struct RunArgs {
    std::string scenario_path;
    std::int64_t seed = -1;
    std::string algo;
    std::string trace_level = "none";
    std::string trace_path;
    std::string metrics_path = "-";
    std::vector<std::string> no_v2v;
    bool no_debug_invariants = false;
};

vvccs::sim::Scenario load_with_overrides(const RunArgs& args, std::uint64_t seed_override,
                                         bool use_override) {
    auto sc = vvccs::sim::load_scenario(args.scenario_path);
    if (use_override) sc.seed = seed_override;
    if (!args.algo.empty()) sc.algorithm = vvccs::sim::parse_algorithm(args.algo);
    if (args.no_debug_invariants) sc.debug_invariants = false;
    return sc;
}

bool unsafe(const vvccs::sim::RunMetrics& m) {
    return !m.collisions.empty() || !m.invariant_violations.empty();
}

int cmd_run(const RunArgs& args) {
    auto sc = load_with_overrides(args, static_cast<std::uint64_t>(args.seed), args.seed >= 0);
    vvccs::sim::RunOptions opts;
    opts.extra_no_v2v = args.no_v2v;
    std::ofstream trace_file;
    if (!args.trace_path.empty()) {
        trace_file.open(args.trace_path);
        if (!trace_file) throw std::runtime_error("cannot write '" + args.trace_path + "'");
        opts.trace_out = &trace_file;
        opts.trace = vvccs::sim::parse_trace_level(
            args.trace_level == "none" ? "events" : args.trace_level);
    }
    auto metrics = vvccs::sim::run_scenario(sc, opts);
    std::string j = vvccs::sim::metrics_to_json(metrics);
    if (args.metrics_path == "-")
        std::cout << j << "\n";
    else
        write_file(args.metrics_path, j);
    return unsafe(metrics) ? kExitUnsafe : kExitOk;
}

int cmd_compare(const RunArgs& args) {
    auto sc = load_with_overrides(args, static_cast<std::uint64_t>(args.seed), args.seed >= 0);
    vvccs::sim::RunOptions opts;
    opts.extra_no_v2v = args.no_v2v;
    auto res = vvccs::sim::compare_algorithms(sc, opts);
    std::cout << "lease: total_completion_time=" << res.lease.total_completion_time
              << " collisions=" << res.lease.collisions.size() << "\n";
    std::cout << "lock:  total_completion_time=" << res.lock.total_completion_time
              << " collisions=" << res.lock.collisions.size() << "\n";
    std::cout << "completion_ratio=" << res.completion_ratio << "\n";
    return (unsafe(res.lease) || unsafe(res.lock)) ? kExitUnsafe : kExitOk;
}

int cmd_sweep(const RunArgs& args, const std::string& seeds_spec, const std::string& out_path) {
    auto seeds = parse_seeds(seeds_spec);
    std::ofstream out;
    if (!out_path.empty()) {
        out.open(out_path);
        if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
    }
    int unsafe_runs = 0, crossed_runs = 0;
    double sum_completion = 0.0;
    for (auto seed : seeds) {
        auto sc = load_with_overrides(args, seed, true);
        vvccs::sim::RunOptions opts;
        opts.extra_no_v2v = args.no_v2v;
        auto m = vvccs::sim::run_scenario(sc, opts);
        if (unsafe(m)) unsafe_runs++;
        if (m.all_crossed) {
            crossed_runs++;
            sum_completion += m.total_completion_time;
        }
        if (out.is_open()) {
            nlohmann::ordered_json line = nlohmann::ordered_json::parse(
                vvccs::sim::metrics_to_json(m));
            out << line.dump() << "\n";
        }
    }
    std::cout << "runs=" << seeds.size() << " unsafe=" << unsafe_runs
              << " all_crossed=" << crossed_runs;
    if (crossed_runs > 0) std::cout << " mean_completion=" << sum_completion / crossed_runs;
    std::cout << "\n";
    return unsafe_runs > 0 ? kExitUnsafe : kExitOk;
}

int cmd_report(const std::string& trace_path, const std::string& out_dir) {
    std::ifstream in(trace_path);
    if (!in) throw std::runtime_error("cannot open '" + trace_path + "'");
    auto data = vvccs::report::parse_trace(in);
    std::filesystem::create_directories(out_dir);
    write_file(out_dir + "/time_space.svg", vvccs::report::time_space_svg(data));
    write_file(out_dir + "/lease_gantt.svg", vvccs::report::lease_gantt_svg(data));
    write_file(out_dir + "/summary.txt", vvccs::report::summarize(data));
    std::cout << vvccs::report::summarize(data);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lease-based intersection coordination simulator"};
    app.require_subcommand(1);

    RunArgs args;
    std::string seeds_spec = "0..9";
    std::string sweep_out;
    std::string trace_in, report_dir = ".";

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", args.scenario_path, "scenario JSON file")->required();
        cmd->add_option("--seed", args.seed, "override the scenario seed");
        cmd->add_option("--algo", args.algo, "coordination algorithm: lease | lock");
        cmd->add_option("--no-v2v", args.no_v2v,
                        "vehicle id whose V2V link is disabled (repeatable)");
        cmd->add_flag("--no-debug-invariants", args.no_debug_invariants,
                      "skip runtime invariant checking");
    };

    auto* run = app.add_subcommand("run", "run one scenario");
    add_common(run);
    run->add_option("--trace", args.trace_path, "write a JSONL trace to this file");
    run->add_option("--trace-level", args.trace_level, "trace detail: none | events | full");
    run->add_option("--metrics", args.metrics_path, "metrics JSON output path ('-' for stdout)");

    auto* compare = app.add_subcommand("compare", "run lease and lock on the same scenario");
    add_common(compare);

    auto* sweep = app.add_subcommand("sweep", "run a scenario across many seeds");
    add_common(sweep);
    sweep->add_option("--seeds", seeds_spec, "seed list, e.g. 1,2,5 or 0..99");
    sweep->add_option("--out", sweep_out, "write per-run metrics JSONL here");

    auto* report = app.add_subcommand("report", "render plots from a trace");
    report->add_option("--trace", trace_in, "JSONL trace file")->required();
    report->add_option("--out-dir", report_dir, "output directory for SVG/summary files");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(args);
        if (compare->parsed()) return cmd_compare(args);
        if (sweep->parsed()) return cmd_sweep(args, seeds_spec, sweep_out);
        if (report->parsed()) return cmd_report(trace_in, report_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
