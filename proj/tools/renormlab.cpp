#include "renormlab/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

using namespace renormlab;

namespace {

int list_experiments() {
    for (const auto& e : registry()) {
        std::cout << e.name << "\n  " << e.anchor << "\n";
        for (const auto& p : e.params) {
            std::cout << "    " << p.name << " (" << to_string(p.kind) << ")";
            if (p.fallback.is_null()) {
                std::cout << " required";
            } else {
                std::cout << " = " << p.fallback.dump();
            }
            std::cout << ": " << p.help << "\n";
        }
    }
    return 0;
}

// --jobs wins, then RENORMLAB_JOBS, then a single worker.
int resolve_jobs(int flag) {
    if (flag > 0) return flag;
    if (const char* env = std::getenv("RENORMLAB_JOBS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
        }
        std::cerr << "renormlab: ignoring RENORMLAB_JOBS='" << env << "'\n";
    }
    return 1;
}

int run_config(const std::string& path, const RunOptions& opt) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "renormlab: cannot open " << path << "\n";
        return 2;
    }
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::parse_error& e) {
        std::cerr << "renormlab: " << path << ": " << e.what() << "\n";
        return 2;
    }
    try {
        const RunResult rr = run(cfg, opt);
        const json& rec = rr.record;
        if (rec.contains("error")) {
            std::cerr << "renormlab: " << rec["experiment"].get<std::string>() << " failed in stage "
                      << rec["error"]["stage"].get<std::string>() << ": " << rec["error"]["message"].get<std::string>()
                      << "\n";
        } else {
            for (const auto& v : rec["verdicts"]) {
                std::cout << (v["pass"].get<bool>() ? "PASS " : "FAIL ") << v["name"].get<std::string>() << " ("
                          << v["value"].dump() << ", " << v["threshold"].get<std::string>() << ")\n";
            }
        }
        for (const auto& f : rr.files) std::cout << "wrote " << f.string() << "\n";
        return rr.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "renormlab: " << e.what() << "\n";
        return 2;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"renormlab: renormalization experiments for critical circle maps"};
    app.require_subcommand(1);

    std::string config;
    std::string output_dir = ".";
    std::uint64_t seed = 0;
    int jobs = 0;
    auto* run_cmd = app.add_subcommand("run", "run the experiment described by a JSON config");
    run_cmd->add_option("config", config, "config file")->required();
    run_cmd->add_option("--output-dir", output_dir, "directory for CSV files and the JSON record");
    auto* seed_opt = run_cmd->add_option("--seed", seed, "override the config seed");
    run_cmd->add_option("--jobs", jobs, "worker threads (default: RENORMLAB_JOBS or 1)")
        ->check(CLI::PositiveNumber);
    app.add_subcommand("list", "list experiments, what they probe and their parameters");

    CLI11_PARSE(app, argc, argv);

    if (app.got_subcommand("list")) return list_experiments();
    RunOptions opt;
    opt.output_dir = output_dir;
    if (*seed_opt) opt.seed = seed;
    opt.jobs = resolve_jobs(jobs);
    return run_config(config, opt);
}
