// oqs.cpp — command-line front end: run / compare scenarios, run the built-in checks

#include "oqs/checks.hpp"
#include "oqs/errors.hpp"
#include "oqs/scenario.hpp"

#include "CLI11.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace oqs;

namespace {

enum Exit { ok = 0, assertion_failed = 1, config_error = 2, numerical_failure = 3 };

// Maps an in-flight exception to the documented exit status.
int classify(const std::exception_ptr& e, std::string& msg) {
    try {
        std::rethrow_exception(e);
    } catch (const NumericalFailure& x) {
        msg = x.what();
        return numerical_failure;
    } catch (const ToleranceError& x) {
        msg = x.what();
        return numerical_failure;
    } catch (const std::exception& x) {
        // ConfigError, InvalidParameter, InvalidSpec, DimensionError, RegimeError, ...
        msg = x.what();
        return config_error;
    }
}

fs::path output_dir(const std::optional<std::string>& flag, const scenario::ScenarioConfig& c) {
    if (flag) return *flag;
    if (!c.output.dir.empty()) return c.output.dir;
    if (const char* env = std::getenv("OQS_OUT"); env && *env) return env;
    throw ConfigError("output: no directory (use --out, output.dir or OQS_OUT)");
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("output: cannot create directory " + dir.string());
}

void report(const std::string& label, const scenario::ScenarioResult& r) {
    for (const auto& a : r.assertions)
        std::printf("%s%s  %-4s  %s  value=%.6g  %s %.3g\n", label.c_str(), label.empty() ? "" : ": ",
                    a.passed ? "PASS" : "FAIL", a.name.c_str(), a.value, a.rule.c_str(), a.tolerance);
    for (const auto& s : r.advisories) std::printf("%s%sadvisory: %s\n", label.c_str(), label.empty() ? "" : ": ", s.c_str());
}

int cmd_run(const std::string& path, const std::optional<std::string>& out, int jobs,
            const std::optional<std::uint64_t>& seed) {
    auto j = scenario::read_json_file(path);
    if (seed) j["seed"] = *seed;
    auto points = scenario::expand_sweep(j);
    const fs::path root = output_dir(out, points.front().config);
    make_dir(root);

    struct Outcome {
        int status = ok;
        std::string message;
        bool passed = false;
    };
    std::vector<Outcome> outcomes(points.size());
    std::vector<scenario::ScenarioResult> results(points.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < points.size();) {
            try {
                const auto& pt = points[i];
                const fs::path dir = pt.label.empty() ? root : root / pt.label;
                make_dir(dir);
                results[i] = scenario::run_scenario(pt.config);
                scenario::write_artifacts(pt.config, results[i], dir);
                outcomes[i].passed = results[i].passed();
                outcomes[i].status = outcomes[i].passed ? ok : assertion_failed;
            } catch (...) {
                outcomes[i].status = classify(std::current_exception(), outcomes[i].message);
            }
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(points.size())));
    std::vector<std::thread> pool;
    for (int k = 1; k < n; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    int status = ok;
    scenario::json index = scenario::json::array();
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& o = outcomes[i];
        if (o.message.empty())
            report(points[i].label, results[i]);
        else
            std::fprintf(stderr, "oqs: %s%s%s\n", points[i].label.c_str(), points[i].label.empty() ? "" : ": ",
                         o.message.c_str());
        // numerical failure outranks a failed assertion; config errors outrank both
        if (o.status == config_error || (o.status == numerical_failure && status != config_error) ||
            (o.status == assertion_failed && status == ok))
            status = o.status;
        index.push_back({{"label", points[i].label},
                         {"assignment", points[i].assignment},
                         {"status", o.status},
                         {"passed", o.passed}});
    }
    if (points.size() > 1 || !points.front().label.empty()) {
        std::ofstream f(root / "sweep.json", std::ios::binary);
        f << index.dump(2) << "\n";
        if (!f) throw ConfigError("output: cannot write " + (root / "sweep.json").string());
    }
    return status;
}

int cmd_compare(const std::string& path, const std::optional<std::string>& out) {
    const auto j = scenario::read_json_file(path);
    if (j.contains("sweep")) throw ConfigError("compare: sweeps are not supported");
    const auto c = scenario::parse_config(j);
    const fs::path dir = output_dir(out, c);
    make_dir(dir);
    const auto r = scenario::compare_representations(c);
    scenario::write_artifacts(c, r, dir, "compare.csv", "compare.json");
    report("", r);
    return r.passed() ? ok : assertion_failed;
}

int cmd_check(const std::vector<int>& only, std::uint64_t seed) {
    std::vector<int> ids = only;
    if (ids.empty())
        for (int i = 1; i <= checks::check_count; ++i) ids.push_back(i);
    bool all = true;
    for (const int id : ids) {
        const auto r = checks::run_check(id, seed);
        std::printf("%s\n", checks::format(r).c_str());
        std::fflush(stdout);
        all = all && r.passed;
    }
    return all ? ok : assertion_failed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Open-quantum-system toolkit: toy-model representations and vacuum-field bremsstrahlung"};
    app.require_subcommand(1);

    std::string config;
    std::optional<std::string> out;
    int jobs = 1;
    std::optional<std::uint64_t> seed;
    auto* run = app.add_subcommand("run", "Run a scenario (or a sweep) and write its artifacts");
    run->add_option("config", config, "Scenario config (JSON)")->required();
    run->add_option("--out", out, "Output directory (overrides output.dir and OQS_OUT)");
    run->add_option("--jobs", jobs, "Concurrent sweep points")->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "Seed for randomized property checks (overrides the config)");

    auto* cmp = app.add_subcommand("compare", "Compare the L and L' descriptions for a toy config");
    cmp->add_option("config", config, "Scenario config (JSON)")->required();
    cmp->add_option("--out", out, "Output directory (overrides output.dir and OQS_OUT)");

    std::vector<int> only;
    std::uint64_t check_seed = 20240611;
    auto* chk = app.add_subcommand("check", "Run the built-in acceptance suite");
    chk->add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, checks::check_count));
    chk->add_option("--seed", check_seed, "Seed for the randomized structural checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (*run) return cmd_run(config, out, jobs, seed);
        if (*cmp) return cmd_compare(config, out);
        return cmd_check(only, check_seed);
    } catch (...) {
        std::string msg;
        const int code = classify(std::current_exception(), msg);
        std::fprintf(stderr, "oqs: %s\n", msg.c_str());
        return code;
    }
}
