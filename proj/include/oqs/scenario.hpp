// scenario.hpp — declarative scenario configs, the scenario runner and its artifacts

#pragma once

#include "oqs/brem.hpp"
#include "oqs/experiments.hpp"
#include "oqs/kernels.hpp"
#include "oqs/toy_model.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace oqs::scenario {

using json = nlohmann::ordered_json;

enum class Kind {
    toy_L,
    toy_Lprime,
    toy_oracle_exact,
    toy_equivalence,
    toy_inequivalence,
    kernel_checks,
    brem_dynamics,
    brem_moments,
    brem_decoherence
};

std::string to_string(Kind k);
Kind kind_from_string(const std::string& name); // ConfigError on unknown names
bool is_toy(Kind k);

// Scenario-specific knobs ("run" table); unset optionals take per-scenario defaults.
struct RunSpec {
    std::optional<double> t_end;
    bool density = true;                  // toy-L / toy-Lprime: also integrate rho on grid1
    std::vector<double> times;            // toy-equivalence sample times
    double broad_width = 2.0;             // toy-inequivalence position-coherence state
    double narrow_width = 0.5;            // toy-inequivalence momentum-coherence state
    std::vector<double> cos_eps;          // kernel-checks: eps values for the cosine limit
    std::vector<double> sine_eps;         // kernel-checks: eps ladder for the sine remainder
    double tau_max_eps = 20.0;            // kernel-checks: kernel samples on [0, tau_max_eps * eps]
    int tau_points = 401;
    int fock_dim = 0;                     // brem scenarios
    std::optional<double> delta_x;        // brem-dynamics cat separation
    std::vector<double> widths;           // brem-decoherence separations in ground-state widths
    std::optional<brem::BremMoments> initial_moments; // brem-moments
};

struct OutputSpec {
    std::string dir; // empty: decided by the caller (--out, OQS_OUT)
    bool csv = true, json = true;
    int sample_every = 1;
};

struct ScenarioConfig {
    Kind kind = Kind::toy_L;
    toy::ToyParams toy;
    toy::InitialStateSpec state;
    experiments::GridSpec grid1, grid2;
    kernels::KernelParams kernel;
    brem::BremFlags flags;
    RunSpec run;
    double step = 0.01;
    OutputSpec output;
    std::uint64_t seed = 0;
};

// Strict parsing: unknown keys, tables the scenario does not use, wrong
// types and non-physical values all raise ConfigError.
ScenarioConfig parse_config(const json& j);
json read_json_file(const std::string& path); // ConfigError if unreadable / malformed

// A config with a top-level "sweep" table ({"table.key": [values...]}) expands
// to the cartesian product of its values; without one it yields itself.
struct SweepPoint {
    std::string label; // subdirectory name ("" when there is no sweep)
    json assignment;   // {"table.key": value, ...}
    ScenarioConfig config;
};
std::vector<SweepPoint> expand_sweep(const json& j);

// Resolved configuration (defaults filled in), echoed into summary.json.
json echo(const ScenarioConfig& c);

struct Assertion {
    std::string name;
    int criterion = 0; // acceptance criterion this assertion reproduces
    bool passed = false;
    double value = 0.0;
    double tolerance = 0.0;
    std::string rule; // how value is compared with tolerance
};

struct Trajectory {
    std::vector<std::string> columns; // first column is "t"
    std::vector<std::vector<double>> rows;

    void add_row(std::vector<double> row);
};

struct ScenarioResult {
    Trajectory trajectory;
    json metrics = json::object();
    std::vector<Assertion> assertions;
    std::vector<std::string> advisories;

    bool passed() const;
};

// Throws NumericalFailure when the trajectory holds NaN/Inf.
ScenarioResult run_scenario(const ScenarioConfig& c);
// L vs L′ master equations and exact propagation for both initial-state choices.
ScenarioResult compare_representations(const ScenarioConfig& c);

// Writes <stem>.csv and/or summary-style <stem>.json into dir.
void write_artifacts(const ScenarioConfig& c, const ScenarioResult& r, const std::filesystem::path& dir,
                     const std::string& csv_name = "trajectory.csv", const std::string& json_name = "summary.json");

// %.17g
std::string format_number(double v);

} // namespace oqs::scenario
