#pragma once

#include "mcbrl/agents.hpp"
#include "mcbrl/domains.hpp"
#include "mcbrl/random.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mcbrl {

/// Values of the tuned hyperparameters. Unset fields keep AgentConfig defaults.
struct Hyperparameters {
    std::optional<double> epsilon0;
    std::optional<double> delta;
    std::optional<int> samples;
    std::optional<double> eta0;

    void apply(AgentConfig& cfg) const;
    friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

void to_json(nlohmann::json& j, const Hyperparameters& hp);
void from_json(const nlohmann::json& j, Hyperparameters& hp);

/// Candidate values per tunable hyperparameter.
struct HyperGrid {
    std::vector<double> epsilon0{0.1, 0.3, 1.0};
    std::vector<double> delta{0.1, 0.01, 0.001};
    std::vector<int> samples{2, 4, 8, 16};
    std::vector<double> eta0{0.01, 0.05, 0.2, 0.5};

    /// Cartesian product over the parameters `agent` is tuned on, in grid order.
    /// Agents without tuned parameters get a single empty point.
    std::vector<Hyperparameters> points(std::string_view agent) const;
};

/// Which hyperparameters an agent is tuned on.
std::vector<std::string> tuned_parameters(std::string_view agent);

struct ExperimentConfig {
    std::string domain;
    std::string agent;
    nlohmann::json domain_params = nlohmann::json::object();
    HyperGrid grid;
    int runs_tuning = 10;
    int runs_eval = 1000;
    int horizon = 10000;
    double discount = 0.99;
    std::uint64_t seed = 0;
    int bootstrap_resamples = 10000;
    int smoothing_window = 100;
    int workers = 1;
    AgentConfig agent_config; ///< fixed settings; tuned fields overwritten per point

    /// Throws std::invalid_argument when a count or the discount is out of range.
    void validate() const;
};

struct RunRecord {
    std::uint64_t seed = 0;
    Hyperparameters hyperparameters;
    std::vector<double> rewards;
    double total = 0.0;
    double seconds = 0.0; ///< agent computation only
    bool failed = false;
    std::string error;
};

/// Seed of run `index`. Tuning and evaluation use disjoint derivation labels.
enum class Phase : std::uint64_t { tuning = 0x7475e1, evaluation = 0xe7a1 };
std::uint64_t run_seed(std::uint64_t master, Phase phase, std::string_view domain, int index);

/// Streams derived from a run seed.
std::uint64_t environment_seed(std::uint64_t run_seed);
std::uint64_t agent_seed(std::uint64_t run_seed);

/// One run: fresh agent, fresh initial state, `horizon` act/observe steps.
/// Exceptions are caught and reported through RunRecord::failed.
RunRecord run_once(const DomainSpec& domain, std::string_view agent, const AgentConfig& cfg, int horizon,
                   std::uint64_t seed);

/// Calls body(i) for i in [0, n) on `workers` threads. Results must be written by index.
void parallel_for(int n, int workers, const std::function<void(int)>& body);

/// Mean total reward of each grid point over runs_tuning runs.
struct TuningResult {
    Hyperparameters best;
    std::vector<Hyperparameters> points;
    std::vector<double> mean_totals; ///< -inf when every run of a point failed
};

TuningResult tune(const ExperimentConfig& cfg);

/// runs_eval independent runs with fixed hyperparameters, in run-index order.
std::vector<RunRecord> evaluate(const ExperimentConfig& cfg, const Hyperparameters& hp);

struct ConfidenceInterval {
    double lower = 0.0;
    double mean = 0.0;
    double upper = 0.0;
};

/// Percentile bootstrap of the mean.
ConfidenceInterval bootstrap_ci(std::span<const double> values, int resamples, double level, Rng& rng);

/// Pointwise mean over successful runs followed by a trailing moving average
/// of width min(window, t).
std::vector<double> smooth_curve(std::span<const RunRecord> records, int window);

struct Summary {
    std::string domain;
    std::string agent;
    Hyperparameters hyperparameters;
    ConfidenceInterval ci;
    double cpu_seconds = 0.0;
    int runs = 0;
    int failed = 0;
};

void to_json(nlohmann::json& j, const Summary& s);
void from_json(const nlohmann::json& j, Summary& s);

/// Totals of the successful runs.
std::vector<double> successful_totals(std::span<const RunRecord> records);

Summary summarize(const ExperimentConfig& cfg, const Hyperparameters& hp, std::span<const RunRecord> records);

struct ResultFiles {
    std::filesystem::path runs_csv;
    std::filesystem::path summary_json;
    std::filesystem::path curve_csv;
    std::filesystem::path curve_svg;
};

/// Writes results/<domain>/<agent>/{runs.csv, summary.json, curve.csv, curve.svg}
/// under `root`. Throws std::runtime_error when a file cannot be written.
ResultFiles emit_results(const std::filesystem::path& root, const Summary& summary,
                         std::span<const RunRecord> records, std::span<const double> curve);

/// Self-contained SVG polyline of a curve.
std::string curve_svg(std::span<const double> curve, const std::string& title);

/// Fixed-format number rendering used in every output file.
std::string format_number(double x);

} // namespace mcbrl
