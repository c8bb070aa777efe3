#pragma once

#include "mcbrl/harness.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcbrl {

/// Malformed or missing study configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A config file: several domains and agents sharing one protocol.
struct StudyConfig {
    std::vector<std::string> domains;
    std::vector<std::string> agents;
    ExperimentConfig base;
    std::map<std::string, nlohmann::json> domain_params;
    /// Agents listed here skip tuning in `eval` and `curve`.
    std::map<std::string, Hyperparameters> fixed;

    ExperimentConfig experiment(const std::string& domain, const std::string& agent) const;
};

/// Throws ConfigError on unknown keys, unknown names or invalid values.
StudyConfig study_from_json(const nlohmann::json& j);
StudyConfig load_study(const std::filesystem::path& path);

struct TableRow {
    std::string domain;
    std::string agent;
    Hyperparameters hyperparameters;
    ConfidenceInterval ci;
    double cpu_seconds = 0.0;
    bool best = false;
};

/// Per domain, marks the highest-mean row and every row whose interval
/// overlaps the best row's interval.
void mark_best(std::vector<TableRow>& rows);

std::string table_markdown(const std::vector<TableRow>& rows);
std::string table_csv(const std::vector<TableRow>& rows);

} // namespace mcbrl
