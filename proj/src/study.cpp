#include "mcbrl/study.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace mcbrl {

namespace {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

} // namespace

ExperimentConfig StudyConfig::experiment(const std::string& domain, const std::string& agent) const {
    ExperimentConfig cfg = base;
    cfg.domain = domain;
    cfg.agent = agent;
    if (auto it = domain_params.find(domain); it != domain_params.end()) cfg.domain_params = it->second;
    return cfg;
}

StudyConfig study_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(j,
                   {"domains", "agents", "runs_tuning", "runs_eval", "horizon", "discount", "seed",
                    "bootstrap_resamples", "smoothing_window", "workers", "grid", "prior", "switch",
                    "step_decay", "solver_tol", "lambda", "epsilon_horizon", "dgbrl_target", "domain_params",
                    "hyperparameters"},
                   "config");
    StudyConfig study;
    try {
        study.domains = j.at("domains").get<std::vector<std::string>>();
        study.agents = j.at("agents").get<std::vector<std::string>>();
        auto& b = study.base;
        read(j, "runs_tuning", b.runs_tuning);
        read(j, "runs_eval", b.runs_eval);
        read(j, "horizon", b.horizon);
        read(j, "discount", b.discount);
        read(j, "seed", b.seed);
        read(j, "bootstrap_resamples", b.bootstrap_resamples);
        read(j, "smoothing_window", b.smoothing_window);
        read(j, "workers", b.workers);

        auto& a = b.agent_config;
        read(j, "step_decay", a.step_decay);
        read(j, "solver_tol", a.solver_tol);
        read(j, "lambda", a.lambda);
        read(j, "epsilon_horizon", a.epsilon_horizon);
        if (j.contains("dgbrl_target")) {
            const auto target = j.at("dgbrl_target").get<std::string>();
            if (target == "optimal") a.dgbrl_target = DgbrlTarget::optimal;
            else if (target == "policy") a.dgbrl_target = DgbrlTarget::policy;
            else throw ConfigError("dgbrl_target must be 'optimal' or 'policy'");
        }
        if (j.contains("prior")) {
            const auto& p = j.at("prior");
            reject_unknown(p, {"dirichlet", "mean", "strength", "shape", "rate"}, "prior");
            read(p, "dirichlet", a.prior.dirichlet);
            read(p, "mean", a.prior.mean);
            read(p, "strength", a.prior.strength);
            read(p, "shape", a.prior.shape);
            read(p, "rate", a.prior.rate);
            a.prior.validate();
        }
        if (j.contains("switch")) {
            const auto& s = j.at("switch");
            reject_unknown(s, {"base", "increment"}, "switch");
            read(s, "base", a.switch_base);
            read(s, "increment", a.switch_increment);
        }
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            reject_unknown(g, {"epsilon0", "delta", "samples", "eta0"}, "grid");
            read(g, "epsilon0", b.grid.epsilon0);
            read(g, "delta", b.grid.delta);
            read(g, "samples", b.grid.samples);
            read(g, "eta0", b.grid.eta0);
        }
        if (j.contains("domain_params")) {
            for (const auto& [name, params] : j.at("domain_params").items()) study.domain_params[name] = params;
        }
        if (j.contains("hyperparameters")) {
            for (const auto& [name, hp] : j.at("hyperparameters").items()) {
                reject_unknown(hp, {"epsilon0", "delta", "samples", "eta0"}, "hyperparameters." + name);
                study.fixed[name] = hp.get<Hyperparameters>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    if (study.domains.empty() || study.agents.empty()) throw ConfigError("config needs at least one domain and agent");
    for (const auto& d : study.domains) {
        const auto& known = domain_names();
        if (std::find(known.begin(), known.end(), d) == known.end()) throw ConfigError("unknown domain '" + d + "'");
    }
    for (const auto& a : study.agents) {
        const auto& known = agent_names();
        if (std::find(known.begin(), known.end(), a) == known.end()) throw ConfigError("unknown agent '" + a + "'");
    }
    try {
        for (const auto& a : study.agents) study.experiment(study.domains.front(), a).validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return study;
}

StudyConfig load_study(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
    return study_from_json(j);
}

// ---------------------------------------------------------------------------

void mark_best(std::vector<TableRow>& rows) {
    for (auto& r : rows) r.best = false;
    std::set<std::string> seen;
    for (const auto& row : rows) {
        if (!seen.insert(row.domain).second) continue;
        const TableRow* best = nullptr;
        for (const auto& r : rows) {
            if (r.domain == row.domain && (!best || r.ci.mean > best->ci.mean)) best = &r;
        }
        const ConfidenceInterval top = best->ci;
        for (auto& r : rows) {
            if (r.domain == row.domain && r.ci.upper >= top.lower && r.ci.lower <= top.upper) r.best = true;
        }
    }
}

std::string table_markdown(const std::vector<TableRow>& rows) {
    std::ostringstream out;
    std::string domain;
    for (const auto& r : rows) {
        if (r.domain != domain) {
            if (!domain.empty()) out << '\n';
            domain = r.domain;
            out << "### " << domain << "\n\n"
                << "| agent | lower95 | mean | upper95 | cpu_seconds |\n"
                << "|---|---|---|---|---|\n";
        }
        const std::string name = r.best ? "**" + r.agent + "**" : r.agent;
        out << "| " << name << " | " << format_number(r.ci.lower) << " | " << format_number(r.ci.mean) << " | "
            << format_number(r.ci.upper) << " | " << format_number(r.cpu_seconds) << " |\n";
    }
    return out.str();
}

std::string table_csv(const std::vector<TableRow>& rows) {
    std::ostringstream out;
    out << "domain,agent,lower95,mean,upper95,cpu_seconds,best,hyperparameters\n";
    for (const auto& r : rows) {
        std::string hp = nlohmann::json(r.hyperparameters).dump();
        std::string quoted;
        for (char c : hp) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
        out << r.domain << ',' << r.agent << ',' << format_number(r.ci.lower) << ',' << format_number(r.ci.mean)
            << ',' << format_number(r.ci.upper) << ',' << format_number(r.cpu_seconds) << ',' << (r.best ? 1 : 0)
            << ",\"" << quoted << "\"\n";
    }
    return out.str();
}

} // namespace mcbrl
