#include "cli.hpp"

#include "mcbrl/study.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace mcbrl::cli {

namespace {

struct Options {
    std::string config;
    std::string out = "results";
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string agents;
    std::string domains;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

StudyConfig prepare(const Options& opt) {
    nlohmann::json j;
    {
        std::ifstream in(opt.config);
        if (!in) throw ConfigError("cannot open config " + opt.config);
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("cannot parse " + opt.config + ": " + e.what());
        }
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (opt.seed) j["seed"] = *opt.seed;
    if (opt.workers) j["workers"] = *opt.workers;
    if (!opt.agents.empty()) j["agents"] = split_list(opt.agents);
    if (!opt.domains.empty()) j["domains"] = split_list(opt.domains);
    return study_from_json(j);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

Hyperparameters choose(const StudyConfig& study, const ExperimentConfig& cfg) {
    if (auto it = study.fixed.find(cfg.agent); it != study.fixed.end()) return it->second;
    return tune(cfg).best;
}

int cmd_tune(const StudyConfig& study, const Options& opt, std::ostream& out) {
    for (const auto& domain : study.domains) {
        for (const auto& agent : study.agents) {
            const auto cfg = study.experiment(domain, agent);
            const auto result = tune(cfg);
            nlohmann::json report{{"domain", domain}, {"agent", agent}, {"seed", cfg.seed},
                                  {"runs_tuning", cfg.runs_tuning}, {"best", result.best}};
            auto& grid = report["grid"] = nlohmann::json::array();
            double best_mean = 0.0;
            for (std::size_t i = 0; i < result.points.size(); ++i) {
                grid.push_back({{"hyperparameters", result.points[i]}, {"mean_total", result.mean_totals[i]}});
                if (result.points[i] == result.best) best_mean = result.mean_totals[i];
            }
            write_text(std::filesystem::path(opt.out) / domain / agent / "tuning.json", report.dump(2) + "\n");
            out << domain << '/' << agent << ": " << nlohmann::json(result.best).dump()
                << " mean_total=" << format_number(best_mean) << '\n';
        }
    }
    return kSuccess;
}

enum class Report { eval, table, curve };

int cmd_evaluate(const StudyConfig& study, const Options& opt, std::ostream& out, Report report) {
    std::vector<TableRow> rows;
    for (const auto& domain : study.domains) {
        for (const auto& agent : study.agents) {
            const auto cfg = study.experiment(domain, agent);
            const auto hp = choose(study, cfg);
            const auto records = evaluate(cfg, hp);
            const auto summary = summarize(cfg, hp, records);
            const auto curve = smooth_curve(records, cfg.smoothing_window);
            const auto files = emit_results(opt.out, summary, records, curve);
            rows.push_back({domain, agent, hp, summary.ci, summary.cpu_seconds, false});
            if (report == Report::eval) {
                out << domain << '/' << agent << ": " << nlohmann::json(hp).dump() << " lower95="
                    << format_number(summary.ci.lower) << " mean=" << format_number(summary.ci.mean)
                    << " upper95=" << format_number(summary.ci.upper) << " cpu_seconds="
                    << format_number(summary.cpu_seconds) << " failed=" << summary.failed << '\n';
            } else if (report == Report::curve) {
                out << files.curve_csv.string() << '\n' << files.curve_svg.string() << '\n';
            }
        }
    }
    if (report == Report::table) {
        mark_best(rows);
        const auto md = table_markdown(rows);
        write_text(std::filesystem::path(opt.out) / "table.md", md);
        write_text(std::filesystem::path(opt.out) / "table.csv", table_csv(rows));
        out << md;
    }
    return kSuccess;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Monte-Carlo Bayesian reinforcement learning benchmarks"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "study configuration (JSON)")->required();
        sub->add_option("--out", opt.out, "result directory");
        sub->add_option("--seed", opt.seed, "master seed override");
        sub->add_option("--workers", opt.workers, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--agents", opt.agents, "comma-separated agents overriding the config");
        sub->add_option("--domains", opt.domains, "comma-separated domains overriding the config");
    };
    auto* tune_cmd = app.add_subcommand("tune", "choose hyperparameters on tuning runs");
    auto* eval_cmd = app.add_subcommand("eval", "evaluate agents and write result files");
    auto* table_cmd = app.add_subcommand("table", "tune and evaluate, then print the total-reward table");
    auto* curve_cmd = app.add_subcommand("curve", "write smoothed reward curves");
    for (auto* sub : {tune_cmd, eval_cmd, table_cmd, curve_cmd}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kConfigError;
    }

    StudyConfig study;
    try {
        study = prepare(opt);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    }

    try {
        if (tune_cmd->parsed()) return cmd_tune(study, opt, out);
        if (eval_cmd->parsed()) return cmd_evaluate(study, opt, out, Report::eval);
        if (table_cmd->parsed()) return cmd_evaluate(study, opt, out, Report::table);
        return cmd_evaluate(study, opt, out, Report::curve);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}

} // namespace mcbrl::cli
