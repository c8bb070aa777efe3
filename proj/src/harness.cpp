#include "mcbrl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace mcbrl {

namespace {

std::uint64_t name_hash(std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t kBootstrapLabel = 0xb0075;

} // namespace

void Hyperparameters::apply(AgentConfig& cfg) const {
    if (epsilon0) cfg.epsilon0 = *epsilon0;
    if (delta) cfg.delta = *delta;
    if (samples) cfg.samples = *samples;
    if (eta0) cfg.eta0 = *eta0;
}

void to_json(nlohmann::json& j, const Hyperparameters& hp) {
    j = nlohmann::json::object();
    if (hp.epsilon0) j["epsilon0"] = *hp.epsilon0;
    if (hp.delta) j["delta"] = *hp.delta;
    if (hp.samples) j["samples"] = *hp.samples;
    if (hp.eta0) j["eta0"] = *hp.eta0;
}

void from_json(const nlohmann::json& j, Hyperparameters& hp) {
    hp = {};
    if (j.contains("epsilon0")) hp.epsilon0 = j.at("epsilon0").get<double>();
    if (j.contains("delta")) hp.delta = j.at("delta").get<double>();
    if (j.contains("samples")) hp.samples = j.at("samples").get<int>();
    if (j.contains("eta0")) hp.eta0 = j.at("eta0").get<double>();
}

std::vector<std::string> tuned_parameters(std::string_view agent) {
    if (agent == "qlambda") return {"epsilon0", "eta0"};
    if (agent == "ucrl") return {"delta"};
    if (agent == "mcbrl" || agent == "umcbrl") return {"samples"};
    if (agent == "bgbrl" || agent == "dgbrl" || agent == "tdgbrl") return {"eta0"};
    if (agent == "thompson") return {};
    throw std::invalid_argument("unknown agent '" + std::string(agent) + "'");
}

std::vector<Hyperparameters> HyperGrid::points(std::string_view agent) const {
    std::vector<Hyperparameters> out{Hyperparameters{}};
    for (const auto& param : tuned_parameters(agent)) {
        std::vector<Hyperparameters> next;
        auto expand = [&](const auto& values, auto setter) {
            if (values.empty()) throw std::invalid_argument("empty grid for " + param);
            for (const auto& base : out) {
                for (const auto& v : values) {
                    Hyperparameters hp = base;
                    setter(hp, v);
                    next.push_back(hp);
                }
            }
        };
        if (param == "epsilon0") expand(epsilon0, [](Hyperparameters& h, double v) { h.epsilon0 = v; });
        if (param == "delta") expand(delta, [](Hyperparameters& h, double v) { h.delta = v; });
        if (param == "samples") expand(samples, [](Hyperparameters& h, int v) { h.samples = v; });
        if (param == "eta0") expand(eta0, [](Hyperparameters& h, double v) { h.eta0 = v; });
        out = std::move(next);
    }
    return out;
}

void ExperimentConfig::validate() const {
    if (runs_tuning < 1 || runs_eval < 1 || horizon < 1 || bootstrap_resamples < 1 || smoothing_window < 1) {
        throw std::invalid_argument("experiment counts must be positive");
    }
    if (!(discount > 0.0 && discount < 1.0)) throw std::invalid_argument("discount must lie in (0, 1)");
    if (workers < 1) throw std::invalid_argument("workers must be positive");
    if (grid.points(agent).empty()) throw std::invalid_argument("empty hyperparameter grid");
}

// ---------------------------------------------------------------------------

std::uint64_t run_seed(std::uint64_t master, Phase phase, std::string_view domain, int index) {
    return derive_seed(master, static_cast<std::uint64_t>(phase), name_hash(domain),
                       static_cast<std::uint64_t>(index));
}

std::uint64_t environment_seed(std::uint64_t run_seed) { return derive_seed(run_seed, 1); }
std::uint64_t agent_seed(std::uint64_t run_seed) { return derive_seed(run_seed, 2); }

RunRecord run_once(const DomainSpec& domain, std::string_view agent_name, const AgentConfig& cfg, int horizon,
                   std::uint64_t seed) {
    using clock = std::chrono::steady_clock;
    RunRecord rec;
    rec.seed = seed;
    rec.rewards.reserve(std::size_t(horizon));
    clock::duration busy{};
    try {
        Rng env_rng(environment_seed(seed));
        Rng agent_rng(agent_seed(seed));
        auto env = domain.make_environment();
        auto start = clock::now();
        auto agent = make_agent(agent_name, domain.n_states, domain.n_actions, cfg);
        busy += clock::now() - start;
        int s = env->reset(env_rng);
        for (int t = 0; t < horizon; ++t) {
            start = clock::now();
            const int a = agent->act(s, agent_rng);
            busy += clock::now() - start;
            const Transition tr = env->step(a, env_rng);
            start = clock::now();
            agent->observe(tr, agent_rng);
            busy += clock::now() - start;
            rec.rewards.push_back(tr.r);
            s = tr.s_next;
        }
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
    }
    rec.total = std::accumulate(rec.rewards.begin(), rec.rewards.end(), 0.0);
    rec.seconds = std::chrono::duration<double>(busy).count();
    return rec;
}

void parallel_for(int n, int workers, const std::function<void(int)>& body) {
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const int count = std::min(workers, n);
    pool.reserve(std::size_t(count));
    for (int w = 0; w < count; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

namespace {

AgentConfig configured(const ExperimentConfig& cfg, const Hyperparameters& hp) {
    AgentConfig agent = cfg.agent_config;
    agent.discount = cfg.discount;
    hp.apply(agent);
    return agent;
}

void warn_failures(const ExperimentConfig& cfg, std::span<const RunRecord> records, const char* phase) {
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].failed) {
            std::cerr << "warning: " << phase << " run " << i << " of " << cfg.agent << " on " << cfg.domain
                      << " failed and is excluded: " << records[i].error << '\n';
        }
    }
}

} // namespace

TuningResult tune(const ExperimentConfig& cfg) {
    cfg.validate();
    const DomainSpec domain = make_domain(cfg.domain, cfg.discount, cfg.domain_params);
    TuningResult result;
    result.points = cfg.grid.points(cfg.agent);
    const int n_points = int(result.points.size());
    std::vector<RunRecord> records(std::size_t(n_points) * cfg.runs_tuning);
    parallel_for(int(records.size()), cfg.workers, [&](int job) {
        const int point = job / cfg.runs_tuning;
        const int run = job % cfg.runs_tuning;
        records[job] = run_once(domain, cfg.agent, configured(cfg, result.points[point]), cfg.horizon,
                                run_seed(cfg.seed, Phase::tuning, cfg.domain, run));
        records[job].hyperparameters = result.points[point];
    });
    warn_failures(cfg, records, "tuning");

    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_index = 0;
    for (int p = 0; p < n_points; ++p) {
        double sum = 0.0;
        bool failed = false;
        for (int r = 0; r < cfg.runs_tuning; ++r) {
            const auto& rec = records[std::size_t(p) * cfg.runs_tuning + r];
            failed = failed || rec.failed;
            sum += rec.total;
        }
        // a grid point with a failed (diverged) run cannot be chosen
        const double mean = failed ? -std::numeric_limits<double>::infinity() : sum / cfg.runs_tuning;
        result.mean_totals.push_back(mean);
        if (mean > best) {
            best = mean;
            best_index = std::size_t(p);
        }
    }
    result.best = result.points[best_index];
    return result;
}

std::vector<RunRecord> evaluate(const ExperimentConfig& cfg, const Hyperparameters& hp) {
    cfg.validate();
    const DomainSpec domain = make_domain(cfg.domain, cfg.discount, cfg.domain_params);
    const AgentConfig agent = configured(cfg, hp);
    std::vector<RunRecord> records(std::size_t(cfg.runs_eval));
    parallel_for(cfg.runs_eval, cfg.workers, [&](int i) {
        records[i] = run_once(domain, cfg.agent, agent, cfg.horizon, run_seed(cfg.seed, Phase::evaluation, cfg.domain, i));
        records[i].hyperparameters = hp;
    });
    warn_failures(cfg, records, "evaluation");
    return records;
}

// ---------------------------------------------------------------------------

ConfidenceInterval bootstrap_ci(std::span<const double> values, int resamples, double level, Rng& rng) {
    if (values.empty()) throw std::invalid_argument("bootstrap_ci: empty input");
    if (resamples < 1) throw std::invalid_argument("bootstrap_ci: resamples must be positive");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap_ci: level must lie in (0, 1)");
    const int n = int(values.size());
    ConfidenceInterval ci;
    ci.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;

    std::vector<double> means(static_cast<std::size_t>(resamples));
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (auto& m : means) {
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += values[pick(rng)];
        m = sum / n;
    }
    std::sort(means.begin(), means.end());
    auto quantile = [&](double q) {
        const double pos = q * (resamples - 1);
        const auto lo = std::size_t(std::floor(pos));
        const auto hi = std::min(lo + 1, means.size() - 1);
        return means[lo] + (pos - double(lo)) * (means[hi] - means[lo]);
    };
    ci.lower = std::min(quantile((1.0 - level) / 2.0), ci.mean);
    ci.upper = std::max(quantile((1.0 + level) / 2.0), ci.mean);
    return ci;
}

std::vector<double> smooth_curve(std::span<const RunRecord> records, int window) {
    if (window < 1) throw std::invalid_argument("smooth_curve: window must be positive");
    std::size_t horizon = 0;
    int used = 0;
    for (const auto& r : records) {
        if (r.failed) continue;
        horizon = std::max(horizon, r.rewards.size());
    }
    std::vector<double> mean(horizon, 0.0);
    for (const auto& r : records) {
        if (r.failed) continue;
        if (r.rewards.size() != horizon) throw std::invalid_argument("smooth_curve: runs of different length");
        for (std::size_t t = 0; t < horizon; ++t) mean[t] += r.rewards[t];
        ++used;
    }
    if (used > 0) {
        for (double& m : mean) m /= used;
    }
    std::vector<double> out(horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
        const std::size_t width = std::min<std::size_t>(std::size_t(window), t + 1);
        double sum = 0.0;
        for (std::size_t i = t + 1 - width; i <= t; ++i) sum += mean[i];
        out[t] = sum / double(width);
    }
    return out;
}

std::vector<double> successful_totals(std::span<const RunRecord> records) {
    std::vector<double> totals;
    for (const auto& r : records) {
        if (!r.failed) totals.push_back(r.total);
    }
    return totals;
}

Summary summarize(const ExperimentConfig& cfg, const Hyperparameters& hp, std::span<const RunRecord> records) {
    Summary s;
    s.domain = cfg.domain;
    s.agent = cfg.agent;
    s.hyperparameters = hp;
    s.runs = int(records.size());
    for (const auto& r : records) {
        s.cpu_seconds += r.seconds;
        s.failed += r.failed ? 1 : 0;
    }
    const auto totals = successful_totals(records);
    if (!totals.empty()) {
        Rng rng(derive_seed(cfg.seed, kBootstrapLabel, name_hash(cfg.domain), name_hash(cfg.agent)));
        s.ci = bootstrap_ci(totals, cfg.bootstrap_resamples, 0.95, rng);
    }
    return s;
}

void to_json(nlohmann::json& j, const Summary& s) {
    j = nlohmann::json{{"domain", s.domain},
                       {"agent", s.agent},
                       {"hyperparameters", s.hyperparameters},
                       {"lower95", s.ci.lower},
                       {"mean", s.ci.mean},
                       {"upper95", s.ci.upper},
                       {"cpu_seconds", s.cpu_seconds},
                       {"runs", s.runs},
                       {"failed", s.failed}};
}

void from_json(const nlohmann::json& j, Summary& s) {
    s.domain = j.at("domain").get<std::string>();
    s.agent = j.at("agent").get<std::string>();
    s.hyperparameters = j.at("hyperparameters").get<Hyperparameters>();
    s.ci = {j.at("lower95").get<double>(), j.at("mean").get<double>(), j.at("upper95").get<double>()};
    s.cpu_seconds = j.at("cpu_seconds").get<double>();
    s.runs = j.at("runs").get<int>();
    s.failed = j.at("failed").get<int>();
}

// ---------------------------------------------------------------------------

std::string format_number(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

} // namespace

std::string curve_svg(std::span<const double> curve, const std::string& title) {
    constexpr double width = 800, height = 400, margin = 50;
    double lo = 0.0, hi = 1.0;
    if (!curve.empty()) {
        lo = *std::min_element(curve.begin(), curve.end());
        hi = *std::max_element(curve.begin(), curve.end());
    }
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double n = std::max<double>(1.0, double(curve.size()) - 1.0);
    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << width / 2 << "\" y=\"25\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
        << xml_escape(title) << "</text>\n"
        << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin << "\" y2=\""
        << height - margin << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\"" << height - margin
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << margin - 5 << "\" y=\"" << margin << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
        << format_number(hi) << "</text>\n"
        << "<text x=\"" << margin - 5 << "\" y=\"" << height - margin << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
        << format_number(lo) << "</text>\n"
        << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 15
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << curve.size() << "</text>\n"
        << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1\" points=\"";
    char buf[64];
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const double x = margin + (width - 2 * margin) * double(i) / n;
        const double y = height - margin - (height - 2 * margin) * (curve[i] - lo) / (hi - lo);
        std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", x, y);
        svg << buf;
    }
    svg << "\"/>\n</svg>\n";
    return svg.str();
}

ResultFiles emit_results(const std::filesystem::path& root, const Summary& summary,
                         std::span<const RunRecord> records, std::span<const double> curve) {
    const auto dir = root / summary.domain / summary.agent;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

    ResultFiles files{dir / "runs.csv", dir / "summary.json", dir / "curve.csv", dir / "curve.svg"};

    std::ostringstream runs;
    runs << "run,seed,total,seconds,failed\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        runs << i << ',' << records[i].seed << ',' << format_number(records[i].total) << ','
             << format_number(records[i].seconds) << ',' << (records[i].failed ? 1 : 0) << '\n';
    }
    write_file(files.runs_csv, runs.str());

    write_file(files.summary_json, nlohmann::json(summary).dump(2) + "\n");

    std::ostringstream csv;
    csv << "step,reward\n";
    for (std::size_t t = 0; t < curve.size(); ++t) csv << t + 1 << ',' << format_number(curve[t]) << '\n';
    write_file(files.curve_csv, csv.str());

    write_file(files.curve_svg, curve_svg(curve, summary.agent + " on " + summary.domain));
    return files;
}

} // namespace mcbrl
