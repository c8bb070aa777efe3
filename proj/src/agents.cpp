#include "mcbrl/agents.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace mcbrl {

PlanningAgent::PlanningAgent(int n_states, int n_actions, const AgentConfig& cfg)
    : cfg_(cfg), belief_(n_states, n_actions, cfg.prior),
      schedule_{cfg.switch_base, cfg.switch_increment}, plan_(n_states, n_actions) {
    if (cfg.samples < 1) throw std::invalid_argument("samples must be at least 1");
    if (cfg.switch_base < 1 || cfg.switch_increment < 1) {
        throw std::invalid_argument("switch schedule constants must be positive");
    }
}

int PlanningAgent::act(int s, Rng& rng) {
    if (schedule_.due(t_)) {
        replan(rng);
        schedule_.advance(t_);
        ++replans_;
    }
    return choose(s, rng);
}

void PlanningAgent::observe(const Transition& t, Rng&) {
    belief_.update(t);
    ++t_;
}

void UmcbrlAgent::replan(Rng& rng) {
    plan_ = umcbrl_plan(belief_, cfg_.samples, cfg_.discount, cfg_.solver_tol, rng);
}

void ThompsonAgent::replan(Rng& rng) {
    plan_ = value_iteration(sample_mdp(belief_, cfg_.discount, rng), cfg_.solver_tol);
}

McbrlAgent::McbrlAgent(int n_states, int n_actions, const AgentConfig& cfg)
    : PlanningAgent(n_states, n_actions, cfg), policy_(StationaryPolicy::uniform(n_states, n_actions)) {}

void McbrlAgent::replan(Rng& rng) {
    auto plan = mcbrl_plan(belief_, cfg_.samples, cfg_.discount, cfg_.solver_tol, rng);
    policy_ = std::move(plan.policy);
    plan_ = std::move(plan.q);
}

int McbrlAgent::choose(int s, Rng&) { return policy_.mode(s); }

// ---------------------------------------------------------------------------

UcrlAgent::UcrlAgent(int n_states, int n_actions, const AgentConfig& cfg)
    : cfg_(cfg), stats_(n_states, n_actions), schedule_{cfg.switch_base, cfg.switch_increment},
      plan_(n_states, n_actions) {
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
}

int UcrlAgent::act(int s, Rng& rng) {
    if (schedule_.due(t_)) {
        plan_ = ucrl_plan(stats_, cfg_.delta, cfg_.discount, cfg_.solver_tol);
        schedule_.advance(t_);
    }
    return argmax_random(plan_.row(s), rng);
}

void UcrlAgent::observe(const Transition& t, Rng&) {
    stats_.observe(t);
    ++t_;
}

// ---------------------------------------------------------------------------

QLambdaAgent::QLambdaAgent(int n_states, int n_actions, const AgentConfig& cfg)
    : cfg_(cfg), steps_{cfg.eta0, cfg.step_decay}, q_(n_states, n_actions), traces_(n_states, n_actions) {
    if (!(cfg.epsilon0 > 0.0 && cfg.epsilon0 <= 1.0)) throw std::invalid_argument("epsilon0 must lie in (0, 1]");
    if (!(cfg.eta0 > 0.0)) throw std::invalid_argument("eta0 must be positive");
}

double QLambdaAgent::epsilon() const noexcept {
    return cfg_.epsilon0 / (1.0 + double(t_) / cfg_.epsilon_horizon);
}

int QLambdaAgent::act(int s, Rng& rng) {
    const bool explore = uniform01(rng) < epsilon();
    const int a = explore ? uniform_index(rng, q_.n_actions()) : argmax_random(q_.row(s), rng);
    // Watkins: credit does not flow back through exploratory actions
    if (q_(s, a) < q_.max(s)) std::fill(traces_.values().begin(), traces_.values().end(), 0.0);
    return a;
}

void QLambdaAgent::observe(const Transition& t, Rng&) {
    const double td = t.r + cfg_.discount * q_.max(t.s_next) - q_(t.s, t.a);
    const double decay = cfg_.discount * cfg_.lambda;
    for (double& e : traces_.values()) e *= decay;
    for (double& e : traces_.row(t.s)) e = 0.0;
    traces_(t.s, t.a) = 1.0;

    const double eta = steps_.at(t_);
    auto q = q_.values();
    auto e = traces_.values();
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += eta * td * e[i];
    ++t_;
}

// ---------------------------------------------------------------------------

GradientAgent::GradientAgent(int n_states, int n_actions, const AgentConfig& cfg)
    : cfg_(cfg), belief_(n_states, n_actions, cfg.prior), steps_{cfg.eta0, cfg.step_decay},
      theta_(n_states, n_actions) {
    if (!(cfg.eta0 > 0.0)) throw std::invalid_argument("eta0 must be positive");
}

int GradientAgent::act(int s, Rng& rng) { return argmax_random(theta_.row(s), rng); }

void GradientAgent::observe(const Transition& t, Rng& rng) {
    belief_.update(t);
    update_parameters(t, steps_.at(k_), rng);
    ++k_;
    ++t_;
    if (!theta_.all_finite()) {
        throw std::runtime_error(std::string(name()) + ": parameters diverged at step " + std::to_string(t_));
    }
}

void DgbrlAgent::update_parameters(const Transition&, double eta, Rng& rng) {
    if (cfg_.dgbrl_target == DgbrlTarget::policy) {
        const auto pol = greedy_policy(theta_, rng);
        theta_ = dgbrl_update(theta_, belief_, DgbrlTarget::policy, &pol, eta, cfg_.discount, cfg_.solver_tol, rng);
    } else {
        theta_ = dgbrl_update(theta_, belief_, DgbrlTarget::optimal, nullptr, eta, cfg_.discount, cfg_.solver_tol, rng);
    }
}

void TdGradientAgent::update_parameters(const Transition& t, double eta, Rng& rng) {
    const auto pol = greedy_policy(theta_, rng);
    theta_ = td_gradient_update(theta_, belief_, pol, t.s, eta, cfg_.discount, rng);
}

void BgbrlAgent::update_parameters(const Transition& t, double eta, Rng& rng) {
    bgbrl_step(theta_, draw_bellman_sample(belief_, t.s, t.a, rng), eta, cfg_.discount, rng);
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& agent_names() {
    static const std::vector<std::string> names{"qlambda", "ucrl",   "mcbrl",  "umcbrl",
                                                "dgbrl",   "tdgbrl", "bgbrl", "thompson"};
    return names;
}

std::unique_ptr<Agent> make_agent(std::string_view name, int n_states, int n_actions, const AgentConfig& cfg) {
    if (name == "qlambda") return std::make_unique<QLambdaAgent>(n_states, n_actions, cfg);
    if (name == "ucrl") return std::make_unique<UcrlAgent>(n_states, n_actions, cfg);
    if (name == "mcbrl") return std::make_unique<McbrlAgent>(n_states, n_actions, cfg);
    if (name == "umcbrl") return std::make_unique<UmcbrlAgent>(n_states, n_actions, cfg);
    if (name == "dgbrl") return std::make_unique<DgbrlAgent>(n_states, n_actions, cfg);
    if (name == "tdgbrl") return std::make_unique<TdGradientAgent>(n_states, n_actions, cfg);
    if (name == "bgbrl") return std::make_unique<BgbrlAgent>(n_states, n_actions, cfg);
    if (name == "thompson") return std::make_unique<ThompsonAgent>(n_states, n_actions, cfg);
    throw std::invalid_argument("unknown agent '" + std::string(name) + "'");
}

} // namespace mcbrl
