#include "mcbrl/agents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcbrl {

double StepSizeSchedule::at(long long k) const noexcept {
    return initial / std::pow(1.0 + double(k), decay);
}

namespace {

void check_sample_count(int samples) {
    if (samples < 1) throw std::invalid_argument("number of posterior samples must be at least 1");
}

std::vector<FiniteMdp> draw_models(const BeliefState& bel, int samples, double discount, Rng& rng) {
    std::vector<FiniteMdp> models;
    models.reserve(std::size_t(samples));
    for (int i = 0; i < samples; ++i) models.push_back(sample_mdp(bel, discount, rng));
    return models;
}

// Summation in model-index order, then one division.
QTable average(std::span<const QTable> tables) {
    QTable sum(tables.front().n_states(), tables.front().n_actions());
    for (const auto& t : tables) {
        auto out = sum.values();
        auto in = t.values();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += in[i];
    }
    const double n = double(tables.size());
    for (double& v : sum.values()) v /= n;
    return sum;
}

} // namespace

QTable mean_optimal_q(std::span<const FiniteMdp> models, double tol) {
    if (models.empty()) throw std::invalid_argument("mean_optimal_q: no models");
    std::vector<QTable> q;
    q.reserve(models.size());
    for (const auto& m : models) q.push_back(value_iteration(m, tol));
    return average(q);
}

QTable umcbrl_plan(const BeliefState& bel, int samples, double discount, double tol, Rng& rng) {
    check_sample_count(samples);
    const auto models = draw_models(bel, samples, discount, rng);
    return mean_optimal_q(models, tol);
}

MultiMdpPlan multi_mdp_policy_iteration(std::span<const FiniteMdp> models, double tol, Rng& rng,
                                        int max_iterations) {
    if (models.empty()) throw std::invalid_argument("multi_mdp_policy_iteration: no models");
    const int ns = models.front().n_states();
    const int na = models.front().n_actions();

    const QTable start = mean_optimal_q(models, tol);
    std::vector<int> actions(ns);
    for (int s = 0; s < ns; ++s) actions[s] = argmax_random(start.row(s), rng);

    auto evaluate = [&](const std::vector<int>& acts) {
        const auto pol = StationaryPolicy::deterministic(na, acts);
        std::vector<QTable> q;
        q.reserve(models.size());
        for (const auto& m : models) q.push_back(policy_evaluation(m, pol, tol));
        return average(q);
    };

    MultiMdpPlan plan{StationaryPolicy::deterministic(na, actions), evaluate(actions), 0};
    for (int it = 1; it <= max_iterations; ++it) {
        plan.iterations = it;
        bool changed = false;
        for (int s = 0; s < ns; ++s) {
            const int best = argmax_first(plan.q.row(s));
            const double scale = std::max(1.0, std::abs(plan.q(s, best)));
            if (plan.q(s, best) > plan.q(s, actions[s]) + 1e-12 * scale) {
                actions[s] = best;
                changed = true;
            }
        }
        if (!changed) break;
        plan.policy = StationaryPolicy::deterministic(na, actions);
        plan.q = evaluate(actions);
    }
    return plan;
}

MultiMdpPlan mcbrl_plan(const BeliefState& bel, int samples, double discount, double tol, Rng& rng) {
    check_sample_count(samples);
    const auto models = draw_models(bel, samples, discount, rng);
    return multi_mdp_policy_iteration(models, tol, rng);
}

} // namespace mcbrl
