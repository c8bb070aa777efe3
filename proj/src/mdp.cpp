#include "mcbrl/mdp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mcbrl {

QTable::QTable(int n_states, int n_actions, double fill)
    : n_states_(n_states), n_actions_(n_actions),
      values_(std::size_t(n_states) * std::size_t(n_actions), fill) {
    if (n_states <= 0 || n_actions <= 0) {
        throw std::invalid_argument("QTable: dimensions must be positive");
    }
}

double QTable::max(int s) const {
    auto r = row(s);
    return *std::max_element(r.begin(), r.end());
}

bool QTable::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double sup_distance(const QTable& a, const QTable& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("sup_distance: shape mismatch");
    double d = 0.0;
    auto va = a.values();
    auto vb = b.values();
    for (std::size_t i = 0; i < va.size(); ++i) d = std::max(d, std::abs(va[i] - vb[i]));
    return d;
}

// ---------------------------------------------------------------------------

StationaryPolicy::StationaryPolicy(int n_states, int n_actions)
    : n_states_(n_states), n_actions_(n_actions),
      probs_(std::size_t(n_states) * std::size_t(n_actions), 0.0) {
    if (n_states <= 0 || n_actions <= 0) {
        throw std::invalid_argument("StationaryPolicy: dimensions must be positive");
    }
}

StationaryPolicy StationaryPolicy::deterministic(int n_actions, std::span<const int> actions) {
    StationaryPolicy pol(int(actions.size()), n_actions);
    for (int s = 0; s < pol.n_states(); ++s) {
        if (actions[s] < 0 || actions[s] >= n_actions) {
            throw std::out_of_range("StationaryPolicy: action index out of range");
        }
        pol(s, actions[s]) = 1.0;
    }
    return pol;
}

StationaryPolicy StationaryPolicy::uniform(int n_states, int n_actions) {
    StationaryPolicy pol(n_states, n_actions);
    std::fill(pol.probs_.begin(), pol.probs_.end(), 1.0 / n_actions);
    return pol;
}

int StationaryPolicy::sample(int s, Rng& rng) const {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (int a = 0; a < n_actions_; ++a) {
        acc += (*this)(s, a);
        if (u < acc) return a;
    }
    // rounding: fall back to the last action with positive mass
    for (int a = n_actions_ - 1; a >= 0; --a) {
        if ((*this)(s, a) > 0.0) return a;
    }
    return n_actions_ - 1;
}

int StationaryPolicy::mode(int s) const {
    return argmax_first({probs_.data() + std::size_t(s) * n_actions_, std::size_t(n_actions_)});
}

void StationaryPolicy::validate() const {
    for (int s = 0; s < n_states_; ++s) {
        double sum = 0.0;
        for (int a = 0; a < n_actions_; ++a) {
            const double p = (*this)(s, a);
            if (!(p >= 0.0)) throw std::invalid_argument("StationaryPolicy: negative probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw std::invalid_argument("StationaryPolicy: row " + std::to_string(s) +
                                        " does not sum to 1");
        }
    }
}

// ---------------------------------------------------------------------------

FiniteMdp::FiniteMdp(int n_states, int n_actions, std::vector<double> transition,
                     std::vector<double> reward_mean, double discount, double reward_sd)
    : n_states_(n_states), n_actions_(n_actions), transition_(std::move(transition)),
      reward_mean_(std::move(reward_mean)), discount_(discount), reward_sd_(reward_sd) {
    if (n_states <= 0 || n_actions <= 0) {
        throw std::invalid_argument("FiniteMdp: dimensions must be positive");
    }
    const std::size_t sa = std::size_t(n_states) * n_actions;
    if (transition_.size() != sa * n_states) {
        throw std::invalid_argument("FiniteMdp: transition tensor has wrong size");
    }
    if (reward_mean_.size() != sa) {
        throw std::invalid_argument("FiniteMdp: reward table has wrong size");
    }
    if (!(discount >= 0.0 && discount < 1.0)) {
        throw std::invalid_argument("FiniteMdp: discount must lie in [0, 1)");
    }
    if (!(reward_sd >= 0.0)) throw std::invalid_argument("FiniteMdp: negative reward_sd");
    for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < n_actions; ++a) {
            double sum = 0.0;
            for (double p : transition_row(s, a)) {
                if (!(p >= 0.0)) throw std::invalid_argument("FiniteMdp: negative probability");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                throw std::invalid_argument("FiniteMdp: transition row (" + std::to_string(s) +
                                            "," + std::to_string(a) + ") does not sum to 1");
            }
            if (!std::isfinite(reward(s, a))) {
                throw std::invalid_argument("FiniteMdp: non-finite reward");
            }
        }
    }
}

double FiniteMdp::min_reward() const {
    return *std::min_element(reward_mean_.begin(), reward_mean_.end());
}

double FiniteMdp::max_reward() const {
    return *std::max_element(reward_mean_.begin(), reward_mean_.end());
}

FiniteMdp FiniteMdp::with_discount(double discount) const {
    return FiniteMdp(n_states_, n_actions_, transition_, reward_mean_, discount, reward_sd_);
}

void FiniteMdp::check_state(int s) const {
    if (s < 0 || s >= n_states_) {
        throw std::out_of_range("state index " + std::to_string(s) + " out of range");
    }
}

void FiniteMdp::check_action(int a) const {
    if (a < 0 || a >= n_actions_) {
        throw std::out_of_range("action index " + std::to_string(a) + " out of range");
    }
}

// ---------------------------------------------------------------------------

int sample_next_state(std::span<const double> row, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) {
        acc += row[i];
        if (u < acc) return int(i);
    }
    for (std::size_t i = row.size(); i-- > 0;) {
        if (row[i] > 0.0) return int(i);
    }
    return int(row.size()) - 1;
}

Transition step(const FiniteMdp& mdp, int s, int a, Rng& rng) {
    mdp.check_state(s);
    mdp.check_action(a);
    Transition t{s, a, mdp.reward(s, a), 0};
    t.s_next = sample_next_state(mdp.transition_row(s, a), rng);
    if (mdp.reward_sd() > 0.0) {
        t.r += std::normal_distribution<double>(0.0, mdp.reward_sd())(rng);
    }
    return t;
}

namespace {

void check_shape(const FiniteMdp& mdp, const QTable& q) {
    if (q.n_states() != mdp.n_states() || q.n_actions() != mdp.n_actions()) {
        throw std::invalid_argument("QTable shape does not match MDP");
    }
}

std::vector<double> state_max(const QTable& q) {
    std::vector<double> v(q.n_states());
    for (int s = 0; s < q.n_states(); ++s) v[s] = q.max(s);
    return v;
}

QTable backup_with_values(const FiniteMdp& mdp, std::span<const double> v) {
    QTable out(mdp.n_states(), mdp.n_actions());
    const double gamma = mdp.discount();
    for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            auto row = mdp.transition_row(s, a);
            double ev = 0.0;
            for (int s2 = 0; s2 < mdp.n_states(); ++s2) ev += row[s2] * v[s2];
            out(s, a) = mdp.reward(s, a) + gamma * ev;
        }
    }
    return out;
}

// Policy improvement that keeps the incumbent action unless another one is
// strictly better, so policy iteration terminates despite rounding.
bool improve(const QTable& q, std::vector<int>& actions) {
    bool changed = false;
    for (int s = 0; s < q.n_states(); ++s) {
        const int best = argmax_first(q.row(s));
        const double scale = std::max(1.0, std::abs(q(s, best)));
        if (q(s, best) > q(s, actions[s]) + 1e-12 * scale) {
            actions[s] = best;
            changed = true;
        }
    }
    return changed;
}

} // namespace

QTable bellman_optimal_backup(const FiniteMdp& mdp, const QTable& q) {
    check_shape(mdp, q);
    const auto v = state_max(q);
    return backup_with_values(mdp, v);
}

QTable bellman_policy_backup(const FiniteMdp& mdp, const StationaryPolicy& pol, const QTable& q) {
    check_shape(mdp, q);
    if (pol.n_states() != mdp.n_states() || pol.n_actions() != mdp.n_actions()) {
        throw std::invalid_argument("policy shape does not match MDP");
    }
    std::vector<double> v(mdp.n_states(), 0.0);
    for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) v[s] += pol(s, a) * q(s, a);
    }
    return backup_with_values(mdp, v);
}

QTable value_iteration_plain(const FiniteMdp& mdp, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be positive");
    const double gamma = mdp.discount();
    QTable q(mdp.n_states(), mdp.n_actions());
    if (gamma == 0.0) return bellman_optimal_backup(mdp, q);
    const double threshold = tol * (1.0 - gamma) / gamma;
    while (true) {
        QTable next = bellman_optimal_backup(mdp, q);
        const double change = sup_distance(next, q);
        q = std::move(next);
        if (change <= threshold) break;
    }
    return q;
}

QTable value_iteration(const FiniteMdp& mdp, double tol) {
    QTable q = value_iteration_plain(mdp, tol);
    std::vector<int> actions(mdp.n_states());
    for (int s = 0; s < mdp.n_states(); ++s) actions[s] = argmax_first(q.row(s));
    // Howard policy iteration from the (near-optimal) greedy policy.
    for (int it = 0; it < 100; ++it) {
        QTable exact = policy_evaluation(mdp, StationaryPolicy::deterministic(mdp.n_actions(), actions), tol);
        if (!improve(exact, actions)) return exact;
    }
    return q;
}

QTable policy_evaluation(const FiniteMdp& mdp, const StationaryPolicy& pol, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("policy_evaluation: tol must be positive");
    if (pol.n_states() != mdp.n_states() || pol.n_actions() != mdp.n_actions()) {
        throw std::invalid_argument("policy shape does not match MDP");
    }
    const int n = mdp.n_states();
    const double gamma = mdp.discount();
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            const double p = pol(s, a);
            if (p == 0.0) continue;
            rhs(s) += p * mdp.reward(s, a);
            auto row = mdp.transition_row(s, a);
            for (int s2 = 0; s2 < n; ++s2) system(s, s2) -= gamma * p * row[s2];
        }
    }
    const Eigen::VectorXd v = system.partialPivLu().solve(rhs);
    return backup_with_values(mdp, std::span<const double>(v.data(), std::size_t(n)));
}

int argmax_first(std::span<const double> values) {
    return int(std::max_element(values.begin(), values.end()) - values.begin());
}

int argmax_random(std::span<const double> values, Rng& rng) {
    const double best = *std::max_element(values.begin(), values.end());
    int ties = 0;
    int first = -1;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] == best) {
            if (first < 0) first = int(i);
            ++ties;
        }
    }
    if (ties == 1) return first;
    int pick = uniform_index(rng, ties);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] == best && pick-- == 0) return int(i);
    }
    return first;
}

StationaryPolicy greedy_policy(const QTable& q, Rng& rng) {
    StationaryPolicy pol(q.n_states(), q.n_actions());
    for (int s = 0; s < q.n_states(); ++s) pol(s, argmax_random(q.row(s), rng)) = 1.0;
    return pol;
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const FiniteMdp& mdp) {
    j = nlohmann::json{
        {"n_states", mdp.n_states()},
        {"n_actions", mdp.n_actions()},
        {"discount", mdp.discount()},
        {"reward_sd", mdp.reward_sd()},
        {"transition", std::vector<double>(mdp.transition_tensor().begin(), mdp.transition_tensor().end())},
        {"reward_mean", std::vector<double>(mdp.reward_table().begin(), mdp.reward_table().end())},
    };
}

FiniteMdp mdp_from_json(const nlohmann::json& j) {
    return FiniteMdp(j.at("n_states").get<int>(), j.at("n_actions").get<int>(),
                     j.at("transition").get<std::vector<double>>(),
                     j.at("reward_mean").get<std::vector<double>>(), j.at("discount").get<double>(),
                     j.value("reward_sd", 0.0));
}

void to_json(nlohmann::json& j, const QTable& q) {
    j = nlohmann::json{{"n_states", q.n_states()},
                       {"n_actions", q.n_actions()},
                       {"values", std::vector<double>(q.values().begin(), q.values().end())}};
}

QTable qtable_from_json(const nlohmann::json& j) {
    QTable q(j.at("n_states").get<int>(), j.at("n_actions").get<int>());
    const auto values = j.at("values").get<std::vector<double>>();
    if (values.size() != q.values().size()) throw std::invalid_argument("QTable json: wrong size");
    std::copy(values.begin(), values.end(), q.values().begin());
    return q;
}

} // namespace mcbrl
