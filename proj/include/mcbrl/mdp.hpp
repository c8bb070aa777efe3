#pragma once

#include "mcbrl/random.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace mcbrl {

/// One (s_t, a_t, r_{t+1}, s_{t+1}) step.
struct Transition {
    int s = 0;
    int a = 0;
    double r = 0.0;
    int s_next = 0;
};

/// |S| x |A| table of reals. Doubles as the tabular parameter vector of the
/// gradient agents (one parameter per state-action pair).
class QTable {
public:
    QTable() = default;
    QTable(int n_states, int n_actions, double fill = 0.0);

    int n_states() const noexcept { return n_states_; }
    int n_actions() const noexcept { return n_actions_; }

    double& operator()(int s, int a) { return values_[index(s, a)]; }
    double operator()(int s, int a) const { return values_[index(s, a)]; }

    std::span<double> row(int s) { return {values_.data() + index(s, 0), std::size_t(n_actions_)}; }
    std::span<const double> row(int s) const {
        return {values_.data() + index(s, 0), std::size_t(n_actions_)};
    }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    double max(int s) const;
    bool all_finite() const noexcept;
    bool same_shape(const QTable& other) const noexcept {
        return n_states_ == other.n_states_ && n_actions_ == other.n_actions_;
    }

    friend bool operator==(const QTable&, const QTable&) = default;

private:
    std::size_t index(int s, int a) const noexcept { return std::size_t(s) * n_actions_ + a; }

    int n_states_ = 0;
    int n_actions_ = 0;
    std::vector<double> values_;
};

/// sup-norm of the entrywise difference.
double sup_distance(const QTable& a, const QTable& b);

/// Memoryless policy: one probability vector over actions per state.
class StationaryPolicy {
public:
    StationaryPolicy() = default;
    StationaryPolicy(int n_states, int n_actions);

    /// Deterministic policy taking actions[s] in state s.
    static StationaryPolicy deterministic(int n_actions, std::span<const int> actions);
    static StationaryPolicy uniform(int n_states, int n_actions);

    int n_states() const noexcept { return n_states_; }
    int n_actions() const noexcept { return n_actions_; }

    double& operator()(int s, int a) { return probs_[std::size_t(s) * n_actions_ + a]; }
    double operator()(int s, int a) const { return probs_[std::size_t(s) * n_actions_ + a]; }

    int sample(int s, Rng& rng) const;
    /// Action with the largest probability (first on ties).
    int mode(int s) const;

    /// Throws std::invalid_argument unless every row is a probability vector.
    void validate() const;

    friend bool operator==(const StationaryPolicy&, const StationaryPolicy&) = default;

private:
    int n_states_ = 0;
    int n_actions_ = 0;
    std::vector<double> probs_;
};

/// Exact finite discounted MDP. Immutable after construction.
///
/// Rewards are attached to state-action pairs. `reward_sd` is the standard
/// deviation of the Gaussian reward noise used when simulating; solvers only
/// look at the means.
class FiniteMdp {
public:
    FiniteMdp(int n_states, int n_actions, std::vector<double> transition,
              std::vector<double> reward_mean, double discount, double reward_sd = 0.0);

    int n_states() const noexcept { return n_states_; }
    int n_actions() const noexcept { return n_actions_; }
    double discount() const noexcept { return discount_; }
    double reward_sd() const noexcept { return reward_sd_; }

    double transition(int s, int a, int s_next) const {
        return transition_[(std::size_t(s) * n_actions_ + a) * n_states_ + s_next];
    }
    std::span<const double> transition_row(int s, int a) const {
        return {transition_.data() + (std::size_t(s) * n_actions_ + a) * n_states_,
                std::size_t(n_states_)};
    }
    double reward(int s, int a) const { return reward_mean_[std::size_t(s) * n_actions_ + a]; }

    std::span<const double> transition_tensor() const noexcept { return transition_; }
    std::span<const double> reward_table() const noexcept { return reward_mean_; }

    double min_reward() const;
    double max_reward() const;

    /// Same dynamics, different discount.
    FiniteMdp with_discount(double discount) const;

    void check_state(int s) const;
    void check_action(int a) const;

    friend bool operator==(const FiniteMdp&, const FiniteMdp&) = default;

private:
    int n_states_;
    int n_actions_;
    std::vector<double> transition_;
    std::vector<double> reward_mean_;
    double discount_;
    double reward_sd_;
};

/// Draws the next state from row (s, a).
int sample_next_state(std::span<const double> row, Rng& rng);

/// Simulates one step. Throws std::out_of_range on bad indices.
Transition step(const FiniteMdp& mdp, int s, int a, Rng& rng);

/// B(q)(s,a) = r(s,a) + gamma * sum_s' P(s'|s,a) max_a' q(s',a').
QTable bellman_optimal_backup(const FiniteMdp& mdp, const QTable& q);

/// Policy-weighted backup r + gamma * sum_s' P sum_a' pi(a'|s') q(s',a').
QTable bellman_policy_backup(const FiniteMdp& mdp, const StationaryPolicy& pol, const QTable& q);

/// Optimal Q-function with Bellman residual at most `tol`.
///
/// Iterates the optimal backup until successive iterates differ by at most
/// tol*(1-gamma)/gamma in sup-norm, then polishes with exact policy iteration
/// started from the greedy policy, so the returned table is the exact value of
/// an optimal deterministic policy up to floating-point error.
QTable value_iteration(const FiniteMdp& mdp, double tol = 1e-6);

/// Plain value iteration without the policy-iteration polish.
QTable value_iteration_plain(const FiniteMdp& mdp, double tol = 1e-6);

/// Q-function of a stationary policy, solved as a linear system over states.
/// `tol` is validated but the solve is direct.
QTable policy_evaluation(const FiniteMdp& mdp, const StationaryPolicy& pol, double tol = 1e-6);

/// Index of the maximal entry; ties broken uniformly at random with `rng`.
/// Consumes randomness only when there is a tie.
int argmax_random(std::span<const double> values, Rng& rng);

/// Index of the first maximal entry.
int argmax_first(std::span<const double> values);

/// Deterministic greedy policy on q; ties broken uniformly with `rng`.
StationaryPolicy greedy_policy(const QTable& q, Rng& rng);

void to_json(nlohmann::json& j, const FiniteMdp& mdp);
FiniteMdp mdp_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const QTable& q);
QTable qtable_from_json(const nlohmann::json& j);

} // namespace mcbrl
