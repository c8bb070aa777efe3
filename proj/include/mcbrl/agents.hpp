#pragma once

#include "mcbrl/belief.hpp"
#include "mcbrl/mdp.hpp"
#include "mcbrl/random.hpp"

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mcbrl {

/// Re-planning times with linearly growing gaps: the k-th interval is
/// base + increment * k, and the first plan happens at step 0.
struct SwitchSchedule {
    int base = 10;
    int increment = 10;
    long long next_switch = 0;
    int switches = 0;

    bool due(long long t) const noexcept { return t >= next_switch; }
    long long interval(int k) const noexcept { return base + static_cast<long long>(increment) * k; }
    /// Records a switch at step t and schedules the next one.
    void advance(long long t) noexcept {
        next_switch = t + interval(switches);
        ++switches;
    }
};

/// eta_k = initial / (1 + k)^decay. Robbins-Monro for decay in (0.5, 1].
struct StepSizeSchedule {
    double initial = 0.05;
    double decay = 0.6;

    double at(long long k) const noexcept;
};

// ---------------------------------------------------------------------------
// Monte-Carlo planners

/// Mean of the optimal Q-functions of the given models.
QTable mean_optimal_q(std::span<const FiniteMdp> models, double tol);

/// Upper-bound estimate: average of Q* over `samples` posterior draws.
QTable umcbrl_plan(const BeliefState& bel, int samples, double discount, double tol, Rng& rng);

struct MultiMdpPlan {
    StationaryPolicy policy;
    QTable q; ///< mean over models of Q^policy
    int iterations = 0;
};

/// Policy iteration against the mean Q over a fixed set of models. Starts from
/// the greedy policy on the mean of the per-model Q*. The returned policy is
/// deterministic and its mean Q is a stochastic lower bound on the Bayes value.
MultiMdpPlan multi_mdp_policy_iteration(std::span<const FiniteMdp> models, double tol, Rng& rng,
                                        int max_iterations = 50);

/// Lower-bound planner: draws `samples` models and runs multi_mdp_policy_iteration.
MultiMdpPlan mcbrl_plan(const BeliefState& bel, int samples, double discount, double tol, Rng& rng);

// ---------------------------------------------------------------------------
// Gradient updates (tabular parametrisation, gradient of an entry is its indicator)

enum class DgbrlTarget { optimal, policy };

/// Direction (theta - omega); gradient of 0.5 * ||theta - omega||^2.
QTable dgbrl_direction(const QTable& theta, const QTable& omega);
double dgbrl_loss(const QTable& theta, const QTable& omega);

/// One full-sweep step theta - eta * (theta - omega). omega is Q* of a sampled
/// model (upper-bound mode) or Q^pol of it (lower-bound mode, `pol` required).
QTable dgbrl_update(const QTable& theta, const BeliefState& bel, DgbrlTarget target,
                    const StationaryPolicy* pol, double eta, double discount, double tol, Rng& rng);

/// Model-sampled quantities entering the TD-like error at one state.
struct TdSample {
    int s = 0;
    double r = 0.0; ///< policy-averaged sampled mean reward at s
    int s_next = 0;
};

/// v_theta(s) = sum_a pol(a|s) theta(s, a).
double state_value(const QTable& theta, const StationaryPolicy& pol, int s);

TdSample draw_td_sample(const BeliefState& bel, const StationaryPolicy& pol, int s, Rng& rng);
double td_residual(const QTable& theta, const StationaryPolicy& pol, const TdSample& x, double discount);
/// 2 h (grad v(s) - gamma grad v(s')), the policy held fixed.
QTable td_direction(const QTable& theta, const StationaryPolicy& pol, const TdSample& x, double discount);
QTable td_gradient_update(const QTable& theta, const BeliefState& bel, const StationaryPolicy& pol,
                          int s, double eta, double discount, Rng& rng);

struct BellmanSample {
    int s = 0;
    int a = 0;
    double r = 0.0; ///< sampled mean reward at (s, a)
    int s_next = 0;
};

BellmanSample draw_bellman_sample(const BeliefState& bel, int s, int a, Rng& rng);
/// h = theta(s,a) - r - gamma theta(s', a_star).
double bellman_residual(const QTable& theta, const BellmanSample& x, int a_star, double discount);
/// 2 h (grad theta(s,a) - gamma grad theta(s', a_star)), a_star held fixed.
QTable bellman_direction(const QTable& theta, const BellmanSample& x, int a_star, double discount);
/// In-place step; returns the residual h. a_star is the greedy action at s'
/// (ties broken with rng).
double bgbrl_step(QTable& theta, const BellmanSample& x, double eta, double discount, Rng& rng);
QTable bgbrl_update(const QTable& theta, const BeliefState& bel, int s, int a, double eta,
                    double discount, Rng& rng);

// ---------------------------------------------------------------------------
// Discounted UCRL

/// Empirical counts for the optimistic planner.
class UcrlStatistics {
public:
    UcrlStatistics(int n_states, int n_actions);

    int n_states() const noexcept { return n_states_; }
    int n_actions() const noexcept { return n_actions_; }
    long long steps() const noexcept { return steps_; }
    double visits(int s, int a) const { return visits_[std::size_t(s) * n_actions_ + a]; }
    double count(int s, int a, int s_next) const {
        return counts_[(std::size_t(s) * n_actions_ + a) * n_states_ + s_next];
    }
    double mean_reward(int s, int a) const;

    void observe(const Transition& t);
    /// Adds `n` copies of a transition. Used for synthetic statistics.
    void observe_many(const Transition& t, double n);

private:
    int n_states_;
    int n_actions_;
    long long steps_ = 0;
    std::vector<double> visits_;
    std::vector<double> counts_;
    std::vector<double> reward_sums_;
};

double ucrl_transition_radius(int n_states, int n_actions, long long t, double delta, double visits);
double ucrl_reward_bonus(int n_states, int n_actions, long long t, double delta, double visits);

/// Maximises p . values over the L1 ball of radius `radius` around p_hat
/// intersected with the simplex.
std::vector<double> optimistic_transition(std::span<const double> p_hat, double radius,
                                          std::span<const double> values);

/// Optimistic Q from discounted extended value iteration.
QTable ucrl_plan(const UcrlStatistics& stats, double delta, double discount, double tol);

// ---------------------------------------------------------------------------
// Agents

/// Everything an agent factory needs. Tuned hyperparameters are epsilon0,
/// delta, samples and eta0; the rest are fixed across a study.
struct AgentConfig {
    double discount = 0.99;
    double solver_tol = 1e-6;
    PriorConfig prior{};
    int switch_base = 10;
    int switch_increment = 10;
    double step_decay = 0.6;
    double lambda = 0.9;
    double epsilon_horizon = 1000.0;

    double epsilon0 = 0.1;
    double delta = 0.01;
    int samples = 4;
    double eta0 = 0.05;
    DgbrlTarget dgbrl_target = DgbrlTarget::optimal;
};

/// Uniform act/observe contract. An agent is owned by exactly one run.
class Agent {
public:
    virtual ~Agent() = default;

    virtual std::string_view name() const = 0;
    virtual int act(int s, Rng& rng) = 0;
    virtual void observe(const Transition& t, Rng& rng) = 0;

    long long steps() const noexcept { return t_; }

protected:
    long long t_ = 0;
};

/// Shared machinery of the posterior-sampling planners: belief, switch
/// schedule and a cached plan acted on greedily.
class PlanningAgent : public Agent {
public:
    PlanningAgent(int n_states, int n_actions, const AgentConfig& cfg);

    int act(int s, Rng& rng) override;
    void observe(const Transition& t, Rng& rng) override;

    const BeliefState& belief() const noexcept { return belief_; }
    const SwitchSchedule& schedule() const noexcept { return schedule_; }
    const QTable& plan() const noexcept { return plan_; }
    int replans() const noexcept { return replans_; }

protected:
    virtual void replan(Rng& rng) = 0;
    virtual int choose(int s, Rng& rng) { return argmax_random(plan_.row(s), rng); }

    AgentConfig cfg_;
    BeliefState belief_;
    SwitchSchedule schedule_;
    QTable plan_;
    int replans_ = 0;
};

class UmcbrlAgent final : public PlanningAgent {
public:
    using PlanningAgent::PlanningAgent;
    std::string_view name() const override { return "umcbrl"; }

private:
    void replan(Rng& rng) override;
};

/// Posterior sampling: act optimally for one sampled model between switches.
class ThompsonAgent final : public PlanningAgent {
public:
    using PlanningAgent::PlanningAgent;
    std::string_view name() const override { return "thompson"; }

private:
    void replan(Rng& rng) override;
};

class McbrlAgent final : public PlanningAgent {
public:
    McbrlAgent(int n_states, int n_actions, const AgentConfig& cfg);
    std::string_view name() const override { return "mcbrl"; }
    const StationaryPolicy& policy() const noexcept { return policy_; }

private:
    void replan(Rng& rng) override;
    int choose(int s, Rng& rng) override;

    StationaryPolicy policy_;
};

class UcrlAgent final : public Agent {
public:
    UcrlAgent(int n_states, int n_actions, const AgentConfig& cfg);
    std::string_view name() const override { return "ucrl"; }
    int act(int s, Rng& rng) override;
    void observe(const Transition& t, Rng& rng) override;

    const UcrlStatistics& statistics() const noexcept { return stats_; }
    const QTable& plan() const noexcept { return plan_; }

private:
    AgentConfig cfg_;
    UcrlStatistics stats_;
    SwitchSchedule schedule_;
    QTable plan_;
};

/// Watkins Q(lambda) with replacing traces and hyperbolically decaying epsilon.
class QLambdaAgent final : public Agent {
public:
    QLambdaAgent(int n_states, int n_actions, const AgentConfig& cfg);
    std::string_view name() const override { return "qlambda"; }
    int act(int s, Rng& rng) override;
    void observe(const Transition& t, Rng& rng) override;

    double epsilon() const noexcept;
    const QTable& q() const noexcept { return q_; }
    const QTable& traces() const noexcept { return traces_; }

private:
    AgentConfig cfg_;
    StepSizeSchedule steps_;
    QTable q_;
    QTable traces_;
};

/// Common state of the gradient agents: belief, parameters theta, step sizes.
class GradientAgent : public Agent {
public:
    GradientAgent(int n_states, int n_actions, const AgentConfig& cfg);

    int act(int s, Rng& rng) override;
    void observe(const Transition& t, Rng& rng) override;

    const QTable& theta() const noexcept { return theta_; }
    const BeliefState& belief() const noexcept { return belief_; }
    long long updates() const noexcept { return k_; }

protected:
    virtual void update_parameters(const Transition& t, double eta, Rng& rng) = 0;

    AgentConfig cfg_;
    BeliefState belief_;
    StepSizeSchedule steps_;
    QTable theta_;
    long long k_ = 0;
};

class DgbrlAgent final : public GradientAgent {
public:
    using GradientAgent::GradientAgent;
    std::string_view name() const override { return "dgbrl"; }

private:
    void update_parameters(const Transition& t, double eta, Rng& rng) override;
};

class TdGradientAgent final : public GradientAgent {
public:
    using GradientAgent::GradientAgent;
    std::string_view name() const override { return "tdgbrl"; }

private:
    void update_parameters(const Transition& t, double eta, Rng& rng) override;
};

class BgbrlAgent final : public GradientAgent {
public:
    using GradientAgent::GradientAgent;
    std::string_view name() const override { return "bgbrl"; }

private:
    void update_parameters(const Transition& t, double eta, Rng& rng) override;
};

/// Names accepted by make_agent, in canonical order.
const std::vector<std::string>& agent_names();

/// Throws std::invalid_argument for unknown names.
std::unique_ptr<Agent> make_agent(std::string_view name, int n_states, int n_actions,
                                  const AgentConfig& cfg);

} // namespace mcbrl
