#pragma once

#include "mcbrl/mdp.hpp"
#include "mcbrl/random.hpp"

#include <nlohmann/json.hpp>

#include <span>
#include <vector>

namespace mcbrl {

/// Hyperparameters of the conjugate prior.
struct PriorConfig {
    double dirichlet = 0.5; ///< symmetric pseudo-count per next state
    double mean = 0.0;      ///< Normal-Gamma location
    double strength = 1.0;  ///< Normal-Gamma kappa
    double shape = 1.0;     ///< Normal-Gamma alpha
    double rate = 1.0;      ///< Normal-Gamma beta

    /// Throws std::invalid_argument on non-positive hyperparameters.
    void validate() const;
};

/// Normal-Gamma over (mean, precision) of a Gaussian reward.
struct NormalGamma {
    double mean = 0.0;
    double strength = 1.0;
    double shape = 1.0;
    double rate = 1.0;

    /// Single-observation conjugate update.
    void observe(double x) noexcept;

    /// Batch update from sufficient statistics (count, sum, sum of squares).
    NormalGamma posterior(double count, double sum, double sum_squares) const noexcept;

    /// Draws a mean: precision ~ Gamma(shape, rate), mean ~ N(mean, 1/(strength*precision)).
    double sample_mean(Rng& rng) const;

    friend bool operator==(const NormalGamma&, const NormalGamma&) = default;
};

/// Product of Dirichlet posteriors over next states, one per (s, a).
class DirichletTransitionBelief {
public:
    DirichletTransitionBelief() = default;
    DirichletTransitionBelief(int n_states, int n_actions, double pseudo_count);

    double count(int s, int a, int s_next) const {
        return counts_[(std::size_t(s) * n_actions_ + a) * n_states_ + s_next];
    }
    std::span<const double> row(int s, int a) const {
        return {counts_.data() + (std::size_t(s) * n_actions_ + a) * n_states_, std::size_t(n_states_)};
    }
    double row_mass(int s, int a) const;
    std::span<const double> tensor() const noexcept { return counts_; }

    void observe(int s, int a, int s_next) { counts_[(std::size_t(s) * n_actions_ + a) * n_states_ + s_next] += 1.0; }

    /// Overwrites one row; used by tests and checkpoint loading. Counts must be positive.
    void set_row(int s, int a, std::span<const double> counts);

    /// Draws one transition row via Gamma normalisation.
    void sample_row(int s, int a, Rng& rng, std::span<double> out) const;

    friend bool operator==(const DirichletTransitionBelief&, const DirichletTransitionBelief&) = default;

private:
    int n_states_ = 0;
    int n_actions_ = 0;
    std::vector<double> counts_;
};

/// Conjugate posterior over finite MDPs. It is a function of the observed
/// transitions only; no policy enters it.
class BeliefState {
public:
    BeliefState(int n_states, int n_actions, const PriorConfig& prior = {});

    int n_states() const noexcept { return n_states_; }
    int n_actions() const noexcept { return n_actions_; }
    const PriorConfig& prior() const noexcept { return prior_; }

    const DirichletTransitionBelief& transitions() const noexcept { return transitions_; }
    DirichletTransitionBelief& transitions() noexcept { return transitions_; }

    const NormalGamma& reward(int s, int a) const { return rewards_[std::size_t(s) * n_actions_ + a]; }
    NormalGamma& reward(int s, int a) { return rewards_[std::size_t(s) * n_actions_ + a]; }

    /// Number of observations made so far across all pairs.
    long long observations() const noexcept { return observations_; }

    /// In-place posterior update. Throws std::out_of_range on bad indices.
    void update(const Transition& t);

    /// Draws the (transition row, mean reward) of a single pair from the posterior.
    double sample_pair(int s, int a, Rng& rng, std::span<double> row_out) const;

    friend bool operator==(const BeliefState&, const BeliefState&) = default;

private:
    int n_states_;
    int n_actions_;
    PriorConfig prior_;
    DirichletTransitionBelief transitions_;
    std::vector<NormalGamma> rewards_;
    long long observations_ = 0;

    friend BeliefState belief_from_json(const nlohmann::json& j);
};

inline bool operator==(const PriorConfig& a, const PriorConfig& b) {
    return a.dirichlet == b.dirichlet && a.mean == b.mean && a.strength == b.strength &&
           a.shape == b.shape && a.rate == b.rate;
}

BeliefState new_belief(int n_states, int n_actions, const PriorConfig& prior = {});

/// Value-returning form of BeliefState::update.
BeliefState update(BeliefState bel, const Transition& t);

/// Draws an MDP from the posterior. Rows are Dirichlet draws, rewards are the
/// sampled means (zero reward noise).
FiniteMdp sample_mdp(const BeliefState& bel, double discount, Rng& rng);

/// Expected model: normalised counts and posterior reward locations.
FiniteMdp mean_mdp(const BeliefState& bel, double discount);

void to_json(nlohmann::json& j, const BeliefState& bel);
BeliefState belief_from_json(const nlohmann::json& j);

} // namespace mcbrl
