#include "mcbrl/belief.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mcbrl {

void PriorConfig::validate() const {
    if (!(dirichlet > 0.0) || !(strength > 0.0) || !(shape > 0.0) || !(rate > 0.0)) {
        throw std::invalid_argument("prior hyperparameters must be positive");
    }
    if (!std::isfinite(mean)) throw std::invalid_argument("prior mean must be finite");
}

void NormalGamma::observe(double x) noexcept {
    const double d = x - mean;
    rate += strength * d * d / (2.0 * (strength + 1.0));
    mean += d / (strength + 1.0);
    strength += 1.0;
    shape += 0.5;
}

NormalGamma NormalGamma::posterior(double count, double sum, double sum_squares) const noexcept {
    if (count == 0.0) return *this;
    const double xbar = sum / count;
    const double scatter = std::max(0.0, sum_squares - count * xbar * xbar);
    const double d = xbar - mean;
    NormalGamma out;
    out.strength = strength + count;
    out.mean = (strength * mean + sum) / out.strength;
    out.shape = shape + 0.5 * count;
    out.rate = rate + 0.5 * scatter + strength * count * d * d / (2.0 * out.strength);
    return out;
}

double NormalGamma::sample_mean(Rng& rng) const {
    const double precision = std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
    const double sd = 1.0 / std::sqrt(strength * precision);
    return mean + sd * std::normal_distribution<double>(0.0, 1.0)(rng);
}

// ---------------------------------------------------------------------------

DirichletTransitionBelief::DirichletTransitionBelief(int n_states, int n_actions, double pseudo_count)
    : n_states_(n_states), n_actions_(n_actions),
      counts_(std::size_t(n_states) * n_actions * n_states, pseudo_count) {}

double DirichletTransitionBelief::row_mass(int s, int a) const {
    auto r = row(s, a);
    return std::accumulate(r.begin(), r.end(), 0.0);
}

void DirichletTransitionBelief::set_row(int s, int a, std::span<const double> counts) {
    if (counts.size() != std::size_t(n_states_)) throw std::invalid_argument("set_row: wrong length");
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (!(counts[i] > 0.0)) throw std::invalid_argument("set_row: counts must be positive");
        counts_[(std::size_t(s) * n_actions_ + a) * n_states_ + i] = counts[i];
    }
}

void DirichletTransitionBelief::sample_row(int s, int a, Rng& rng, std::span<double> out) const {
    auto r = row(s, a);
    double total = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        out[i] = std::gamma_distribution<double>(r[i], 1.0)(rng);
        total += out[i];
    }
    if (total > 0.0) {
        for (double& x : out) x /= total;
        return;
    }
    // every draw underflowed (tiny pseudo-counts): fall back to one-hot on a
    // mass-proportional pick, which is the limiting distribution
    const double mass = row_mass(s, a);
    double u = uniform01(rng) * mass;
    std::size_t pick = r.size() - 1;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (u < r[i]) { pick = i; break; }
        u -= r[i];
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = i == pick ? 1.0 : 0.0;
}

// ---------------------------------------------------------------------------

BeliefState::BeliefState(int n_states, int n_actions, const PriorConfig& prior)
    : n_states_(n_states), n_actions_(n_actions), prior_(prior) {
    if (n_states <= 0 || n_actions <= 0) {
        throw std::invalid_argument("BeliefState: dimensions must be positive");
    }
    prior.validate();
    transitions_ = DirichletTransitionBelief(n_states, n_actions, prior.dirichlet);
    rewards_.assign(std::size_t(n_states) * n_actions,
                    NormalGamma{prior.mean, prior.strength, prior.shape, prior.rate});
}

void BeliefState::update(const Transition& t) {
    if (t.s < 0 || t.s >= n_states_ || t.s_next < 0 || t.s_next >= n_states_) {
        throw std::out_of_range("belief update: state index out of range");
    }
    if (t.a < 0 || t.a >= n_actions_) throw std::out_of_range("belief update: action index out of range");
    transitions_.observe(t.s, t.a, t.s_next);
    reward(t.s, t.a).observe(t.r);
    ++observations_;
}

double BeliefState::sample_pair(int s, int a, Rng& rng, std::span<double> row_out) const {
    transitions_.sample_row(s, a, rng, row_out);
    return reward(s, a).sample_mean(rng);
}

BeliefState new_belief(int n_states, int n_actions, const PriorConfig& prior) {
    return BeliefState(n_states, n_actions, prior);
}

BeliefState update(BeliefState bel, const Transition& t) {
    bel.update(t);
    return bel;
}

FiniteMdp sample_mdp(const BeliefState& bel, double discount, Rng& rng) {
    const int ns = bel.n_states();
    const int na = bel.n_actions();
    std::vector<double> transition(std::size_t(ns) * na * ns);
    std::vector<double> reward(std::size_t(ns) * na);
    for (int s = 0; s < ns; ++s) {
        for (int a = 0; a < na; ++a) {
            const std::size_t sa = std::size_t(s) * na + a;
            reward[sa] = bel.sample_pair(s, a, rng, {transition.data() + sa * ns, std::size_t(ns)});
        }
    }
    return FiniteMdp(ns, na, std::move(transition), std::move(reward), discount);
}

FiniteMdp mean_mdp(const BeliefState& bel, double discount) {
    const int ns = bel.n_states();
    const int na = bel.n_actions();
    std::vector<double> transition(std::size_t(ns) * na * ns);
    std::vector<double> reward(std::size_t(ns) * na);
    for (int s = 0; s < ns; ++s) {
        for (int a = 0; a < na; ++a) {
            const std::size_t sa = std::size_t(s) * na + a;
            auto row = bel.transitions().row(s, a);
            const double mass = bel.transitions().row_mass(s, a);
            for (int s2 = 0; s2 < ns; ++s2) transition[sa * ns + s2] = row[s2] / mass;
            reward[sa] = bel.reward(s, a).mean;
        }
    }
    return FiniteMdp(ns, na, std::move(transition), std::move(reward), discount);
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const BeliefState& bel) {
    nlohmann::json rewards = nlohmann::json::array();
    for (int s = 0; s < bel.n_states(); ++s) {
        for (int a = 0; a < bel.n_actions(); ++a) {
            const auto& ng = bel.reward(s, a);
            rewards.push_back({ng.mean, ng.strength, ng.shape, ng.rate});
        }
    }
    const auto& p = bel.prior();
    j = nlohmann::json{
        {"n_states", bel.n_states()},
        {"n_actions", bel.n_actions()},
        {"observations", bel.observations()},
        {"prior", {{"dirichlet", p.dirichlet}, {"mean", p.mean}, {"strength", p.strength},
                   {"shape", p.shape}, {"rate", p.rate}}},
        {"counts", std::vector<double>(bel.transitions().tensor().begin(), bel.transitions().tensor().end())},
        {"rewards", rewards},
    };
}

BeliefState belief_from_json(const nlohmann::json& j) {
    PriorConfig prior;
    if (j.contains("prior")) {
        const auto& p = j.at("prior");
        prior = {p.at("dirichlet").get<double>(), p.at("mean").get<double>(),
                 p.at("strength").get<double>(), p.at("shape").get<double>(), p.at("rate").get<double>()};
    }
    BeliefState bel(j.at("n_states").get<int>(), j.at("n_actions").get<int>(), prior);
    const auto counts = j.at("counts").get<std::vector<double>>();
    const auto& rewards = j.at("rewards");
    const int ns = bel.n_states();
    const int na = bel.n_actions();
    if (counts.size() != std::size_t(ns) * na * ns || rewards.size() != std::size_t(ns) * na) {
        throw std::invalid_argument("belief json: wrong tensor sizes");
    }
    for (int s = 0; s < ns; ++s) {
        for (int a = 0; a < na; ++a) {
            const std::size_t sa = std::size_t(s) * na + a;
            bel.transitions_.set_row(s, a, {counts.data() + sa * ns, std::size_t(ns)});
            const auto q = rewards[sa].get<std::vector<double>>();
            if (q.size() != 4 || !(q[1] > 0.0) || !(q[2] > 0.0) || !(q[3] > 0.0)) {
                throw std::invalid_argument("belief json: bad Normal-Gamma quadruple");
            }
            bel.rewards_[sa] = NormalGamma{q[0], q[1], q[2], q[3]};
        }
    }
    bel.observations_ = j.value("observations", 0LL);
    return bel;
}

} // namespace mcbrl
