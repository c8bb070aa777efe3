#include "mcbrl/domains.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcbrl {

namespace {

class DiscreteEnvironment final : public Environment {
public:
    explicit DiscreteEnvironment(const DomainSpec& spec) : spec_(spec) {}

    int n_states() const override { return spec_.n_states; }
    int n_actions() const override { return spec_.n_actions; }

    int reset(Rng& rng) override {
        state_ = sample_next_state(spec_.initial, rng);
        return state_;
    }

    Transition step(int a, Rng& rng) override {
        const FiniteMdp& mdp = *spec_.mdp;
        mdp.check_action(a);
        Transition t{state_, a, 0.0, sample_next_state(mdp.transition_row(state_, a), rng)};
        if (spec_.outcome_reward.empty()) {
            t.r = mdp.reward(state_, a);
        } else {
            t.r = spec_.outcome_reward[(std::size_t(state_) * spec_.n_actions + a) * spec_.n_states + t.s_next];
        }
        if (mdp.reward_sd() > 0.0) t.r += std::normal_distribution<double>(0.0, mdp.reward_sd())(rng);
        state_ = t.s_next;
        return t;
    }

private:
    const DomainSpec& spec_;
};

class MountainCarEnvironment final : public Environment {
public:
    explicit MountainCarEnvironment(GridDiscretizer grid) : grid_(grid) {}

    int n_states() const override { return grid_.cells(); }
    int n_actions() const override { return 3; }

    int reset(Rng& rng) override {
        car_ = MountainCarState{std::uniform_real_distribution<double>(-0.6, -0.4)(rng), 0.0, false};
        state_ = grid_.cell(car_.x, car_.v);
        return state_;
    }

    Transition step(int a, Rng&) override {
        if (a < 0 || a > 2) throw std::out_of_range("mountain car action out of range");
        Transition t{state_, a, 0.0, state_};
        if (!car_.at_goal) {
            car_ = mountain_car_physics(car_, a - 1);
            t.r = car_.at_goal ? 0.0 : -1.0;
        }
        t.s_next = grid_.cell(car_.x, car_.v);
        state_ = t.s_next;
        return t;
    }

private:
    GridDiscretizer grid_;
    MountainCarState car_;
};

int bin_of(double value, double lo, double hi, int bins) {
    const double width = (hi - lo) / bins;
    const int b = int(std::ceil((value - lo) / width)) - 1;
    return std::clamp(b, 0, bins - 1);
}

FiniteMdp build_mdp(int ns, int na, const std::vector<double>& transition,
                    const std::vector<double>& outcome_reward, double discount) {
    std::vector<double> reward(std::size_t(ns) * na, 0.0);
    for (std::size_t sa = 0; sa < reward.size(); ++sa) {
        for (int s2 = 0; s2 < ns; ++s2) reward[sa] += transition[sa * ns + s2] * outcome_reward[sa * ns + s2];
    }
    return FiniteMdp(ns, na, transition, std::move(reward), discount);
}

} // namespace

int GridDiscretizer::x_bin(double x) const { return bin_of(x, x_min, x_max, x_bins); }
int GridDiscretizer::v_bin(double v) const { return bin_of(v, v_min, v_max, v_bins); }
int GridDiscretizer::cell(double x, double v) const { return v_bin(v) * x_bins + x_bin(x); }

MountainCarState mountain_car_physics(MountainCarState state, int force) {
    if (state.at_goal) return state;
    double v = state.v + 0.001 * force - 0.0025 * std::cos(3.0 * state.x);
    v = std::clamp(v, -0.07, 0.07);
    double x = std::clamp(state.x + v, -1.2, 0.6);
    if (x <= -1.2) v = std::max(v, 0.0);
    return {x, v, x >= kMountainCarGoal};
}

std::unique_ptr<Environment> DomainSpec::make_environment() const {
    if (grid) return std::make_unique<MountainCarEnvironment>(*grid);
    if (!mdp) throw std::logic_error("domain '" + name + "' has no dynamics");
    return std::make_unique<DiscreteEnvironment>(*this);
}

DomainSpec make_chain(const ChainParams& p, double discount) {
    if (p.length < 2 || !(p.slip >= 0.0 && p.slip <= 1.0)) throw std::invalid_argument("bad chain parameters");
    const int ns = p.length;
    const int na = 2; // 0 = forward, 1 = return
    std::vector<double> transition(std::size_t(ns) * na * ns, 0.0);
    std::vector<double> outcome(transition.size(), 0.0);
    auto at = [&](int s, int a, int s2) -> std::size_t { return (std::size_t(s) * na + a) * ns + s2; };
    for (int s = 0; s < ns; ++s) {
        const int ahead = std::min(s + 1, ns - 1);
        const double forward_reward = s == ns - 1 ? p.large_reward : 0.0;
        // intended action with probability 1 - slip, the other one otherwise
        transition[at(s, 0, ahead)] += 1.0 - p.slip;
        transition[at(s, 0, 0)] += p.slip;
        transition[at(s, 1, 0)] += 1.0 - p.slip;
        transition[at(s, 1, ahead)] += p.slip;
        for (int a = 0; a < na; ++a) {
            outcome[at(s, a, ahead)] = forward_reward;
            outcome[at(s, a, 0)] = p.small_reward;
        }
    }
    DomainSpec spec;
    spec.name = "chain";
    spec.n_states = ns;
    spec.n_actions = na;
    spec.mdp = build_mdp(ns, na, transition, outcome, discount);
    spec.outcome_reward = std::move(outcome);
    spec.initial.assign(ns, 0.0);
    spec.initial[0] = 1.0;
    return spec;
}

DomainSpec make_double_loop(double discount) {
    // state 0 is shared; 1..4 is the right loop, 5..8 the left loop
    const int ns = 9;
    const int na = 2;
    std::vector<double> transition(std::size_t(ns) * na * ns, 0.0);
    std::vector<double> outcome(transition.size(), 0.0);
    auto set = [&](int s, int a, int s2, double r) {
        transition[(std::size_t(s) * na + a) * ns + s2] = 1.0;
        outcome[(std::size_t(s) * na + a) * ns + s2] = r;
    };
    set(0, 0, 1, 0.0);
    set(0, 1, 5, 0.0);
    for (int s = 1; s <= 4; ++s) {
        const int next = s == 4 ? 0 : s + 1;
        const double r = s == 4 ? 1.0 : 0.0;
        set(s, 0, next, r);
        set(s, 1, next, r);
    }
    for (int s = 5; s <= 8; ++s) {
        set(s, 0, 0, 0.0);
        set(s, 1, s == 8 ? 0 : s + 1, s == 8 ? 2.0 : 0.0);
    }
    DomainSpec spec;
    spec.name = "doubleloop";
    spec.n_states = ns;
    spec.n_actions = na;
    spec.mdp = build_mdp(ns, na, transition, outcome, discount);
    spec.outcome_reward = std::move(outcome);
    spec.initial.assign(ns, 0.0);
    spec.initial[0] = 1.0;
    return spec;
}

DomainSpec make_river_swim(const RiverSwimParams& p, double discount) {
    if (p.length < 2) throw std::invalid_argument("bad river swim length");
    const int ns = p.length;
    const int na = 2; // 0 = left (with the current), 1 = right (against it)
    std::vector<double> transition(std::size_t(ns) * na * ns, 0.0);
    std::vector<double> reward(std::size_t(ns) * na, 0.0);
    auto at = [&](int s, int a, int s2) -> double& { return transition[(std::size_t(s) * na + a) * ns + s2]; };
    for (int s = 0; s < ns; ++s) {
        at(s, 0, std::max(s - 1, 0)) = 1.0;
        if (s == 0) {
            at(s, 1, 1) += p.p_right;
            at(s, 1, 0) += p.p_stay + p.p_back;
        } else if (s == ns - 1) {
            at(s, 1, s) += p.p_right + p.p_stay;
            at(s, 1, s - 1) += p.p_back;
        } else {
            at(s, 1, s + 1) += p.p_right;
            at(s, 1, s) += p.p_stay;
            at(s, 1, s - 1) += p.p_back;
        }
    }
    reward[0 * na + 0] = p.left_reward;
    reward[std::size_t(ns - 1) * na + 1] = p.right_reward;
    DomainSpec spec;
    spec.name = "riverswim";
    spec.n_states = ns;
    spec.n_actions = na;
    spec.mdp = FiniteMdp(ns, na, std::move(transition), std::move(reward), discount);
    spec.initial.assign(ns, 0.0);
    spec.initial[0] = 1.0;
    return spec;
}

DomainSpec make_mountain_car(const GridDiscretizer& grid) {
    if (grid.x_bins < 1 || grid.v_bins < 1 || !(grid.x_max > grid.x_min) || !(grid.v_max > grid.v_min)) {
        throw std::invalid_argument("bad grid");
    }
    DomainSpec spec;
    spec.name = "mountaincar" + std::to_string(grid.x_bins) + "x" + std::to_string(grid.v_bins);
    spec.n_states = grid.cells();
    spec.n_actions = 3;
    spec.grid = grid;
    return spec;
}

const std::vector<std::string>& domain_names() {
    static const std::vector<std::string> names{"chain", "doubleloop", "riverswim", "mountaincar5x5"};
    return names;
}

DomainSpec make_domain(std::string_view name, double discount, const nlohmann::json& params) {
    if (name == "chain") {
        ChainParams p;
        p.length = params.value("length", p.length);
        p.slip = params.value("slip", p.slip);
        p.small_reward = params.value("small_reward", p.small_reward);
        p.large_reward = params.value("large_reward", p.large_reward);
        return make_chain(p, discount);
    }
    if (name == "doubleloop") return make_double_loop(discount);
    if (name == "riverswim") {
        RiverSwimParams p;
        p.length = params.value("length", p.length);
        p.p_right = params.value("p_right", p.p_right);
        p.p_stay = params.value("p_stay", p.p_stay);
        p.p_back = params.value("p_back", p.p_back);
        p.left_reward = params.value("left_reward", p.left_reward);
        p.right_reward = params.value("right_reward", p.right_reward);
        return make_river_swim(p, discount);
    }
    if (name == "mountaincar5x5") return make_mountain_car(GridDiscretizer{});
    throw std::invalid_argument("unknown domain '" + std::string(name) + "'");
}

} // namespace mcbrl
