#pragma once

#include "mcbrl/mdp.hpp"
#include "mcbrl/random.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mcbrl {

/// Per-run simulation state of a benchmark.
class Environment {
public:
    virtual ~Environment() = default;

    virtual int n_states() const = 0;
    virtual int n_actions() const = 0;
    /// Draws an initial state and returns it.
    virtual int reset(Rng& rng) = 0;
    /// Acts from the current state.
    virtual Transition step(int a, Rng& rng) = 0;

    int state() const noexcept { return state_; }

protected:
    int state_ = 0;
};

/// Uniform grid over (position, velocity). Points on an interior boundary go
/// to the lower cell; out-of-range points are clamped.
struct GridDiscretizer {
    double x_min = -1.2;
    double x_max = 0.6;
    double v_min = -0.07;
    double v_max = 0.07;
    int x_bins = 5;
    int v_bins = 5;

    int cells() const noexcept { return x_bins * v_bins; }
    int x_bin(double x) const;
    int v_bin(double v) const;
    /// Cell index v_bin * x_bins + x_bin; the column is the position bin.
    int cell(double x, double v) const;
};

struct MountainCarState {
    double x = -0.5;
    double v = 0.0;
    bool at_goal = false;
};

inline constexpr double kMountainCarGoal = 0.5;

/// Deterministic car dynamics for force in {-1, 0, 1}.
MountainCarState mountain_car_physics(MountainCarState state, int force);

struct ChainParams {
    int length = 5;
    double slip = 0.2;
    double small_reward = 2.0;
    double large_reward = 10.0;
};

struct RiverSwimParams {
    int length = 6;
    double p_right = 0.3;
    double p_stay = 0.6;
    double p_back = 0.1;
    double left_reward = 0.0005;
    double right_reward = 1.0;
};

/// A benchmark: either an exact finite MDP, or the continuous car with its grid.
struct DomainSpec {
    std::string name;
    int n_states = 0;
    int n_actions = 0;
    /// Ground truth with expected rewards; absent for the car.
    std::optional<FiniteMdp> mdp;
    /// Optional reward per (s, a, s'); simulation uses it instead of the mean when present.
    std::vector<double> outcome_reward;
    std::vector<double> initial;
    std::optional<GridDiscretizer> grid;

    std::unique_ptr<Environment> make_environment() const;
};

DomainSpec make_chain(const ChainParams& params = {}, double discount = 0.99);
DomainSpec make_double_loop(double discount = 0.99);
DomainSpec make_river_swim(const RiverSwimParams& params = {}, double discount = 0.99);
DomainSpec make_mountain_car(const GridDiscretizer& grid = {});

/// Names accepted by make_domain.
const std::vector<std::string>& domain_names();

/// Builds a domain by name. `params` may override Chain/RiverSwim constants.
DomainSpec make_domain(std::string_view name, double discount = 0.99,
                       const nlohmann::json& params = nlohmann::json::object());

} // namespace mcbrl
