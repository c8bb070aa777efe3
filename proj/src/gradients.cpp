#include "mcbrl/agents.hpp"

#include <stdexcept>

namespace mcbrl {

QTable dgbrl_direction(const QTable& theta, const QTable& omega) {
    if (!theta.same_shape(omega)) throw std::invalid_argument("dgbrl_direction: shape mismatch");
    QTable d(theta.n_states(), theta.n_actions());
    auto out = d.values();
    auto th = theta.values();
    auto om = omega.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = th[i] - om[i];
    return d;
}

double dgbrl_loss(const QTable& theta, const QTable& omega) {
    const QTable d = dgbrl_direction(theta, omega);
    double sum = 0.0;
    for (double x : d.values()) sum += x * x;
    return 0.5 * sum;
}

QTable dgbrl_update(const QTable& theta, const BeliefState& bel, DgbrlTarget target,
                    const StationaryPolicy* pol, double eta, double discount, double tol, Rng& rng) {
    if (!(eta >= 0.0)) throw std::invalid_argument("dgbrl_update: negative step size");
    if (target == DgbrlTarget::policy && pol == nullptr) {
        throw std::invalid_argument("dgbrl_update: lower-bound mode needs a policy");
    }
    const FiniteMdp model = sample_mdp(bel, discount, rng);
    const QTable omega =
        target == DgbrlTarget::optimal ? value_iteration(model, tol) : policy_evaluation(model, *pol, tol);
    QTable next = theta;
    auto out = next.values();
    auto om = omega.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= eta * (out[i] - om[i]);
    return next;
}

// ---------------------------------------------------------------------------

double state_value(const QTable& theta, const StationaryPolicy& pol, int s) {
    double v = 0.0;
    for (int a = 0; a < theta.n_actions(); ++a) v += pol(s, a) * theta(s, a);
    return v;
}

TdSample draw_td_sample(const BeliefState& bel, const StationaryPolicy& pol, int s, Rng& rng) {
    const int ns = bel.n_states();
    std::vector<double> row(ns);
    std::vector<double> mixture(ns, 0.0);
    TdSample x{s, 0.0, s};
    for (int a = 0; a < bel.n_actions(); ++a) {
        const double p = pol(s, a);
        if (p == 0.0) continue;
        x.r += p * bel.sample_pair(s, a, rng, row);
        for (int s2 = 0; s2 < ns; ++s2) mixture[s2] += p * row[s2];
    }
    x.s_next = sample_next_state(mixture, rng);
    return x;
}

double td_residual(const QTable& theta, const StationaryPolicy& pol, const TdSample& x, double discount) {
    return state_value(theta, pol, x.s) - x.r - discount * state_value(theta, pol, x.s_next);
}

QTable td_direction(const QTable& theta, const StationaryPolicy& pol, const TdSample& x, double discount) {
    const double h = td_residual(theta, pol, x, discount);
    QTable d(theta.n_states(), theta.n_actions());
    for (int a = 0; a < theta.n_actions(); ++a) {
        d(x.s, a) += 2.0 * h * pol(x.s, a);
        d(x.s_next, a) -= 2.0 * h * discount * pol(x.s_next, a);
    }
    return d;
}

QTable td_gradient_update(const QTable& theta, const BeliefState& bel, const StationaryPolicy& pol,
                          int s, double eta, double discount, Rng& rng) {
    if (s < 0 || s >= theta.n_states()) throw std::out_of_range("td_gradient_update: state out of range");
    const TdSample x = draw_td_sample(bel, pol, s, rng);
    const QTable d = td_direction(theta, pol, x, discount);
    QTable next = theta;
    auto out = next.values();
    auto dv = d.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= eta * dv[i];
    return next;
}

// ---------------------------------------------------------------------------

BellmanSample draw_bellman_sample(const BeliefState& bel, int s, int a, Rng& rng) {
    std::vector<double> row(bel.n_states());
    BellmanSample x{s, a, 0.0, s};
    x.r = bel.sample_pair(s, a, rng, row);
    x.s_next = sample_next_state(row, rng);
    return x;
}

double bellman_residual(const QTable& theta, const BellmanSample& x, int a_star, double discount) {
    return theta(x.s, x.a) - x.r - discount * theta(x.s_next, a_star);
}

QTable bellman_direction(const QTable& theta, const BellmanSample& x, int a_star, double discount) {
    const double h = bellman_residual(theta, x, a_star, discount);
    QTable d(theta.n_states(), theta.n_actions());
    d(x.s, x.a) += 2.0 * h;
    d(x.s_next, a_star) -= 2.0 * h * discount;
    return d;
}

double bgbrl_step(QTable& theta, const BellmanSample& x, double eta, double discount, Rng& rng) {
    const int a_star = argmax_random(theta.row(x.s_next), rng);
    const double h = bellman_residual(theta, x, a_star, discount);
    theta(x.s, x.a) -= 2.0 * eta * h;
    theta(x.s_next, a_star) += 2.0 * eta * discount * h;
    return h;
}

QTable bgbrl_update(const QTable& theta, const BeliefState& bel, int s, int a, double eta,
                    double discount, Rng& rng) {
    if (s < 0 || s >= theta.n_states() || a < 0 || a >= theta.n_actions()) {
        throw std::out_of_range("bgbrl_update: index out of range");
    }
    QTable next = theta;
    bgbrl_step(next, draw_bellman_sample(bel, s, a, rng), eta, discount, rng);
    return next;
}

} // namespace mcbrl
