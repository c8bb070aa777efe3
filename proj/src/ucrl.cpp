#include "mcbrl/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mcbrl {

UcrlStatistics::UcrlStatistics(int n_states, int n_actions)
    : n_states_(n_states), n_actions_(n_actions), visits_(std::size_t(n_states) * n_actions, 0.0),
      counts_(std::size_t(n_states) * n_actions * n_states, 0.0),
      reward_sums_(std::size_t(n_states) * n_actions, 0.0) {
    if (n_states <= 0 || n_actions <= 0) throw std::invalid_argument("UcrlStatistics: bad dimensions");
}

double UcrlStatistics::mean_reward(int s, int a) const {
    const std::size_t sa = std::size_t(s) * n_actions_ + a;
    return visits_[sa] > 0.0 ? reward_sums_[sa] / visits_[sa] : 0.0;
}

void UcrlStatistics::observe(const Transition& t) { observe_many(t, 1.0); }

void UcrlStatistics::observe_many(const Transition& t, double n) {
    if (t.s < 0 || t.s >= n_states_ || t.s_next < 0 || t.s_next >= n_states_ || t.a < 0 ||
        t.a >= n_actions_) {
        throw std::out_of_range("UcrlStatistics: index out of range");
    }
    const std::size_t sa = std::size_t(t.s) * n_actions_ + t.a;
    visits_[sa] += n;
    counts_[sa * n_states_ + t.s_next] += n;
    reward_sums_[sa] += n * t.r;
    steps_ += static_cast<long long>(n);
}

double ucrl_transition_radius(int n_states, int n_actions, long long t, double delta, double visits) {
    const double tt = double(std::max<long long>(1, t));
    const double log_term = n_states * std::log(2.0) + std::log(double(n_states) * n_actions * tt / delta);
    return std::sqrt(2.0 * log_term / std::max(1.0, visits));
}

double ucrl_reward_bonus(int n_states, int n_actions, long long t, double delta, double visits) {
    const double tt = double(std::max<long long>(1, t));
    return std::sqrt(std::log(2.0 * n_states * n_actions * tt / delta) / (2.0 * std::max(1.0, visits)));
}

std::vector<double> optimistic_transition(std::span<const double> p_hat, double radius,
                                          std::span<const double> values) {
    const std::size_t n = p_hat.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return values[i] > values[j]; });

    std::vector<double> p(p_hat.begin(), p_hat.end());
    p[order[0]] = std::min(1.0, p_hat[order[0]] + radius / 2.0);
    double total = std::accumulate(p.begin(), p.end(), 0.0);
    // take the surplus away from the worst states first
    for (std::size_t k = n; k-- > 1 && total > 1.0;) {
        const std::size_t i = order[k];
        const double others = total - p[i];
        p[i] = std::max(0.0, 1.0 - others);
        total = others + p[i];
    }
    return p;
}

QTable ucrl_plan(const UcrlStatistics& stats, double delta, double discount, double tol) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("ucrl_plan: delta must lie in (0, 1)");
    if (!(tol > 0.0)) throw std::invalid_argument("ucrl_plan: tol must be positive");
    if (!(discount >= 0.0 && discount < 1.0)) throw std::invalid_argument("ucrl_plan: bad discount");
    const int ns = stats.n_states();
    const int na = stats.n_actions();
    const long long t = stats.steps();

    std::vector<double> p_hat(std::size_t(ns) * na * ns);
    std::vector<double> radius(std::size_t(ns) * na);
    std::vector<double> reward(std::size_t(ns) * na);
    for (int s = 0; s < ns; ++s) {
        for (int a = 0; a < na; ++a) {
            const std::size_t sa = std::size_t(s) * na + a;
            const double n = stats.visits(s, a);
            for (int s2 = 0; s2 < ns; ++s2) {
                p_hat[sa * ns + s2] = n > 0.0 ? stats.count(s, a, s2) / n : 1.0 / ns;
            }
            radius[sa] = ucrl_transition_radius(ns, na, t, delta, n);
            reward[sa] = stats.mean_reward(s, a) + ucrl_reward_bonus(ns, na, t, delta, n);
        }
    }

    QTable q(ns, na);
    std::vector<double> v(ns, 0.0);
    const double threshold = discount > 0.0 ? tol * (1.0 - discount) / discount : 0.0;
    while (true) {
        for (int s = 0; s < ns; ++s) {
            for (int a = 0; a < na; ++a) {
                const std::size_t sa = std::size_t(s) * na + a;
                const auto p = optimistic_transition({p_hat.data() + sa * ns, std::size_t(ns)}, radius[sa], v);
                double ev = 0.0;
                for (int s2 = 0; s2 < ns; ++s2) ev += p[s2] * v[s2];
                q(s, a) = reward[sa] + discount * ev;
            }
        }
        double change = 0.0;
        for (int s = 0; s < ns; ++s) {
            const double next = q.max(s);
            change = std::max(change, std::abs(next - v[s]));
            v[s] = next;
        }
        if (discount == 0.0 || change <= threshold) break;
    }
    return q;
}

} // namespace mcbrl
