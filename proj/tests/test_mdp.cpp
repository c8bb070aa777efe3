#include "mcbrl/mdp.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace mcbrl;

namespace {

FiniteMdp one_state(std::vector<double> rewards, double discount = 0.99) {
    const int na = int(rewards.size());
    return FiniteMdp(1, na, std::vector<double>(std::size_t(na), 1.0), std::move(rewards), discount);
}

} // namespace

TEST_CASE("FiniteMdp validates its invariants") {
    CHECK_THROWS_AS(FiniteMdp(1, 1, {0.5}, {0.0}, 0.9), std::invalid_argument);
    CHECK_THROWS_AS(FiniteMdp(1, 1, {1.0}, {0.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(FiniteMdp(2, 1, {1.5, -0.5, 0.0, 1.0}, {0.0, 0.0}, 0.9), std::invalid_argument);
    CHECK_THROWS_AS(FiniteMdp(2, 1, {1.0}, {0.0, 0.0}, 0.9), std::invalid_argument);
    CHECK_NOTHROW(FiniteMdp(2, 1, {0.3, 0.7 + 1e-12, 0.0, 1.0}, {0.0, 0.0}, 0.0));
}

TEST_CASE("step on a single-state MDP") {
    Rng rng(1);
    const auto m = one_state({0.2});
    const auto t = step(m, 0, 0, rng);
    CHECK(t.s == 0);
    CHECK(t.a == 0);
    CHECK(t.s_next == 0);
    CHECK(t.r == doctest::Approx(0.2));
    CHECK_THROWS_AS(step(m, 1, 0, rng), std::out_of_range);
    CHECK_THROWS_AS(step(m, 0, -1, rng), std::out_of_range);
}

TEST_CASE("step follows the declared kernel") {
    Rng rng(2);
    FiniteMdp m(2, 1, {0.3, 0.7, 1.0, 0.0}, {0.0, 0.0}, 0.9);
    int ones = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) ones += step(m, 0, 0, rng).s_next;
    CHECK(std::abs(double(ones) / n - 0.7) < 0.01);
}

TEST_CASE("step adds Gaussian reward noise when declared") {
    Rng rng(3);
    FiniteMdp m(1, 1, {1.0}, {1.0}, 0.9, 2.0);
    double sum = 0.0, sq = 0.0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        const double r = step(m, 0, 0, rng).r;
        sum += r;
        sq += r * r;
    }
    const double mean = sum / n;
    CHECK(std::abs(mean - 1.0) < 3.0 * 2.0 / std::sqrt(n) * 1.5);
    CHECK(std::abs(std::sqrt(sq / n - mean * mean) - 2.0) < 0.05);
}

TEST_CASE("bellman_optimal_backup") {
    const auto m = one_state({1.0});
    CHECK(bellman_optimal_backup(m, QTable(1, 1, 0.0))(0, 0) == doctest::Approx(1.0));
    CHECK(bellman_optimal_backup(m, QTable(1, 1, 100.0))(0, 0) == doctest::Approx(100.0));

    SUBCASE("deterministic cycle against brute-force rollout") {
        FiniteMdp cycle(2, 1, {0.0, 1.0, 1.0, 0.0}, {0.0, 1.0}, 0.5);
        const auto once = bellman_optimal_backup(cycle, QTable(2, 1));
        CHECK(once(0, 0) == 0.0);
        CHECK(once(1, 0) == 1.0);
        QTable q(2, 1);
        for (int i = 0; i < 50; ++i) q = bellman_optimal_backup(cycle, q);
        const auto ref = oracle::horizon_optimal(cycle, 50);
        CHECK(q(0, 0) == doctest::Approx(ref[0][0]).epsilon(1e-12));
        CHECK(q(1, 0) == doctest::Approx(ref[1][0]).epsilon(1e-12));
        // rollout from 0: rewards 0,1,0,1,... discounted by 0.5 -> 0.5/(1-0.25) = 2/3
        CHECK(q(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    }
    CHECK_THROWS_AS(bellman_optimal_backup(m, QTable(2, 1)), std::invalid_argument);
}

TEST_CASE("Bellman backup is a gamma-contraction") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const double gamma = 0.5 + 0.49 * uniform01(rng);
        const auto m = oracle::random_mdp(4, 3, gamma, rng);
        QTable a(4, 3), b(4, 3);
        for (auto& x : a.values()) x = 10.0 * (uniform01(rng) - 0.5);
        for (auto& x : b.values()) x = 10.0 * (uniform01(rng) - 0.5);
        const double before = sup_distance(a, b);
        const double after = sup_distance(bellman_optimal_backup(m, a), bellman_optimal_backup(m, b));
        CHECK(after <= gamma * before + 1e-12);
    }
}

TEST_CASE("value_iteration closed forms") {
    const auto q1 = value_iteration(one_state({1.0}), 1e-6);
    CHECK(std::abs(q1(0, 0) - 100.0) <= 1e-6);
    const auto q2 = value_iteration(one_state({0.0, 1.0}), 1e-6);
    CHECK(std::abs(q2(0, 0) - 99.0) <= 1e-6);
    CHECK(std::abs(q2(0, 1) - 100.0) <= 1e-6);
    const auto plain = value_iteration_plain(one_state({0.0, 1.0}), 1e-6);
    CHECK(sup_distance(plain, bellman_optimal_backup(one_state({0.0, 1.0}), plain)) <= 1e-6);
    CHECK_THROWS_AS(value_iteration(one_state({1.0}), 0.0), std::invalid_argument);
}

TEST_CASE("value_iteration matches the horizon-truncated oracle") {
    Rng rng(5);
    const double tol = 1e-6;
    for (int trial = 0; trial < 10; ++trial) {
        const auto m = oracle::random_mdp(3, 2, 0.95, rng);
        const auto q = value_iteration(m, tol);
        const auto ref = oracle::horizon_optimal(m, oracle::truncation_horizon(0.95, tol));
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 2; ++a) CHECK(std::abs(q(s, a) - ref[s][a]) <= 2 * tol);
        CHECK(sup_distance(q, bellman_optimal_backup(m, q)) <= tol);
        CHECK(sup_distance(value_iteration_plain(m, tol), q) <= 2 * tol / (1 - 0.95));
    }
}

TEST_CASE("solver outputs respect reward bounds") {
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = oracle::random_mdp(5, 2, 0.9, rng);
        const auto q = value_iteration(m, 1e-8);
        const auto qp = policy_evaluation(m, StationaryPolicy::uniform(5, 2), 1e-8);
        for (double x : q.values()) {
            CHECK(x >= m.min_reward() / 0.1 - 1e-8);
            CHECK(x <= m.max_reward() / 0.1 + 1e-8);
        }
        for (double x : qp.values()) {
            CHECK(x >= m.min_reward() / 0.1 - 1e-8);
            CHECK(x <= m.max_reward() / 0.1 + 1e-8);
        }
        CHECK(q.all_finite());
    }
}

TEST_CASE("policy_evaluation") {
    const auto m = one_state({0.0, 1.0});
    const auto q = policy_evaluation(m, StationaryPolicy::uniform(1, 2), 1e-6);
    CHECK(q(0, 0) == doctest::Approx(49.5).epsilon(1e-9));
    CHECK(q(0, 1) == doctest::Approx(50.5).epsilon(1e-9));

    SUBCASE("greedy policy on the optimum reproduces it") {
        Rng rng(7);
        for (int trial = 0; trial < 20; ++trial) {
            const auto mdp = oracle::random_mdp(4, 3, 0.99, rng);
            const auto opt = value_iteration(mdp, 1e-6);
            const auto qp = policy_evaluation(mdp, greedy_policy(opt, rng), 1e-6);
            CHECK(sup_distance(opt, qp) <= 2e-6);
        }
    }

    SUBCASE("agrees with the truncated policy backup") {
        Rng rng(8);
        const auto mdp = oracle::random_mdp(4, 2, 0.9, rng);
        StationaryPolicy pol(4, 2);
        for (int s = 0; s < 4; ++s) {
            pol(s, 0) = uniform01(rng);
            pol(s, 1) = 1.0 - pol(s, 0);
        }
        const auto q = policy_evaluation(mdp, pol, 1e-9);
        const auto ref = oracle::horizon_policy(mdp, pol, 400);
        for (int s = 0; s < 4; ++s)
            for (int a = 0; a < 2; ++a) CHECK(std::abs(q(s, a) - ref[s][a]) < 1e-9);
    }

    SUBCASE("agrees with Monte-Carlo returns") {
        Rng rng(9);
        const double gamma = 0.8;
        const auto mdp = oracle::random_mdp(3, 2, gamma, rng);
        StationaryPolicy pol(3, 2);
        for (int s = 0; s < 3; ++s) {
            pol(s, 0) = 0.25 + 0.5 * uniform01(rng);
            pol(s, 1) = 1.0 - pol(s, 0);
        }
        const auto q = policy_evaluation(mdp, pol, 1e-9);
        // Episodes of length 60 (tail < 0.8^60/(0.2) ~ 8e-6), 10^5 episodes from (0, 0).
        const int episodes = 100000;
        double sum = 0.0, sq = 0.0;
        for (int e = 0; e < episodes; ++e) {
            int s = 0, a = 0;
            double ret = 0.0, disc = 1.0;
            for (int t = 0; t < 60; ++t) {
                const auto tr = step(mdp, s, a, rng);
                ret += disc * tr.r;
                disc *= gamma;
                s = tr.s_next;
                a = pol.sample(s, rng);
            }
            sum += ret;
            sq += ret * ret;
        }
        const double mean = sum / episodes;
        const double se = std::sqrt((sq / episodes - mean * mean) / episodes);
        CHECK(std::abs(mean - q(0, 0)) < 3 * se + 1e-4);
    }
    CHECK_THROWS_AS(policy_evaluation(m, StationaryPolicy::uniform(2, 2)), std::invalid_argument);
}

TEST_CASE("greedy_policy and argmax") {
    Rng rng(10);
    QTable q(3, 3);
    q(0, 0) = 1, q(0, 1) = 2, q(0, 2) = 3;
    q(1, 0) = -1, q(1, 1) = -2, q(1, 2) = -3;
    const auto pol = greedy_policy(q, rng);
    CHECK(pol(0, 2) == 1.0);
    CHECK(pol(1, 0) == 1.0);
    pol.validate();

    const std::vector<double> tie{5.0, 5.0};
    int zeros = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) zeros += argmax_random(tie, rng) == 0;
    CHECK(std::abs(double(zeros) / n - 0.5) < 0.02);
    CHECK(argmax_first(tie) == 0);

    // no randomness consumed without ties
    Rng a(11), b(11);
    const std::vector<double> strict{1.0, 3.0, 2.0};
    CHECK(argmax_random(strict, a) == 1);
    CHECK(a() == b());
}

TEST_CASE("StationaryPolicy validation and sampling") {
    StationaryPolicy p(1, 2);
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p(0, 0) = 0.25;
    p(0, 1) = 0.75;
    p.validate();
    Rng rng(12);
    int ones = 0;
    for (int i = 0; i < 20000; ++i) ones += p.sample(0, rng);
    CHECK(std::abs(ones / 20000.0 - 0.75) < 0.015);
    CHECK(p.mode(0) == 1);
    const std::vector<int> acts{1};
    CHECK(StationaryPolicy::deterministic(2, acts)(0, 1) == 1.0);
}

TEST_CASE("MDP and QTable JSON round trip") {
    Rng rng(13);
    const auto m = oracle::random_mdp(3, 2, 0.9, rng);
    nlohmann::json j = m;
    CHECK(j.at("n_states") == 3);
    const auto back = mdp_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back == m);
    const auto q = value_iteration(m);
    nlohmann::json jq = q;
    CHECK(qtable_from_json(nlohmann::json::parse(jq.dump())) == q);
}
