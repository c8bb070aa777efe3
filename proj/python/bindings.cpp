#include "mcbrl/agents.hpp"
#include "mcbrl/belief.hpp"
#include "mcbrl/domains.hpp"
#include "mcbrl/harness.hpp"
#include "mcbrl/mdp.hpp"
#include "mcbrl/study.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

namespace py = pybind11;
using namespace mcbrl;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const QTable& q) {
    Array out({q.n_states(), q.n_actions()});
    std::copy(q.values().begin(), q.values().end(), out.mutable_data());
    return out;
}

FiniteMdp mdp_from_arrays(Array p, Array r, double discount, double reward_sd) {
    if (p.ndim() != 3 || r.ndim() != 2) throw std::invalid_argument("expected P[s, a, s'] and R[s, a]");
    const int ns = int(p.shape(0)), na = int(p.shape(1));
    if (p.shape(2) != ns || r.shape(0) != ns || r.shape(1) != na)
        throw std::invalid_argument("P and R shapes disagree");
    return FiniteMdp(ns, na, std::vector<double>(p.data(), p.data() + p.size()),
                     std::vector<double>(r.data(), r.data() + r.size()), discount, reward_sd);
}

Array transitions_of(const FiniteMdp& m) {
    Array out({m.n_states(), m.n_actions(), m.n_states()});
    double* d = out.mutable_data();
    for (int s = 0; s < m.n_states(); ++s)
        for (int a = 0; a < m.n_actions(); ++a)
            for (int k = 0; k < m.n_states(); ++k) *d++ = m.transition(s, a, k);
    return out;
}

Array rewards_of(const FiniteMdp& m) {
    Array out({m.n_states(), m.n_actions()});
    double* d = out.mutable_data();
    for (int s = 0; s < m.n_states(); ++s)
        for (int a = 0; a < m.n_actions(); ++a) *d++ = m.reward(s, a);
    return out;
}

StationaryPolicy policy_from_array(Array probs) {
    if (probs.ndim() != 2) throw std::invalid_argument("expected policy[s, a]");
    StationaryPolicy pol(int(probs.shape(0)), int(probs.shape(1)));
    for (int s = 0; s < pol.n_states(); ++s)
        for (int a = 0; a < pol.n_actions(); ++a) pol(s, a) = probs.at(s, a);
    pol.validate();
    return pol;
}

Array policy_to_array(const StationaryPolicy& pol) {
    Array out({pol.n_states(), pol.n_actions()});
    double* d = out.mutable_data();
    for (int s = 0; s < pol.n_states(); ++s)
        for (int a = 0; a < pol.n_actions(); ++a) *d++ = pol(s, a);
    return out;
}

py::object json_to_py(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json py_to_json(const py::object& o) {
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

AgentConfig agent_config(const py::dict& hyperparameters, double discount) {
    AgentConfig cfg;
    cfg.discount = discount;
    py_to_json(hyperparameters).get<Hyperparameters>().apply(cfg);
    return cfg;
}

py::dict record_to_dict(const RunRecord& r) {
    py::dict d;
    d["seed"] = r.seed;
    d["hyperparameters"] = json_to_py(nlohmann::json(r.hyperparameters));
    d["rewards"] = py::array_t<double>(py::ssize_t(r.rewards.size()), r.rewards.data());
    d["total"] = r.total;
    d["seconds"] = r.seconds;
    d["failed"] = r.failed;
    d["error"] = r.error;
    return d;
}

ExperimentConfig experiment(const py::dict& config, const std::string& domain, const std::string& agent) {
    auto j = py_to_json(config);
    j["domains"] = {domain};
    j["agents"] = {agent};
    try {
        return study_from_json(j).experiment(domain, agent);
    } catch (const ConfigError& e) {
        throw std::invalid_argument(e.what());
    }
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Monte-Carlo Bayesian reinforcement learning core";

    py::class_<FiniteMdp>(m, "FiniteMdp")
        .def(py::init(&mdp_from_arrays), py::arg("transitions"), py::arg("rewards"), py::arg("discount"),
             py::arg("reward_sd") = 0.0)
        .def_property_readonly("n_states", &FiniteMdp::n_states)
        .def_property_readonly("n_actions", &FiniteMdp::n_actions)
        .def_property_readonly("discount", &FiniteMdp::discount)
        .def_property_readonly("transitions", &transitions_of)
        .def_property_readonly("rewards", &rewards_of);

    m.def("value_iteration", [](const FiniteMdp& mdp, double tol) { return to_array(value_iteration(mdp, tol)); },
          py::arg("mdp"), py::arg("tol") = 1e-6);
    m.def("policy_evaluation",
          [](const FiniteMdp& mdp, Array policy, double tol) {
              return to_array(policy_evaluation(mdp, policy_from_array(policy), tol));
          },
          py::arg("mdp"), py::arg("policy"), py::arg("tol") = 1e-6);

    py::class_<BeliefState>(m, "Belief")
        .def(py::init([](int ns, int na) { return new_belief(ns, na); }), py::arg("n_states"), py::arg("n_actions"))
        .def_property_readonly("n_states", &BeliefState::n_states)
        .def_property_readonly("n_actions", &BeliefState::n_actions)
        .def_property_readonly("observations", &BeliefState::observations)
        .def("update", [](BeliefState& b, int s, int a, double r, int s_next) { b.update({s, a, r, s_next}); },
             py::arg("s"), py::arg("a"), py::arg("r"), py::arg("s_next"))
        .def("counts",
             [](const BeliefState& b) {
                 Array out({b.n_states(), b.n_actions(), b.n_states()});
                 std::copy(b.transitions().tensor().begin(), b.transitions().tensor().end(), out.mutable_data());
                 return out;
             })
        .def("reward_posterior",
             [](const BeliefState& b, int s, int a) {
                 const auto& ng = b.reward(s, a);
                 return py::make_tuple(ng.mean, ng.strength, ng.shape, ng.rate);
             })
        .def("sample_mdp",
             [](const BeliefState& b, double discount, std::uint64_t seed) {
                 Rng rng(seed);
                 return sample_mdp(b, discount, rng);
             },
             py::arg("discount"), py::arg("seed"))
        .def("mean_mdp", [](const BeliefState& b, double discount) { return mean_mdp(b, discount); },
             py::arg("discount"))
        .def("to_json", [](const BeliefState& b) { return json_to_py(nlohmann::json(b)); });

    m.def("umcbrl_plan",
          [](const BeliefState& b, int samples, double discount, double tol, std::uint64_t seed) {
              Rng rng(seed);
              return to_array(umcbrl_plan(b, samples, discount, tol, rng));
          },
          py::arg("belief"), py::arg("samples"), py::arg("discount"), py::arg("tol") = 1e-6, py::arg("seed") = 0);
    m.def("mcbrl_plan",
          [](const BeliefState& b, int samples, double discount, double tol, std::uint64_t seed) {
              Rng rng(seed);
              const auto plan = mcbrl_plan(b, samples, discount, tol, rng);
              return py::make_tuple(policy_to_array(plan.policy), to_array(plan.q));
          },
          py::arg("belief"), py::arg("samples"), py::arg("discount"), py::arg("tol") = 1e-6, py::arg("seed") = 0);

    m.def("agent_names", &agent_names);
    m.def("domain_names", &domain_names);
    m.def("domain_mdp",
          [](const std::string& name, double discount) -> py::object {
              auto spec = make_domain(name, discount);
              if (!spec.mdp) return py::none();
              return py::cast(*spec.mdp);
          },
          py::arg("name"), py::arg("discount") = 0.99);

    m.def("run",
          [](const std::string& domain, const std::string& agent, const py::dict& hyperparameters, int horizon,
             std::uint64_t seed, double discount) {
              const auto spec = make_domain(domain, discount);
              const auto cfg = agent_config(hyperparameters, discount);
              RunRecord rec;
              {
                  py::gil_scoped_release release;
                  rec = run_once(spec, agent, cfg, horizon, seed);
              }
              return record_to_dict(rec);
          },
          py::arg("domain"), py::arg("agent"), py::arg("hyperparameters") = py::dict(), py::arg("horizon") = 1000,
          py::arg("seed") = 0, py::arg("discount") = 0.99);

    m.def("tune",
          [](const py::dict& config, const std::string& domain, const std::string& agent) {
              const auto cfg = experiment(config, domain, agent);
              TuningResult r;
              {
                  py::gil_scoped_release release;
                  r = tune(cfg);
              }
              py::list points;
              for (std::size_t i = 0; i < r.points.size(); ++i)
                  points.append(py::make_tuple(json_to_py(nlohmann::json(r.points[i])), r.mean_totals[i]));
              return py::make_tuple(json_to_py(nlohmann::json(r.best)), points);
          },
          py::arg("config"), py::arg("domain"), py::arg("agent"));

    m.def("evaluate",
          [](const py::dict& config, const std::string& domain, const std::string& agent,
             const py::dict& hyperparameters) {
              const auto cfg = experiment(config, domain, agent);
              const auto hp = py_to_json(hyperparameters).get<Hyperparameters>();
              std::vector<RunRecord> records;
              {
                  py::gil_scoped_release release;
                  records = evaluate(cfg, hp);
              }
              const auto summary = summarize(cfg, hp, records);
              py::list runs;
              for (const auto& r : records) runs.append(record_to_dict(r));
              return py::make_tuple(json_to_py(nlohmann::json(summary)), runs);
          },
          py::arg("config"), py::arg("domain"), py::arg("agent"), py::arg("hyperparameters") = py::dict());

    m.def("bootstrap_ci",
          [](std::vector<double> values, int resamples, double level, std::uint64_t seed) {
              Rng rng(seed);
              const auto ci = bootstrap_ci(values, resamples, level, rng);
              return py::make_tuple(ci.lower, ci.mean, ci.upper);
          },
          py::arg("values"), py::arg("resamples") = 10000, py::arg("level") = 0.95, py::arg("seed") = 0);

    m.def("curve_svg", [](std::vector<double> curve, const std::string& title) { return curve_svg(curve, title); },
          py::arg("curve"), py::arg("title") = "");
}
