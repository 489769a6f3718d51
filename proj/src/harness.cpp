/*
 Copyright 2026 The dualmpc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "dualmpc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dualmpc/rng.hpp"

namespace dmpc
{

  using json = nlohmann::json;

  namespace
  {

    void check_keys(const json &j, std::initializer_list<const char *> allowed, const std::string &ctx)
    {
      require(j.is_object(), ctx + ": expected an object");
      for (const auto &[key, _] : j.items())
      {
        bool ok = false;
        for (const char *a : allowed)
          ok = ok || key == a;
        require(ok, ctx + ": unknown field '" + key + "'");
      }
    }

    const json &field(const json &j, const char *key, const std::string &ctx)
    {
      require(j.contains(key), ctx + ": missing field '" + key + "'");
      return j.at(key);
    }

    double get_number(const json &j, const std::string &ctx)
    {
      require(j.is_number(), ctx + ": expected a number");
      return j.get<double>();
    }

    long long get_int(const json &j, const std::string &ctx)
    {
      require(j.is_number_integer(), ctx + ": expected an integer");
      return j.get<long long>();
    }

    bool get_bool(const json &j, const std::string &ctx)
    {
      require(j.is_boolean(), ctx + ": expected true or false");
      return j.get<bool>();
    }

    std::string get_string(const json &j, const std::string &ctx)
    {
      require(j.is_string(), ctx + ": expected a string");
      return j.get<std::string>();
    }

    VectorXd get_vector(const json &j, const std::string &ctx)
    {
      require(j.is_array() && !j.empty(), ctx + ": expected a non-empty array of numbers");
      VectorXd v(j.size());
      for (std::size_t i = 0; i < j.size(); ++i)
        v(i) = get_number(j[i], ctx + "[" + std::to_string(i) + "]");
      return v;
    }

    MatrixXd get_matrix(const json &j, const std::string &ctx)
    {
      require(j.is_array() && !j.empty(), ctx + ": expected a non-empty array of rows");
      const VectorXd first = get_vector(j[0], ctx + "[0]");
      MatrixXd m(j.size(), first.size());
      for (std::size_t i = 0; i < j.size(); ++i)
      {
        const VectorXd row = get_vector(j[i], ctx + "[" + std::to_string(i) + "]");
        require(row.size() == first.size(), ctx + ": rows differ in length");
        m.row(i) = row.transpose();
      }
      return m;
    }

    SolverOptions parse_solver(const json &j, const std::string &ctx)
    {
      check_keys(j,
                 {"max_iters", "grad_tol", "relative_grad_tol", "step_tol", "armijo_c1", "backtrack",
                  "max_backtracks", "memory"},
                 ctx);
      SolverOptions o;
      if (j.contains("max_iters"))
        o.max_iters = static_cast<int>(get_int(j["max_iters"], ctx + ".max_iters"));
      if (j.contains("grad_tol"))
        o.grad_tol = get_number(j["grad_tol"], ctx + ".grad_tol");
      if (j.contains("relative_grad_tol"))
        o.relative_grad_tol = get_bool(j["relative_grad_tol"], ctx + ".relative_grad_tol");
      if (j.contains("step_tol"))
        o.step_tol = get_number(j["step_tol"], ctx + ".step_tol");
      if (j.contains("armijo_c1"))
        o.armijo_c1 = get_number(j["armijo_c1"], ctx + ".armijo_c1");
      if (j.contains("backtrack"))
        o.backtrack = get_number(j["backtrack"], ctx + ".backtrack");
      if (j.contains("max_backtracks"))
        o.max_backtracks = static_cast<int>(get_int(j["max_backtracks"], ctx + ".max_backtracks"));
      if (j.contains("memory"))
        o.memory = static_cast<int>(get_int(j["memory"], ctx + ".memory"));
      return o;
    }

    ControllerSpec parse_controller(const json &j, const std::string &ctx, const InputBounds &bounds)
    {
      check_keys(j, {"kind", "label", "N", "L", "Ns", "tail_mode", "warm_start", "solver"}, ctx);
      ControllerSpec spec;
      ControllerConfig &c = spec.config;
      c.kind = controller_kind_from_string(get_string(field(j, "kind", ctx), ctx + ".kind"));
      spec.label = j.contains("label") ? get_string(j["label"], ctx + ".label") : to_string(c.kind);
      require(!spec.label.empty() && spec.label.find_first_of(",\"\n") == std::string::npos,
              ctx + ".label: must be non-empty without commas, quotes or newlines");
      if (j.contains("N"))
        c.N = static_cast<int>(get_int(j["N"], ctx + ".N"));
      if (j.contains("L"))
        c.L = static_cast<int>(get_int(j["L"], ctx + ".L"));
      if (j.contains("Ns"))
        c.Ns = static_cast<int>(get_int(j["Ns"], ctx + ".Ns"));
      if (j.contains("tail_mode"))
      {
        const std::string m = get_string(j["tail_mode"], ctx + ".tail_mode");
        require(m == "ce" || m == "taylor", ctx + ".tail_mode: expected 'ce' or 'taylor'");
        c.tail_mode = m == "ce" ? TailMode::CE : TailMode::Taylor;
      }
      if (j.contains("warm_start"))
        c.warm_start = get_bool(j["warm_start"], ctx + ".warm_start");
      if (j.contains("solver"))
        c.solver = parse_solver(j["solver"], ctx + ".solver");
      c.bounds = bounds;
      return spec;
    }

    StageCost parse_cost(const json &j, int nx, int nu)
    {
      const std::string ctx = "cost";
      require(j.is_object(), ctx + ": expected an object");
      const std::string kind = get_string(field(j, "kind", ctx), ctx + ".kind");
      if (kind == "quadratic")
      {
        check_keys(j, {"kind", "Q", "R", "Q_terminal"}, ctx);
        StageCost c = StageCost::quadratic(get_matrix(field(j, "Q", ctx), ctx + ".Q"),
                                           get_matrix(field(j, "R", ctx), ctx + ".R"));
        require(c.Q.rows() == nx && c.Q.cols() == nx, ctx + ".Q: expected " + std::to_string(nx) + "x" +
                                                          std::to_string(nx));
        require(c.R.rows() == nu && c.R.cols() == nu, ctx + ".R: expected " + std::to_string(nu) + "x" +
                                                          std::to_string(nu));
        if (j.contains("Q_terminal"))
        {
          const MatrixXd Qt = get_matrix(j["Q_terminal"], ctx + ".Q_terminal");
          require(Qt.rows() == nx && Qt.cols() == nx, ctx + ".Q_terminal: wrong size");
          c.Q_terminal = Qt;
        }
        return c;
      }
      if (kind == "linear")
      {
        check_keys(j, {"kind", "c", "c_terminal"}, ctx);
        StageCost c = StageCost::linear(get_vector(field(j, "c", ctx), ctx + ".c"));
        require(c.c.size() == nx, ctx + ".c: expected " + std::to_string(nx) + " entries");
        if (j.contains("c_terminal"))
        {
          const VectorXd ct = get_vector(j["c_terminal"], ctx + ".c_terminal");
          require(ct.size() == nx, ctx + ".c_terminal: wrong size");
          c.c_terminal = ct;
        }
        return c;
      }
      throw ContractError(ctx + ".kind: expected 'quadratic' or 'linear', got '" + kind + "'");
    }

    InputBounds default_bounds(const std::string &model, int nu)
    {
      if (model == "mountain_car")
        return InputBounds::uniform(nu, -1.0, 1.0);
      return InputBounds::uniform(nu, -10.0, 10.0);
    }

    std::vector<std::uint64_t> parse_seeds(const json &j)
    {
      std::vector<std::uint64_t> seeds;
      if (j.is_array())
      {
        for (std::size_t i = 0; i < j.size(); ++i)
        {
          require(j[i].is_number_unsigned(), "seeds[" + std::to_string(i) + "]: expected a non-negative integer");
          seeds.push_back(j[i].get<std::uint64_t>());
        }
      }
      else
      {
        check_keys(j, {"start", "count"}, "seeds");
        const long long start = j.contains("start") ? get_int(j["start"], "seeds.start") : 0;
        const long long count = get_int(field(j, "count", "seeds"), "seeds.count");
        require(start >= 0 && count >= 1, "seeds: need start >= 0 and count >= 1");
        for (long long i = 0; i < count; ++i)
          seeds.push_back(static_cast<std::uint64_t>(start + i));
      }
      require(!seeds.empty(), "seeds: at least one seed is required");
      std::set<std::uint64_t> uniq(seeds.begin(), seeds.end());
      require(uniq.size() == seeds.size(), "seeds: duplicates are not allowed");
      return seeds;
    }

    double ms_since(std::chrono::steady_clock::time_point t0)
    {
      return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }

  } // namespace

  std::string format_double(double v)
  {
    if (std::isnan(v))
      return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }

  ParamAffineModel ScenarioConfig::build_model() const { return make_builtin_model(model_name, model_params); }

  const ControllerSpec &ScenarioConfig::controller(const std::string &name) const
  {
    for (const auto &c : controllers)
      if (c.label == name)
        return c;
    for (const auto &c : controllers)
      if (to_string(c.config.kind) == name)
        return c;
    throw ContractError("no controller named '" + name + "' in the scenario");
  }

  ScenarioConfig parse_scenario(const std::string &json_text)
  {
    json j;
    try
    {
      j = json::parse(json_text);
    }
    catch (const json::parse_error &e)
    {
      throw ContractError(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(j,
               {"name", "model", "prior", "true_param", "initial_state", "T_sim", "target", "cost", "bounds",
                "controllers", "seeds", "workers", "output_dir", "histogram_cap", "timing"},
               "config");
    ScenarioConfig sc;

    const json &jm = field(j, "model", "config");
    check_keys(jm, {"name", "params"}, "model");
    sc.model_name = get_string(field(jm, "name", "model"), "model.name");
    if (jm.contains("params"))
    {
      require(jm["params"].is_object(), "model.params: expected an object");
      for (const auto &[k, v] : jm["params"].items())
        sc.model_params[k] = get_number(v, "model.params." + k);
    }
    const ParamAffineModel model = sc.build_model();
    const int nx = model.nx(), nu = model.nu(), nb = model.nb();

    const json &jp = field(j, "prior", "config");
    check_keys(jp, {"mean", "cov"}, "prior");
    const VectorXd prior_mean = get_vector(field(jp, "mean", "prior"), "prior.mean");
    const MatrixXd prior_cov = get_matrix(field(jp, "cov", "prior"), "prior.cov");
    require(prior_mean.size() == nb, "prior: expected " + std::to_string(nb) + " parameters");
    try
    {
      sc.prior = make_belief(prior_mean, prior_cov);
    }
    catch (const FactorizationError &)
    {
      throw ContractError("prior.cov: not positive semidefinite");
    }

    const json &jt = field(j, "true_param", "config");
    check_keys(jt, {"policy", "value"}, "true_param");
    const std::string policy = get_string(field(jt, "policy", "true_param"), "true_param.policy");
    if (policy == "fixed")
    {
      sc.true_param = get_vector(field(jt, "value", "true_param"), "true_param.value");
      require(sc.true_param.size() == nb, "true_param.value: expected " + std::to_string(nb) + " entries");
    }
    else
    {
      require(policy == "sample_prior", "true_param.policy: expected 'fixed' or 'sample_prior'");
      require(!jt.contains("value"), "true_param.value: only allowed with policy 'fixed'");
      sc.sample_true_param = true;
    }

    sc.initial_state = get_vector(field(j, "initial_state", "config"), "initial_state");
    require(sc.initial_state.size() == nx, "initial_state: expected " + std::to_string(nx) + " entries");
    if (j.contains("T_sim"))
      sc.T_sim = static_cast<int>(get_int(j["T_sim"], "T_sim"));
    require(sc.T_sim >= 1, "T_sim: must be positive");

    if (j.contains("target"))
    {
      const json &jg = j["target"];
      check_keys(jg, {"index", "threshold"}, "target");
      TargetPredicate t;
      t.index = static_cast<int>(get_int(field(jg, "index", "target"), "target.index"));
      t.threshold = get_number(field(jg, "threshold", "target"), "target.threshold");
      require(t.index >= 0 && t.index < nx, "target.index: out of range");
      sc.target = t;
    }

    sc.cost = parse_cost(field(j, "cost", "config"), nx, nu);

    sc.bounds = default_bounds(sc.model_name, nu);
    if (j.contains("bounds"))
    {
      const json &jb = j["bounds"];
      check_keys(jb, {"lower", "upper"}, "bounds");
      sc.bounds.lower = get_vector(field(jb, "lower", "bounds"), "bounds.lower");
      sc.bounds.upper = get_vector(field(jb, "upper", "bounds"), "bounds.upper");
    }
    sc.bounds.validate(nu);

    const json &jc = field(j, "controllers", "config");
    require(jc.is_array() && !jc.empty(), "controllers: expected a non-empty array");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < jc.size(); ++i)
    {
      const std::string ctx = "controllers[" + std::to_string(i) + "]";
      ControllerSpec spec = parse_controller(jc[i], ctx, sc.bounds);
      spec.config.validate(nu);
      require(labels.insert(spec.label).second, ctx + ": duplicate label '" + spec.label + "'");
      sc.controllers.push_back(std::move(spec));
    }

    sc.seeds = parse_seeds(field(j, "seeds", "config"));
    if (j.contains("workers"))
      sc.workers = static_cast<int>(get_int(j["workers"], "workers"));
    require(sc.workers >= 1, "workers: must be positive");
    if (j.contains("output_dir"))
      sc.output_dir = get_string(j["output_dir"], "output_dir");
    if (j.contains("histogram_cap"))
      sc.histogram_cap = static_cast<int>(get_int(j["histogram_cap"], "histogram_cap"));
    require(sc.histogram_cap >= 1, "histogram_cap: must be positive");
    if (j.contains("timing"))
      sc.timing = get_bool(j["timing"], "timing");
    if (j.contains("name"))
      get_string(j["name"], "name");
    return sc;
  }

  ScenarioConfig load_scenario(const std::string &path)
  {
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
  }

  VectorXd draw_true_param(const ScenarioConfig &sc, std::uint64_t seed)
  {
    if (!sc.sample_true_param)
      return sc.true_param;
    std::mt19937_64 gen(derive_seed(seed, kPurposeTheta, 0));
    return reparam_sample<double>(sc.prior, standard_normal(gen, sc.prior.dim()));
  }

  TrajectoryRecord run_closed_loop(const ScenarioConfig &sc, const ControllerSpec &ctrl, std::uint64_t seed)
  {
    const ParamAffineModel model = sc.build_model();
    TrajectoryRecord rec;
    rec.seed = seed;
    rec.controller = ctrl.label;
    rec.theta_true = draw_true_param(sc, seed);

    VectorXd x = sc.initial_state;
    GaussianBelief belief = sc.prior;
    std::optional<ControlDecision> prev;
    const bool adaptive = ctrl.config.kind != ControllerKind::CEMPC;
    try
    {
      for (int k = 0;; ++k)
      {
        TrajectoryStep step;
        step.k = k;
        step.x = x;
        step.belief = belief;
        const bool reached = sc.target && x(sc.target->index) > sc.target->threshold;
        if (reached || k == sc.T_sim)
        {
          step.u = VectorXd::Constant(model.nu(), std::numeric_limits<double>::quiet_NaN());
          step.stage_cost = terminal_cost<double>(sc.cost, x);
          rec.steps.push_back(std::move(step));
          break;
        }
        const auto t0 = std::chrono::steady_clock::now();
        ControlDecision d = controller_step(model, sc.cost, ctrl.config, x, belief,
                                            derive_seed(seed, kPurposeController, k), prev ? &*prev : nullptr);
        const double ms = ms_since(t0);
        step.u = d.u0;
        step.stage_cost = stage_cost<double>(sc.cost, x, d.u0);
        step.solve_iters = d.stats.iterations;
        step.solve_ms = sc.timing ? ms : 0.0;
        rec.steps.push_back(step);

        std::mt19937_64 gen(derive_seed(seed, kPurposeNoise, k));
        const VectorXd w = model.noise_chol() * standard_normal(gen, model.nw());
        const VectorXd x_next = eval_step_truth<double>(model, x, d.u0, rec.theta_true, w);
        if (!x_next.allFinite())
        {
          rec.aborted = true;
          rec.error = "non-finite state at k=" + std::to_string(k + 1);
          break;
        }
        if (adaptive)
          belief = update_from_transition<double>(model, belief, x, d.u0, x_next);
        x = x_next;
        prev = std::move(d);
      }
    }
    catch (const std::exception &e)
    {
      rec.aborted = true;
      rec.error = e.what();
    }
    if (sc.target && !rec.aborted)
      rec.k_goal = k_goal(rec, *sc.target);
    return rec;
  }

  std::optional<int> k_goal(const std::vector<VectorXd> &states, const TargetPredicate &target)
  {
    for (std::size_t k = 0; k < states.size(); ++k)
      if (states[k](target.index) > target.threshold)
        return static_cast<int>(k);
    return std::nullopt;
  }

  std::optional<int> k_goal(const TrajectoryRecord &rec, const TargetPredicate &target)
  {
    std::vector<VectorXd> xs;
    for (const auto &s : rec.steps)
      xs.push_back(s.x);
    return k_goal(xs, target);
  }

  double quantile(std::vector<double> v, double p)
  {
    require(!v.empty(), "quantile: empty sample");
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
  }

  ControllerSummary summarize(const std::string &controller, const std::vector<TrajectoryRecord> &runs,
                              const std::optional<TargetPredicate> &target, int cap, bool timing)
  {
    ControllerSummary s;
    s.controller = controller;
    std::vector<double> capped;
    double iters = 0.0, ms = 0.0;
    int solves = 0;
    if (target)
      s.histogram.assign(cap + 1, 0);
    for (const auto &r : runs)
    {
      if (r.controller != controller)
        continue;
      s.seeds.push_back(r.seed);
      s.k_goal.push_back(r.k_goal);
      s.aborted += r.aborted ? 1 : 0;
      for (const auto &st : r.steps)
      {
        if (std::isnan(st.u(0)))
          continue;
        iters += st.solve_iters;
        ms += st.solve_ms;
        ++solves;
      }
      if (target)
      {
        const int bin = r.k_goal && *r.k_goal < cap ? *r.k_goal : cap;
        ++s.histogram[bin];
        capped.push_back(bin);
      }
    }
    if (target)
    {
      s.failures = s.histogram[cap];
      if (!capped.empty())
      {
        s.median = quantile(capped, 0.5);
        s.q25 = quantile(capped, 0.25);
        s.q75 = quantile(capped, 0.75);
      }
    }
    else
    {
      s.failures = s.aborted;
    }
    s.mean_iterations = solves ? iters / solves : 0.0;
    if (timing)
      s.mean_solve_ms = solves ? ms / solves : 0.0;
    return s;
  }

  BenchmarkResult run_benchmark(const ScenarioConfig &sc)
  {
    const std::size_t nseeds = sc.seeds.size();
    const std::size_t jobs = sc.controllers.size() * nseeds;
    BenchmarkResult res;
    res.runs.resize(jobs);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < jobs; i = next++)
        res.runs[i] = run_closed_loop(sc, sc.controllers[i / nseeds], sc.seeds[i % nseeds]);
    };
    const int nthreads = std::max(1, std::min<int>(sc.workers, static_cast<int>(jobs)));
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t)
      pool.emplace_back(worker);
    worker();
    for (auto &t : pool)
      t.join();

    for (std::size_t c = 0; c < sc.controllers.size(); ++c)
    {
      auto first = res.runs.begin() + static_cast<std::ptrdiff_t>(c * nseeds);
      std::stable_sort(first, first + static_cast<std::ptrdiff_t>(nseeds),
                       [](const TrajectoryRecord &a, const TrajectoryRecord &b) { return a.seed < b.seed; });
    }
    res.summary.histogram_cap = sc.histogram_cap;
    for (const auto &c : sc.controllers)
      res.summary.controllers.push_back(summarize(c.label, res.runs, sc.target, sc.histogram_cap, sc.timing));
    return res;
  }

  std::string csv_header(int nx, int nu, int nb)
  {
    std::string h = "run_seed,controller,k";
    for (int i = 0; i < nx; ++i)
      h += ",x_" + std::to_string(i);
    for (int i = 0; i < nu; ++i)
      h += ",u_" + std::to_string(i);
    for (int i = 0; i < nb; ++i)
      h += ",belief_mean_" + std::to_string(i);
    for (int i = 0; i < nb * nb; ++i)
      h += ",belief_cov_" + std::to_string(i);
    return h + ",stage_cost,solve_iters,solve_ms";
  }

  void write_trajectory_csv(std::ostream &os, const std::vector<TrajectoryRecord> &runs, int nx, int nu, int nb)
  {
    os << csv_header(nx, nu, nb) << '\n';
    for (const auto &r : runs)
    {
      for (const auto &s : r.steps)
      {
        os << r.seed << ',' << r.controller << ',' << s.k;
        for (int i = 0; i < nx; ++i)
          os << ',' << format_double(s.x(i));
        for (int i = 0; i < nu; ++i)
          os << ',' << format_double(s.u(i));
        for (int i = 0; i < nb; ++i)
          os << ',' << format_double(s.belief.mean(i));
        for (int i = 0; i < nb; ++i)
          for (int j = 0; j < nb; ++j)
            os << ',' << format_double(s.belief.cov(i, j));
        os << ',' << format_double(s.stage_cost) << ',' << s.solve_iters << ',' << format_double(s.solve_ms)
           << '\n';
      }
    }
  }

  std::string summary_json(const BenchmarkSummary &s)
  {
    nlohmann::ordered_json j;
    j["histogram_cap"] = s.histogram_cap;
    std::vector<std::string> labels;
    for (int b = 0; b < s.histogram_cap; ++b)
      labels.push_back(std::to_string(b));
    labels.push_back(">=" + std::to_string(s.histogram_cap));
    j["bin_labels"] = labels;
    j["controllers"] = nlohmann::ordered_json::array();
    auto opt = [](const std::optional<double> &v) { return v ? nlohmann::ordered_json(*v) : nullptr; };
    for (const auto &c : s.controllers)
    {
      nlohmann::ordered_json e;
      e["controller"] = c.controller;
      e["runs"] = c.seeds.size();
      e["seeds"] = c.seeds;
      auto kg = nlohmann::ordered_json::array();
      for (const auto &k : c.k_goal)
        kg.push_back(k ? nlohmann::ordered_json(*k) : nullptr);
      e["k_goal"] = kg;
      e["histogram"] = c.histogram;
      e["failures"] = c.failures;
      e["aborted"] = c.aborted;
      e["median"] = opt(c.median);
      e["q25"] = opt(c.q25);
      e["q75"] = opt(c.q75);
      e["mean_iterations"] = c.mean_iterations;
      if (c.mean_solve_ms)
        e["mean_solve_ms"] = *c.mean_solve_ms;
      j["controllers"].push_back(e);
    }
    return j.dump(2) + "\n";
  }

  void write_benchmark(const BenchmarkResult &res, const ScenarioConfig &sc, const std::string &dir)
  {
    const ParamAffineModel model = sc.build_model();
    std::filesystem::create_directories(dir);
    std::ofstream csv(std::filesystem::path(dir) / "runs.csv", std::ios::binary);
    require(static_cast<bool>(csv), "cannot write runs.csv in '" + dir + "'");
    write_trajectory_csv(csv, res.runs, model.nx(), model.nu(), model.nb());
    std::ofstream js(std::filesystem::path(dir) / "summary.json", std::ios::binary);
    require(static_cast<bool>(js), "cannot write summary.json in '" + dir + "'");
    js << summary_json(res.summary);
  }

} // namespace dmpc
