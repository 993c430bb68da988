#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "almostreg/ekeland.hpp"
#include "almostreg/ioffe.hpp"
#include "almostreg/linear.hpp"
#include "almostreg/perturb.hpp"
#include "almostreg/regularity.hpp"
#include "almostreg/scenario_schema.hpp"

namespace almostreg {

/// A validated, materialized scenario body; the argument is the scenario seed.
using Runner = std::function<json(std::uint64_t)>;
/// Validates a payload and returns its runner; throws SchemaError on bad input.
using RunnerBuilder = std::function<Runner(const Field&)>;

namespace ops {

inline constexpr std::size_t kReportedWitnesses = 8;

inline json check_report_json(const CheckReport& r) {
  json j;
  j["property"] = r.property;
  j["passed"] = r.passed;
  j["checked"] = r.checked;
  j["violation_count"] = r.violation_count;
  j["stabilized"] = r.stabilized;
  json w = json::array();
  for (std::size_t i = 0; i < r.violations.size() && i < kReportedWitnesses; ++i) {
    const Violation& v = r.violations[i];
    json e;
    e["x"] = point_json(v.x);
    e["y"] = point_json(v.y);
    e["v"] = point_json(v.v);
    if (v.t) e["t"] = num(*v.t);
    e["lhs"] = num(v.lhs);
    e["rhs"] = num(v.rhs);
    w.push_back(std::move(e));
  }
  j["witnesses"] = std::move(w);
  j["notes"] = r.notes;
  return j;
}

inline json modulus_json(const ModulusReport& r) {
  json j;
  j["kind"] = to_string(r.kind);
  j["lower"] = num(r.lower);
  j["upper"] = num(r.upper);
  j["gamma"] = num(r.gamma);
  j["grid_resolution"] = num(r.grid_resolution);
  j["resolution_limited"] = r.resolution_limited;
  json ladder = json::array();
  for (const GammaLevel& l : r.ladder) ladder.push_back({{"gamma", num(l.gamma)}, {"lower", num(l.lower)}, {"upper", num(l.upper)}});
  j["ladder"] = std::move(ladder);
  return j;
}

inline json criterion_json(const CriterionReport& r) {
  json j;
  j["passed"] = r.passed;
  j["checked"] = r.checked;
  j["violation_count"] = r.violation_count;
  json w = json::array();
  for (std::size_t i = 0; i < r.witnesses.size() && i < kReportedWitnesses; ++i) {
    const CriterionWitness& c = r.witnesses[i];
    w.push_back({{"eps", num(c.eps)}, {"u", point_json(c.u)}, {"y", point_json(c.y)}, {"residual", num(c.residual)}});
  }
  j["witnesses"] = std::move(w);
  return j;
}

inline json inequality_json(const InequalityReport& r) {
  json j;
  json rows = json::object();
  for (const InequalityRow& row : r.rows) rows[row.quantity] = {{"lower", num(row.lower)}, {"upper", num(row.upper)}};
  j["rows"] = std::move(rows);
  j["lhs"] = num(r.lhs);
  j["rhs"] = num(r.rhs);
  j["tol"] = num(r.tol);
  j["holds"] = r.holds;
  j["inconclusive"] = r.inconclusive;
  j["notes"] = r.notes;
  return j;
}

inline json condition_json(const ConditionReport& r) {
  json j;
  j["passed"] = r.passed;
  j["checked"] = r.checked;
  j["violation_count"] = r.violation_count;
  json w = json::array();
  for (std::size_t i = 0; i < r.witnesses.size() && i < kReportedWitnesses; ++i) w.push_back(points_json(r.witnesses[i]));
  j["witnesses"] = std::move(w);
  return j;
}

inline json linear_verdict_json(const LinearVerdict& v) {
  return {{"passed", v.passed}, {"skipped", v.skipped}, {"reason", v.reason}, {"lhs", num(v.lhs)}, {"rhs", num(v.rhs)}};
}

inline ModulusSearchConfig search_config(const Field& payload) {
  ModulusSearchConfig cfg;
  if (const auto f = payload.opt("search")) {
    if (const auto g = f->opt("grid_step")) cfg.grid_step = g->positive();
    if (const auto g = f->opt("gamma0")) cfg.gamma0 = g->positive();
    if (const auto g = f->opt("stabilization_tol")) cfg.stabilization_tol = g->positive();
    if (const auto g = f->opt("closure_tol")) cfg.closure_tol = g->positive();
    if (const auto g = f->opt("bisection_iterations")) cfg.bisection_iterations = static_cast<int>(g->count());
  }
  return cfg;
}

/// Instance fields shared by the property checks; gamma is required.
inline RegularityInstance regularity_instance(const Field& p) {
  RegularityInstance inst(schema::sampled_map(p["map"]));
  inst.U = schema::domain_subset(p["U"], inst.map);
  inst.V = schema::range_subset(p["V"], inst.map);
  inst.gamma = schema::gamma(p["gamma"], inst.map.domain().dim());
  inst.constant = p["constant"].positive();
  if (const auto f = p.opt("grid_step")) inst.grid_step = f->positive();
  if (const auto f = p.opt("closure_tol")) inst.closure_tol = f->positive();
  inst.eps_schedule = p.opt("eps_schedule") ? p["eps_schedule"].numbers() : default_eps_schedule(inst.tau());
  return inst;
}

inline std::vector<ExtReal> objective_values(const Field& f, const PointCloud& cloud) {
  std::vector<ExtReal> vals;
  if (f.raw().is_string()) {
    const Expression e = schema::expression(f, coordinate_variables("x", cloud.dim()));
    for (const Point& p : cloud) {
      const double v = e(p);
      if (v < 0.0) f.fail("objective is negative on the cloud");
      vals.push_back(ExtReal(v));
    }
    return vals;
  }
  if (f.size() != cloud.size()) f.fail("objective table size differs from the cloud size");
  for (std::size_t i = 0; i < f.size(); ++i) vals.push_back(f.at(i).ext());
  return vals;
}

inline PairSet pair_set(const Field& f, const SampledMap& g) {
  if (f.raw().is_array()) {
    std::vector<std::pair<Point, Point>> pairs;
    for (std::size_t i = 0; i < f.size(); ++i) pairs.emplace_back(f.at(i).at(0).point(), f.at(i).at(1).point());
    return PairSet(std::move(pairs));
  }
  std::vector<Point> xs;
  for (std::size_t i : schema::domain_subset(f["x"], g)) xs.push_back(g.domain()[i]);
  return PairSet::product(xs, schema::range_subset(f["y"], g));
}

inline EpsLambdaTable eps_lambda(const Field& p) {
  if (const auto t = p.opt("eps_lambda")) {
    EpsLambdaTable table;
    for (std::size_t i = 0; i < t->size(); ++i) table.emplace_back(t->at(i).at(0).positive(), t->at(i).at(1).positive());
    return table;
  }
  return default_eps_lambda(p["eps"].numbers());
}

template <class F>
auto guarded(const Field& f, F&& make) -> decltype(make()) {
  try {
    return make();
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    f.fail(e.what());
  }
}

// ---------------------------------------------------------------------------
// axioms

inline std::map<std::string, RunnerBuilder> axioms_ops() {
  std::map<std::string, RunnerBuilder> m;
  m["check_axioms"] = [](const Field& p) -> Runner {
    const PointCloud cloud = schema::cloud(p["cloud"]);
    const QuasiPremetric eta = schema::premetric(p["premetric"], cloud.dim(), &cloud);
    std::vector<std::vector<std::size_t>> seqs;
    if (const auto s = p.opt("sequences"))
      for (std::size_t i = 0; i < s->size(); ++i) {
        std::vector<std::size_t> seq;
        for (std::size_t k = 0; k < s->at(i).size(); ++k) seq.push_back(s->at(i).at(k).count());
        seqs.push_back(std::move(seq));
      }
    return [=](std::uint64_t) {
      const AxiomReport rep = check_axioms(eta, cloud, seqs);
      json j;
      json viol = json::object();
      for (Axiom a : {Axiom::A1, Axiom::A2, Axiom::A3, Axiom::A4}) {
        j[axiom_name(a)] = to_string(rep[a].status);
        json list = json::array();
        for (std::size_t i = 0; i < rep[a].violations.size() && i < kReportedWitnesses; ++i)
          list.push_back(rep[a].violations[i]);
        viol[axiom_name(a)] = std::move(list);
      }
      j["violations"] = std::move(viol);
      return j;
    };
  };
  m["eval_eta"] = [](const Field& p) -> Runner {
    const Point x = p["x"].point(), u = p["u"].point();
    const PointCloud cloud = p.has("cloud") ? schema::cloud(p["cloud"]) : PointCloud({x, u});
    const QuasiPremetric eta = schema::premetric(p["premetric"], x.size(), &cloud);
    if (x.size() != u.size()) p["u"].fail("dimension differs from x");
    return [=](std::uint64_t) { return json{{"value", num(eta(x, u))}}; };
  };
  m["eta_ball"] = [](const Field& p) -> Runner {
    const PointCloud cloud = schema::cloud(p["cloud"]);
    const QuasiPremetric eta = schema::premetric(p["premetric"], cloud.dim(), &cloud);
    const Point x = p["center"].point();
    const ExtReal r = p["radius"].ext();
    const bool closed = p.opt("closed") ? p["closed"].boolean() : false;
    if (!closed && !(r > ExtReal(0.0))) p["radius"].fail("open balls need a positive radius");
    return [=](std::uint64_t) {
      std::vector<Point> pts;
      for (std::size_t i : eta_ball(eta, cloud, x, r, closed)) pts.push_back(cloud[i]);
      return json{{"points", points_json(pts)}, {"size", pts.size()}};
    };
  };
  m["compare"] = [](const Field& p) -> Runner {
    const PointCloud cloud = schema::cloud(p["cloud"]);
    const QuasiPremetric a = schema::premetric(p["premetric"], cloud.dim(), &cloud);
    const QuasiPremetric b = schema::premetric(p["other"], cloud.dim(), &cloud);
    return [=](std::uint64_t) {
      std::size_t mismatches = 0;
      double dev = 0.0;
      for (const Point& x : cloud)
        for (const Point& u : cloud) {
          const ExtReal va = a(x, u), vb = b(x, u);
          if (va.is_infinite() != vb.is_infinite()) {
            ++mismatches;
          } else if (va.is_finite()) {
            const double d = std::abs(va.value() - vb.value());
            dev = std::max(dev, d);
            if (d > 1e-12) ++mismatches;
          }
        }
      return json{{"equal", mismatches == 0}, {"mismatches", mismatches}, {"max_deviation", num(dev)}};
    };
  };
  m["induce"] = [](const Field& p) -> Runner {
    const PointCloud cloud = schema::cloud(p["cloud"]);
    const Expression z = schema::expression(p["zeta"], pair_variables(cloud.dim()));
    std::vector<std::pair<Point, Point>> at;
    if (const auto f = p.opt("evaluate"))
      for (std::size_t i = 0; i < f->size(); ++i) at.emplace_back(f->at(i).at(0).point(), f->at(i).at(1).point());
    return [=](std::uint64_t) {
      const PartialMetric zeta = [z](const Point& x, const Point& u) {
        Point xu = x;
        xu.insert(xu.end(), u.begin(), u.end());
        return z(xu);
      };
      json j;
      try {
        const QuasiPremetric eta = induce_from_partial(zeta, cloud);
        j["accepted"] = true;
        json vals = json::array();
        for (const auto& [x, u] : at) vals.push_back(num(eta(x, u)));
        j["values"] = std::move(vals);
        const AxiomReport rep = check_axioms(eta, cloud);
        j["A1"] = to_string(rep[Axiom::A1].status);
        j["A2"] = to_string(rep[Axiom::A2].status);
      } catch (const PartialMetricViolation& e) {
        j["accepted"] = false;
        j["reason"] = e.what();
        const auto t = e.triple();
        j["witness"] = points_json({cloud[t[0]], cloud[t[1]], cloud[t[2]]});
      }
      return j;
    };
  };
  return m;
}

// ---------------------------------------------------------------------------
// ekeland

struct EkelandSetup {
  PointCloud cloud;
  QuasiPremetric eta;
  std::vector<ExtReal> values;
  Point x;
};

inline EkelandSetup ekeland_setup(const Field& p) {
  EkelandSetup s;
  s.cloud = schema::cloud(p["cloud"]);
  s.eta = p.has("premetric") ? schema::premetric(p["premetric"], s.cloud.dim(), &s.cloud) : euclidean_metric();
  s.values = objective_values(p["phi"], s.cloud);
  s.x = p["x"].point();
  if (!s.cloud.index_of(s.x)) p["x"].fail("start point is not in the cloud");
  if (!s.eta.claims(Axiom::A2)) p["premetric"].fail("premetric does not claim A2");
  return s;
}

inline json certificate_json(const EkelandCertificate& c) {
  return {{"point", point_json(c.point)},
          {"trace_position", c.trace_position},
          {"descent_ok", c.descent_ok},
          {"stationarity_ok", c.stationarity_ok},
          {"witnesses", c.witnesses}};
}

inline std::map<std::string, RunnerBuilder> ekeland_ops() {
  std::map<std::string, RunnerBuilder> m;
  m["trace"] = [](const Field& p) -> Runner {
    const EkelandSetup s = ekeland_setup(p);
    const std::vector<double> eps = p.has("eps") ? p["eps"].numbers() : std::vector<double>{};
    std::optional<std::size_t> budget;
    if (const auto b = p.opt("budget")) budget = b->count();
    return [=](std::uint64_t) {
      const Objective phi = objective_from_table(s.cloud, s.values);
      const EkelandTrace tr = generate_trace(s.cloud, s.eta, phi, s.x, budget);
      json j;
      j["points"] = points_json(tr.points);
      json vals = json::array(), alphas = json::array(), slack = json::array();
      for (const ExtReal& v : tr.values) vals.push_back(num(v));
      for (const ExtReal& a : tr.alphas) alphas.push_back(num(a));
      for (double v : tr.slack) slack.push_back(num(v));
      j["values"] = std::move(vals);
      j["alphas"] = std::move(alphas);
      j["slack"] = std::move(slack);
      j["length"] = tr.size();
      j["termination"] = to_string(tr.termination);
      json ver = json::array();
      for (double e : eps) {
        const TraceVerification v = verify_trace(s.cloud, tr, s.eta, phi, e);
        json row{{"eps", num(e)}, {"pairs_ok", v.pairs_ok}};
        row["n"] = v.n ? json(*v.n) : json(nullptr);
        ver.push_back(std::move(row));
      }
      j["verification"] = std::move(ver);
      return j;
    };
  };
  m["approx_point"] = [](const Field& p) -> Runner {
    const EkelandSetup s = ekeland_setup(p);
    const double eps = p["eps"].positive();
    return [=](std::uint64_t) {
      const Objective phi = objective_from_table(s.cloud, s.values);
      json j = certificate_json(approx_point(s.cloud, s.eta, phi, s.x, eps));
      j["descent_rhs"] = num(phi(s.x) + s.eta(s.x, s.x));
      return j;
    };
  };
  m["weak_point"] = [](const Field& p) -> Runner {
    const EkelandSetup s = ekeland_setup(p);
    return [=](std::uint64_t) {
      return certificate_json(weak_point(s.cloud, s.eta, objective_from_table(s.cloud, s.values), s.x));
    };
  };
  m["two_constant"] = [](const Field& p) -> Runner {
    const EkelandSetup s = ekeland_setup(p);
    const double delta = p["delta"].positive(), r = p["r"].positive();
    for (const ExtReal& v : s.values)
      if (v.is_infinite()) p["phi"].fail("two_constant needs a real-valued objective");
    return [=](std::uint64_t) {
      const std::function<double(const Point&)> phi = [&s](const Point& q) {
        return s.values[*s.cloud.index_of(q)].value();
      };
      const TwoConstantReport rep = two_constant_point(s.cloud, s.eta, phi, s.x, delta, r);
      return json{{"point", point_json(rep.point)}, {"inf_phi", num(rep.inf_phi)},
                  {"a", rep.a_ok},                  {"b", rep.b_ok},
                  {"c", rep.c_ok}};
    };
  };
  return m;
}

// ---------------------------------------------------------------------------
// regularity

inline std::map<std::string, RunnerBuilder> regularity_ops() {
  std::map<std::string, RunnerBuilder> m;
  m["check"] = [](const Field& p) -> Runner {
    const RegularityInstance inst = regularity_instance(p);
    const std::string prop = p["property"].string();
    if (prop != "O" && prop != "R" && prop != "Linv") p["property"].fail("expected O, R or Linv");
    return [=](std::uint64_t) {
      if (prop == "O") return check_report_json(check_O(inst));
      if (prop == "R") return check_report_json(check_R(inst));
      return check_report_json(check_Linv(inst));
    };
  };
  m["equivalence"] = [](const Field& p) -> Runner {
    const RegularityInstance inst = regularity_instance(p);
    return [=](std::uint64_t) {
      const EquivalenceReport r = equivalence_suite(inst);
      return json{{"O", check_report_json(r.openness)},
                  {"R", check_report_json(r.regularity)},
                  {"Linv", check_report_json(r.inverse)},
                  {"agree", r.agree},
                  {"notes", r.notes}};
    };
  };
  m["closed_ball"] = [](const Field& p) -> Runner {
    const RegularityInstance inst = regularity_instance(p);
    return [=](std::uint64_t) { return check_report_json(closed_ball_variant(inst)); };
  };
  m["project"] = [](const Field& p) -> Runner {
    const RegularityInstance inst = regularity_instance(p);
    const double alpha = p["alpha"].positive();
    if (!(alpha < 1.0 / inst.constant)) p["alpha"].fail("alpha must lie in (0, 1/c)");
    return [=](std::uint64_t) {
      const CheckReport a = check_O(inst);
      const CheckReport b = check_O(project_instance(inst, alpha));
      return json{{"original", a.passed}, {"projected", b.passed}, {"agree", a.passed == b.passed}};
    };
  };
  m["sequence"] = [](const Field& p) -> Runner {
    const SampledMap g = schema::sampled_map(p["map"]);
    const Point x = p["x"].point(), y = p["y"].point();
    const double kappa = p["kappa"].positive(), eps = p["eps"].positive();
    return [=](std::uint64_t) {
      const SequenceCharacterization s = sequence_characterization(g, x, y, kappa, eps);
      json d = json::array();
      for (double v : s.distances) d.push_back(num(v));
      return json{{"ys", points_json(s.ys)},      {"distances", std::move(d)},
                  {"bound", num(s.bound)},        {"sequence_ok", s.sequence_ok},
                  {"inequality_ok", s.inequality_ok}, {"consistent", s.consistent}};
    };
  };
  m["modulus"] = [](const Field& p) -> Runner {
    const SampledMap g = schema::sampled_map(p["map"]);
    const Point x = p["x"].point(), y = p["y"].point();
    const ModulusKind kind = schema::modulus_kind(p["kind"]);
    const ModulusSearchConfig cfg = search_config(p);
    if (!g.contains(x, y)) p["y"].fail("(x, y) is not on the graph");
    return [=](std::uint64_t) { return modulus_json(estimate_modulus(g, x, y, kind, cfg)); };
  };
  m["product_law"] = [](const Field& p) -> Runner {
    const SampledMap g = schema::sampled_map(p["map"]);
    const Point x = p["x"].point(), y = p["y"].point();
    const Field kf = p["kinds"];
    if (kf.size() != 2) kf.fail("expected two modulus kinds");
    const ModulusKind k1 = schema::modulus_kind(kf.at(0)), k2 = schema::modulus_kind(kf.at(1));
    const ModulusSearchConfig cfg = search_config(p);
    const double tol = p.has("tol") ? p["tol"].positive() : 0.05;
    if (!g.contains(x, y)) p["y"].fail("(x, y) is not on the graph");
    return [=](std::uint64_t) {
      const ModulusReport r1 = estimate_modulus(g, x, y, k1, cfg);
      const ModulusReport r2 = estimate_modulus(g, x, y, k2, cfg);
      const ProductLawVerdict v = verify_product_laws(r1, r2, tol);
      return json{{"law", v.law},
                  {"holds", v.holds},
                  {"lower", num(v.lower)},
                  {"upper", num(v.upper)},
                  {"gamma", num(v.gamma)},
                  {"first", modulus_json(r1)},
                  {"second", modulus_json(r2)}};
    };
  };
  return m;
}

// ---------------------------------------------------------------------------
// ioffe

inline ImprovementOracle descent_oracle(const Field& f, const std::function<Point(const Point&)>& g, std::size_t dim,
                                        double c) {
  const std::string type = f["type"].string();
  if (type == "newton") {
    const Field jf = f["jacobian"];
    std::vector<Expression> entries;
    const std::size_t rows = jf.size();
    std::size_t cols = 0;
    for (std::size_t i = 0; i < rows; ++i) {
      cols = jf.at(i).size();
      for (std::size_t k = 0; k < cols; ++k)
        entries.push_back(schema::expression(jf.at(i).at(k), coordinate_variables("x", dim)));
    }
    return newton_oracle(g, [entries, rows, cols](const Point& u) {
      std::vector<double> a;
      for (const Expression& e : entries) a.push_back(e(u));
      return DenseMatrix(rows, cols, a);
    });
  }
  if (type == "grid-scan") return grid_scan_oracle(schema::cloud(f["cloud"]), g, c);
  if (type == "coordinate-scan")
    return coordinate_scan_oracle(g, c, f["initial_step"].positive(), f["min_step"].positive());
  f["type"].fail("unknown oracle '" + type + "'");
}

inline std::map<std::string, RunnerBuilder> ioffe_ops() {
  std::map<std::string, RunnerBuilder> m;
  m["criterion"] = [](const Field& p) -> Runner {
    const SampledMap g = schema::sampled_map(p["map"]);
    guarded(p["map"], [&] {
      detail::require_single_valued(g);
      return 0;
    });
    const PairSet W = pair_set(p["W"], g);
    if (W.empty()) p["W"].fail("W is empty");
    const double c = p["c"].positive();
    const GammaFn gamma = schema::gamma(p["gamma"], g.domain().dim());
    const EpsLambdaTable table = guarded(p, [&] {
      EpsLambdaTable t = eps_lambda(p);
      detail::validate_table(t);
      return t;
    });
    CriterionConstraint form = CriterionConstraint::exact;
    if (const auto f = p.opt("constraint")) {
      const std::string name = f->string();
      if (name == "lipschitz-gamma") form = CriterionConstraint::lipschitz_gamma;
      else if (name != "exact") f->fail("expected exact or lipschitz-gamma");
    }
    return [=](std::uint64_t) {
      const CriterionReport cr = check_criterion(g, W, c, gamma, table, form);
      const ConclusionVerdict v = conclude_O(cr, g, W, c, gamma);
      return json{{"constraint", to_string(form)},
                  {"criterion", criterion_json(cr)},
                  {"openness", check_report_json(v.openness)},
                  {"implication_holds", v.implication_holds}};
    };
  };
  m["setvalued_criterion"] = [](const Field& p) -> Runner {
    const SampledMap G = schema::sampled_map(p["map"]);
    const PairSet W = pair_set(p["W"], G);
    const double c = p["c"].positive(), alpha = p["alpha"].positive();
    if (!(alpha < 1.0 / c)) p["alpha"].fail("alpha must lie in (0, 1/c)");
    const GammaFn gamma = schema::gamma(p["gamma"], G.domain().dim());
    const EpsLambdaTable table = eps_lambda(p);
    return [=](std::uint64_t) {
      const SetValuedCriterionReport r = setvalued_criterion(G, W, c, alpha, gamma, table);
      return json{{"passed", r.passed},
                  {"agree", r.agree},
                  {"projected", criterion_json(r.projected)},
                  {"direct", criterion_json(r.direct)}};
    };
  };
  m["descent"] = [](const Field& p) -> Runner {
    const Point x = p["x"].point(), y = p["y"].point();
    DescentProblem prob;
    prob.g = schema::vector_function(p["g"], x.size());
    if (const auto f = p.opt("gamma")) prob.gamma = f->ext();
    const double c = p["c"].positive();
    const ImprovementOracle oracle = descent_oracle(p["oracle"], prob.g, x.size(), c);
    const double target = p["target_eps"].positive();
    const std::size_t budget = p.has("budget") ? p["budget"].count() : 1000;
    std::function<double(double)> lambda = [](double e) { return std::min(1.0, e); };
    if (const auto f = p.opt("lambda")) {
      const Expression le = schema::expression(*f, {{"eps", 0}});
      lambda = [le](double e) { return le(Point{e}); };
    }
    if (prob.g(x).size() != y.size()) p["y"].fail("dimension differs from g(x)");
    return [=](std::uint64_t) {
      const DescentTrace tr = descent_solve(prob, x, y, c, oracle, lambda, target, budget);
      json res = json::array();
      for (double r : tr.residuals) res.push_back(num(r));
      return json{{"status", to_string(tr.status)},
                  {"iterations", tr.iterates.size()},
                  {"final", point_json(tr.iterates.back())},
                  {"final_residual", num(tr.residuals.back())},
                  {"radius_bound", num(tr.radius_bound)},
                  {"residuals", std::move(res)},
                  {"rejected", tr.rejected.size()}};
    };
  };
  m["milyutin"] = [](const Field& p) -> Runner {
    const PointCloud X = schema::cloud(p["X"]);
    const Point x = p["x"].point();
    if (!X.index_of(x)) p["x"].fail("point is not in X");
    const SampledMap identity = SampledMap::from_function(X, [](const Point& q) { return q; });
    std::vector<Point> members;
    for (std::size_t i : schema::domain_subset(p["U"], identity)) members.push_back(X[i]);
    if (members.empty()) p["U"].fail("U is empty");
    const PointCloud U(members);
    return [=](std::uint64_t) {
      return json{{"gamma", U.index_of(x) ? num(milyutin_gamma(U, X, x)) : num(0.0)}};
    };
  };
  m["shrink_beta"] = [](const Field& p) -> Runner {
    const double a = p["a"].positive(), b = p["b"].positive(), c = p["c"].positive(), r = p["r"].positive();
    std::optional<SampledMap> g;
    Point x, y;
    double step = 0.01;
    if (p.has("map")) {
      g = schema::sampled_map(p["map"]);
      x = p["x"].point();
      y = p["y"].point();
      if (const auto f = p.opt("grid_step")) step = f->positive();
    }
    return [=](std::uint64_t) {
      json j{{"beta", num(shrink_beta(a, b, c, r))}};
      if (g) {
        const ShrinkBetaCheck s = shrink_beta_check(*g, x, y, a, b, c, r, step);
        j["hypothesis"] = s.hypothesis.passed;
        j["conclusion"] = s.conclusion.passed;
      }
      return j;
    };
  };
  m["semilocal"] = [](const Field& p) -> Runner {
    const double r = p["r"].positive(), c = p["c"].positive();
    std::optional<SampledMap> g;
    Point x;
    double step = 0.01;
    if (p.has("map")) {
      g = schema::sampled_map(p["map"]);
      x = p["x"].point();
      if (const auto f = p.opt("grid_step")) step = f->positive();
    }
    return [=](std::uint64_t) {
      json j{{"delta", num(semilocal_region(r, c))}};
      if (g) j["inclusion"] = check_report_json(semilocal_check(*g, x, r, c, step));
      return j;
    };
  };
  return m;
}

// ---------------------------------------------------------------------------
// perturb

struct SetValuedTriple {
  SampledMap F, H;
  Point x, z, w;
};

inline SetValuedTriple setvalued_triple(const Field& p) {
  SetValuedTriple t{schema::sampled_map(p["F"]), schema::sampled_map(p["H"]), p["x"].point(), p["z"].point(),
                    p["w"].point()};
  if (!t.F.contains(t.x, t.z)) p["z"].fail("z is not a value of F at x");
  if (!t.H.contains(t.x, t.w)) p["w"].fail("w is not a value of H at x");
  return t;
}

inline std::map<std::string, RunnerBuilder> perturb_ops() {
  std::map<std::string, RunnerBuilder> m;
  m["lip"] = [](const Field& p) -> Runner {
    const PointCloud cloud = schema::cloud(p["cloud"]);
    const auto h = schema::vector_function(p["h"], cloud.dim());
    const Point x = p["x"].point();
    const double radius = p["radius"].positive();
    return [=](std::uint64_t) { return json{{"value", num(estimate_lip(h, x, radius, cloud).value)}}; };
  };
  m["lg_single"] = [](const Field& p) -> Runner {
    const SampledMap F = schema::sampled_map(p["F"]);
    const auto h = schema::vector_function(p["h"], F.domain().dim());
    const Point x = p["x"].point(), z = p["z"].point();
    if (!F.contains(x, z)) p["z"].fail("z is not a value of F at x");
    const ModulusSearchConfig cfg = search_config(p);
    return [=](std::uint64_t) { return inequality_json(lg_single_check(F, h, x, z, cfg)); };
  };
  m["graves"] = [](const Field& p) -> Runner {
    const PointCloud dom = schema::cloud(p["domain"]);
    const auto f = schema::vector_function(p["f"], dom.dim());
    const auto g = schema::vector_function(p["g"], dom.dim());
    const Point x = p["x"].point();
    const double radius = p["radius"].positive();
    const double tau0 = p.has("tau0") ? p["tau0"].positive() : 0.1;
    const ModulusSearchConfig cfg = search_config(p);
    return [=](std::uint64_t) {
      const GravesVerdict v = graves_check(f, g, dom, x, radius, cfg, tau0);
      json ladder = json::array();
      for (double l : v.lip_ladder) ladder.push_back(num(l));
      return json{{"skipped", v.skipped}, {"inconclusive", v.inconclusive}, {"holds", v.holds},
                  {"sur_f", num(v.sur_f)}, {"sur_g", num(v.sur_g)},         {"allowed", num(v.allowed)},
                  {"lip_ladder", std::move(ladder)}, {"reason", v.reason}};
    };
  };
  m["lg_setvalued"] = [](const Field& p) -> Runner {
    const SetValuedTriple t = setvalued_triple(p);
    const Field kf = p["constants"];
    PerturbationConstants k;
    k.c = kf["c"].positive();
    k.c_prime = kf["c_prime"].positive();
    k.ell = kf["ell"].positive();
    k.a = kf["a"].ext();
    k.b = kf["b"].ext();
    k.r = kf["r"].ext();
    k.delta = kf["delta"].ext();
    if (!(k.ell < k.c && k.c < k.c_prime)) kf.fail("constants must satisfy ell < c < c_prime");
    const double step = p.has("grid_step") ? p["grid_step"].positive() : 0.01;
    return [=](std::uint64_t) {
      const ABCReport r = lg_setvalued_check(t.F, t.H, t.x, t.z, t.w, k, step);
      json j{{"lambda", num(r.constants.lambda)},
             {"alpha", num(r.constants.alpha)},
             {"A", condition_json(r.A)},
             {"B", condition_json(r.B)},
             {"C", condition_json(r.C)},
             {"hypotheses_hold", r.hypotheses_hold}};
      j["conclusion"] = r.conclusion ? check_report_json(*r.conclusion) : json(nullptr);
      j["notes"] = r.notes;
      return j;
    };
  };
  m["constants_cor56"] = [](const Field& p) -> Runner {
    const double c = p["c"].positive(), ell = p["ell"].number(), diam = p["diamH"].number();
    const double a = p["a"].positive(), b = p["b"].positive();
    if (!(ell < c)) p["ell"].fail("need ell < c");
    return [=](std::uint64_t) {
      const BetaInterval bi = constants_cor56(c, ell, diam, a, b);
      return json{{"empty", bi.empty}, {"upper", num(bi.upper)}, {"from_a", num(bi.from_a)}, {"from_b", num(bi.from_b)}};
    };
  };
  m["sum_stability"] = [](const Field& p) -> Runner {
    const SetValuedTriple t = setvalued_triple(p);
    const std::vector<double> xis = p["xi"].numbers();
    const double step = p.has("grid_step") ? p["grid_step"].positive() : 0.01;
    return [=](std::uint64_t) {
      const SumStabilityReport r = sum_stability_check(t.F, t.H, t.x, t.z, t.w, xis, step);
      json beta = json::array();
      for (double b : r.beta) beta.push_back(num(b));
      return json{{"stable", r.stable}, {"beta", std::move(beta)}, {"notes", r.notes}};
    };
  };
  m["lg_sumstable"] = [](const Field& p) -> Runner {
    const SetValuedTriple t = setvalued_triple(p);
    const ModulusSearchConfig cfg = search_config(p);
    return [=](std::uint64_t) { return inequality_json(lg_sumstable_check(t.F, t.H, t.x, t.z, t.w, cfg)); };
  };
  return m;
}

// ---------------------------------------------------------------------------
// linear

struct LinearSetup {
  DenseMatrix A;
  NormSpec nx, ny;
};

inline LinearSetup linear_setup(const Field& p, const std::string& key = "A") {
  const DenseMatrix A = schema::matrix(p[key]);
  NormKind kx = NormKind::euclidean, ky = NormKind::euclidean;
  if (const auto n = p.opt("norms")) {
    if (const auto f = n->opt("x")) kx = schema::norm_kind(*f);
    if (const auto f = n->opt("y")) ky = schema::norm_kind(*f);
  }
  return {A, NormSpec(kx, A.cols()), NormSpec(ky, A.rows())};
}

inline std::map<std::string, RunnerBuilder> linear_ops() {
  std::map<std::string, RunnerBuilder> m;
  m["sur"] = [](const Field& p) -> Runner {
    const LinearSetup s = linear_setup(p);
    SurMethod method = default_method(s.nx, s.ny);
    if (const auto f = p.opt("method")) {
      const std::string name = f->string();
      if (name == "svd") method = SurMethod::svd;
      else if (name == "grid") method = SurMethod::grid;
      else f->fail("expected svd or grid");
    }
    if (method == SurMethod::svd && default_method(s.nx, s.ny) != SurMethod::svd)
      p["method"].fail("the svd method needs euclidean norms");
    return [=](std::uint64_t) {
      const LinearModulusReport r = sur_modulus(s.A, s.nx, s.ny, method);
      return json{{"value", num(r.value)}, {"lower", num(r.lower)}, {"upper", num(r.upper)},
                  {"method", method == SurMethod::svd ? "svd" : "grid"}, {"mesh_size", r.mesh_size}};
    };
  };
  m["opnorm"] = [](const Field& p) -> Runner {
    const LinearSetup s = linear_setup(p);
    return [=](std::uint64_t) { return json{{"value", num(opnorm(s.A, s.nx, s.ny))}}; };
  };
  m["injectivity"] = [](const Field& p) -> Runner {
    const LinearSetup s = linear_setup(p);
    return [=](std::uint64_t) { return json{{"value", num(injectivity_bound(s.A, s.nx, s.ny))}}; };
  };
  m["harte"] = [](const Field& p) -> Runner {
    const LinearSetup s = linear_setup(p);
    return [=](std::uint64_t) { return linear_verdict_json(harte_check(s.A, s.nx, s.ny)); };
  };
  m["sur_lipschitz"] = [](const Field& p) -> Runner {
    const LinearSetup s = linear_setup(p);
    const DenseMatrix B = schema::matrix(p["B"]);
    if (B.rows() != s.A.rows() || B.cols() != s.A.cols()) p["B"].fail("shape differs from A");
    return [=](std::uint64_t) { return linear_verdict_json(sur_lipschitz_check(s.A, B, s.nx, s.ny)); };
  };
  m["open_set"] = [](const Field& p) -> Runner {
    const LinearSetup s = linear_setup(p);
    const std::size_t samples = p.has("samples") ? p["samples"].count() : 100;
    const double fraction = p.has("fraction") ? p["fraction"].positive() : 0.99;
    return [=](std::uint64_t seed) {
      const OpenSetReport r = open_set_check(s.A, s.nx, s.ny, samples, seed, fraction);
      return json{{"passed", r.passed},
                  {"samples", r.samples},
                  {"base_modulus", num(r.base_modulus)},
                  {"min_perturbed", num(r.min_perturbed)},
                  {"max_perturbation", num(r.max_perturbation)}};
    };
  };
  return m;
}

}  // namespace ops

/// Operation tables by scenario kind.
inline const std::map<std::string, std::map<std::string, RunnerBuilder>>& operation_registry() {
  static const std::map<std::string, std::map<std::string, RunnerBuilder>> reg{
      {"axioms", ops::axioms_ops()},         {"ekeland", ops::ekeland_ops()}, {"regularity", ops::regularity_ops()},
      {"ioffe", ops::ioffe_ops()},           {"perturb", ops::perturb_ops()}, {"linear", ops::linear_ops()},
  };
  return reg;
}

}  // namespace almostreg
