#include "core/config.hpp"

#include <fstream>
#include <sstream>

#include "core/errors.hpp"
#include "core/expression.hpp"

namespace synckit {

namespace {

using nlohmann::json;

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw_usage("config field '" + field + "': " + why);
}

double require_number(const json& j, const std::string& field) {
  if (!j.is_number()) bad_field(field, "expected a number");
  return j.get<double>();
}

int require_int(const json& j, const std::string& field) {
  if (!j.is_number_integer()) bad_field(field, "expected an integer");
  return j.get<int>();
}

ExprPtr compile_entry(const json& j, const std::vector<std::string>& symbols,
                      const std::string& field) {
  if (j.is_number()) return Expr::constant(j.get<double>());
  if (!j.is_string()) bad_field(field, "expected an expression string or number");
  try {
    return parse_expression(j.get<std::string>(), symbols);
  } catch (const Error& e) {
    bad_field(field, e.what());
  }
}

std::vector<ExprPtr> compile_vector(const json& j, const std::vector<std::string>& symbols,
                                    const std::string& field) {
  if (!j.is_array() || j.empty()) bad_field(field, "expected a nonempty array of expressions");
  std::vector<ExprPtr> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(compile_entry(j[i], symbols, field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<std::vector<ExprPtr>> compile_matrix(const json& j,
                                                 const std::vector<std::string>& symbols,
                                                 const std::string& field) {
  if (!j.is_array() || j.empty()) bad_field(field, "expected a nonempty array of rows");
  std::vector<std::vector<ExprPtr>> rows;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array()) bad_field(field, "row " + std::to_string(i) + " is not an array");
    rows.push_back(compile_vector(j[i], symbols, field + "[" + std::to_string(i) + "]"));
    if (rows.back().size() != rows.front().size()) {
      bad_field(field, "ragged rows");
    }
  }
  return rows;
}

bool all_constant(const std::vector<std::vector<ExprPtr>>& m) {
  for (const auto& row : m) {
    for (const auto& e : row) {
      if (e->kind() != Expr::Kind::constant) return false;
    }
  }
  return true;
}

VectorFn vector_fn(std::vector<ExprPtr> exprs) {
  return [exprs = std::move(exprs)](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    Eigen::VectorXd out(exprs.size());
    for (std::size_t i = 0; i < exprs.size(); ++i) out[static_cast<int>(i)] = exprs[i]->eval(z);
    return out;
  };
}

MatrixFn matrix_fn(std::vector<std::vector<ExprPtr>> rows) {
  return [rows = std::move(rows)](const Eigen::VectorXd& z) -> Eigen::MatrixXd {
    Eigen::MatrixXd out(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < rows[i].size(); ++j) {
        out(static_cast<int>(i), static_cast<int>(j)) = rows[i][j]->eval(z);
      }
    }
    return out;
  };
}

ScalarFn scalar_fn(ExprPtr e) {
  return [e = std::move(e)](const Eigen::VectorXd& z) { return e->eval(z); };
}

RowVectorFn gradient_fn(const ExprPtr& e, int dim) {
  std::vector<ExprPtr> partials;
  for (int k = 0; k < dim; ++k) partials.push_back(e->diff(k));
  return [partials](const Eigen::VectorXd& z) -> Eigen::RowVectorXd {
    Eigen::RowVectorXd out(partials.size());
    for (std::size_t k = 0; k < partials.size(); ++k) out[static_cast<int>(k)] = partials[k]->eval(z);
    return out;
  };
}

MatrixFn jacobian_fn(const std::vector<ExprPtr>& components, int dim) {
  std::vector<std::vector<ExprPtr>> rows;
  for (const auto& c : components) {
    std::vector<ExprPtr> row;
    for (int k = 0; k < dim; ++k) row.push_back(c->diff(k));
    rows.push_back(std::move(row));
  }
  return matrix_fn(std::move(rows));
}

// Analytic directional derivative of an expression matrix:
// dP(v, z) = sum_k v_k (dP/dz_k)(z).
std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> metric_derivative_fn(
    const std::vector<std::vector<ExprPtr>>& P, int dim) {
  std::vector<std::vector<std::vector<ExprPtr>>> partials(dim);
  for (int k = 0; k < dim; ++k) {
    for (const auto& row : P) {
      std::vector<ExprPtr> drow;
      for (const auto& e : row) drow.push_back(e->diff(k));
      partials[k].push_back(std::move(drow));
    }
  }
  const int n = static_cast<int>(P.size());
  return [partials, n](const Eigen::VectorXd& v, const Eigen::VectorXd& z) -> Eigen::MatrixXd {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < v.size(); ++k) {
      if (v[k] == 0.0) continue;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) out(i, j) += v[k] * partials[k][i][j]->eval(z);
      }
    }
    return out;
  };
}

std::shared_ptr<CommGraph> parse_graph(const json& j) {
  if (!j.is_object()) bad_field("graph", "expected an object");
  if (j.contains("family")) {
    const std::string family = j.at("family").get<std::string>();
    const int n = require_int(j.value("nodes", json(0)), "graph.nodes");
    if (n <= 0) bad_field("graph.nodes", "must be positive");
    if (family == "path") return std::make_shared<CommGraph>(path_graph(n));
    if (family == "ring") return std::make_shared<CommGraph>(ring_graph(n));
    if (family == "star") return std::make_shared<CommGraph>(star_graph(n));
    if (family == "complete") return std::make_shared<CommGraph>(complete_graph(n));
    if (family == "random") {
      const int extra = j.value("extra_edges", 2);
      const std::uint64_t seed = j.value("seed", 1u);
      return std::make_shared<CommGraph>(random_connected_graph(n, extra, seed));
    }
    bad_field("graph.family", "unknown family '" + family + "'");
  }
  if (!j.contains("nodes") || !j.contains("edges")) {
    bad_field("graph", "need either 'family' or 'nodes' + 'edges'");
  }
  const int n = require_int(j.at("nodes"), "graph.nodes");
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2) bad_field("graph.edges", "each edge is a pair [i, j]");
    edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  return std::make_shared<CommGraph>(build_graph(n, edges));
}

Eigen::MatrixXd parse_Q(const json& j, int dim) {
  if (j.is_number()) return j.get<double>() * Eigen::MatrixXd::Identity(dim, dim);
  if (j.is_array()) {
    Eigen::MatrixXd Q(dim, dim);
    if (static_cast<int>(j.size()) != dim) bad_field("Q", "matrix must be state-dim square");
    for (int i = 0; i < dim; ++i) {
      if (!j[i].is_array() || static_cast<int>(j[i].size()) != dim) {
        bad_field("Q", "matrix must be state-dim square");
      }
      for (int k = 0; k < dim; ++k) Q(i, k) = require_number(j[i][k], "Q");
    }
    return 0.5 * (Q + Q.transpose());
  }
  bad_field("Q", "expected a number or a matrix");
}

Box parse_box(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) bad_field(field, "expected an array of [lo, hi] pairs");
  Box box;
  for (const auto& axis : j) {
    if (!axis.is_array() || axis.size() != 2) bad_field(field, "each axis is a pair [lo, hi]");
    const double lo = require_number(axis[0], field);
    const double hi = require_number(axis[1], field);
    if (!(lo < hi)) bad_field(field, "axis bounds must satisfy lo < hi");
    box.push_back({lo, hi});
  }
  return box;
}

json box_to_json(const Box& box) {
  json out = json::array();
  for (const auto& iv : box) out.push_back({iv.lo, iv.hi});
  return out;
}

void apply_certificate_scalars(MetricCertificate& cert, const json& j) {
  if (j.contains("rho")) cert.rho = require_number(j.at("rho"), "certificate.rho");
  if (j.contains("q_margin")) {
    cert.q_margin = require_number(j.at("q_margin"), "certificate.q_margin");
  }
  if (j.contains("p_lower")) cert.p_lower = require_number(j.at("p_lower"), "certificate.p_lower");
  if (j.contains("p_upper")) cert.p_upper = require_number(j.at("p_upper"), "certificate.p_upper");
}

}  // namespace

SampleSet Config::samples() const {
  if (box.empty()) throw_usage("this command needs a sample box ('box' in the config)");
  SampleSet set = SampleSet::grid(box, grid);
  if (random_points > 0) set.add_random(random_points, seed);
  return set;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

Config parse_config(const json& doc, const CliOverrides& overrides) {
  if (!doc.is_object()) throw_usage("config root must be a JSON object");
  Config cfg;

  cfg.seed = overrides.seed.value_or(doc.value("seed", 0ull));
  cfg.grid = overrides.grid.value_or(doc.value("grid", 21));
  if (cfg.grid < 1) bad_field("grid", "must be >= 1");
  cfg.random_points = doc.value("random_points", 1000);
  if (cfg.random_points < 0) bad_field("random_points", "must be >= 0");

  if (doc.contains("graph")) cfg.graph = parse_graph(doc.at("graph"));

  // System + certificate: registry name or inline expressions.
  if (doc.contains("system")) {
    const json& sys = doc.at("system");
    cfg.has_system = true;
    if (sys.is_string()) {
      const Example& ex = find_example(sys.get<std::string>());
      cfg.example_name = ex.name;
      cfg.system = ex.system;
      cfg.cert = ex.cert;
      cfg.box = ex.box;
      cfg.Q = ex.Q;
      cfg.constant_metric = ex.constant_metric;
      cfg.constant_input = ex.constant_input;
      cfg.P0 = ex.P0;
      cfg.G0 = ex.G0;
      cfg.killing = ex.killing;
      cfg.strict = ex.strict;
      cfg.grad_alpha = ex.grad_alpha;
      if (doc.contains("certificate")) {
        const json& c = doc.at("certificate");
        if (c.contains("P") || c.contains("U") || c.contains("alpha")) {
          bad_field("certificate",
                    "P/U/alpha cannot override a named system; inline the full system instead");
        }
        apply_certificate_scalars(cfg.cert, c);
      }
    } else if (sys.is_object()) {
      if (!sys.contains("states")) bad_field("system.states", "required for inline systems");
      std::vector<std::string> symbols;
      for (const auto& s : sys.at("states")) symbols.push_back(s.get<std::string>());
      const int n = static_cast<int>(symbols.size());
      auto f = compile_vector(sys.at("f"), symbols, "system.f");
      if (static_cast<int>(f.size()) != n) bad_field("system.f", "needs one entry per state");
      auto g = compile_matrix(sys.at("g"), symbols, "system.g");
      if (static_cast<int>(g.size()) != n) bad_field("system.g", "needs one row per state");
      const int p = static_cast<int>(g.front().size());
      cfg.system.state_dim = n;
      cfg.system.input_dim = p;
      cfg.system.jac_f = jacobian_fn(f, n);
      cfg.system.f = vector_fn(std::move(f));
      cfg.constant_input = all_constant(g);
      if (cfg.constant_input) cfg.G0 = matrix_fn(g)(Eigen::VectorXd::Zero(n));
      cfg.system.g = matrix_fn(std::move(g));

      if (doc.contains("certificate")) {
        const json& c = doc.at("certificate");
        auto P = compile_matrix(c.at("P"), symbols, "certificate.P");
        if (static_cast<int>(P.size()) != n || static_cast<int>(P.front().size()) != n) {
          bad_field("certificate.P", "must be state-dim square");
        }
        cfg.cert.dim = n;
        cfg.cert.dP = metric_derivative_fn(P, n);
        cfg.constant_metric = all_constant(P);
        if (cfg.constant_metric) cfg.P0 = matrix_fn(P)(Eigen::VectorXd::Zero(n));
        cfg.cert.P = matrix_fn(std::move(P));
        ExprPtr U = compile_entry(c.at("U"), symbols, "certificate.U");
        cfg.cert.grad_U = gradient_fn(U, n);
        cfg.cert.U = scalar_fn(std::move(U));
        auto alpha = compile_vector(c.at("alpha"), symbols, "certificate.alpha");
        if (static_cast<int>(alpha.size()) != p) {
          bad_field("certificate.alpha", "needs one entry per input");
        }
        cfg.cert.alpha = vector_fn(std::move(alpha));
        apply_certificate_scalars(cfg.cert, c);
      }
      if (doc.contains("killing")) {
        const json& k = doc.at("killing");
        KillingData kd;
        auto gk = compile_vector(k.at("g"), symbols, "killing.g");
        if (static_cast<int>(gk.size()) != n) bad_field("killing.g", "needs one entry per state");
        ExprPtr q = compile_entry(k.at("q"), symbols, "killing.q");
        std::vector<ExprPtr> field;
        for (const auto& gi : gk) field.push_back(Expr::div(gi, q));
        kd.jac_field = jacobian_fn(field, n);
        kd.g = vector_fn(std::move(gk));
        kd.q = scalar_fn(std::move(q));
        cfg.killing = kd;
      }
    } else {
      bad_field("system", "expected a registry name or an inline object");
    }
  }

  if (doc.contains("box")) cfg.box = parse_box(doc.at("box"), "box");
  if (cfg.has_system && !cfg.box.empty() &&
      static_cast<int>(cfg.box.size()) != cfg.system.state_dim) {
    bad_field("box", "dimension does not match the state dimension");
  }
  if (doc.contains("Q")) {
    if (!cfg.has_system) bad_field("Q", "needs a system to size against");
    cfg.Q = parse_Q(doc.at("Q"), cfg.system.state_dim);
  } else if (cfg.Q.size() == 0 && cfg.has_system) {
    const int n = cfg.system.state_dim;
    cfg.Q = cfg.cert.q_margin > 0.0
                ? Eigen::MatrixXd(cfg.cert.q_margin * Eigen::MatrixXd::Identity(n, n))
                : Eigen::MatrixXd(Eigen::MatrixXd::Zero(n, n));
  }

  if (doc.contains("checks")) {
    for (const auto& c : doc.at("checks")) {
      const std::string name = c.get<std::string>();
      if (name != "bounds" && name != "integrability" && name != "cmf-kernel" &&
          name != "cmf-strengthened" && name != "killing") {
        bad_field("checks", "unknown check '" + name + "'");
      }
      cfg.checks.push_back(name);
    }
  } else {
    cfg.checks = {"bounds", "integrability", "cmf-kernel", "cmf-strengthened"};
    if (cfg.killing) cfg.checks.push_back("killing");
  }

  if (doc.contains("synthesis")) {
    const json& s = doc.at("synthesis");
    cfg.synth_kind = s.value("kind", std::string("local"));
    if (cfg.synth_kind != "local" && cfg.synth_kind != "global") {
      bad_field("synthesis.kind", "must be 'local' or 'global'");
    }
    if (s.contains("gain")) cfg.gain = require_number(s.at("gain"), "synthesis.gain");
    cfg.safety = s.value("safety", 1.25);
    cfg.override_gain = s.value("override_gain", false);
  }
  cfg.override_gain = cfg.override_gain || overrides.override_gain;

  if (doc.contains("backstep")) {
    const json& b = doc.at("backstep");
    cfg.backstep_base = b.value("base", std::string());
    cfg.M_b = b.value("M_b", 1.0);
    if (b.contains("eta")) cfg.eta = require_number(b.at("eta"), "backstep.eta");
  }

  if (doc.contains("simulate")) {
    const json& s = doc.at("simulate");
    cfg.T = s.value("T", 10.0);
    cfg.dt = s.value("dt", 1e-3);
    cfg.decimate = s.value("decimate", 1);
    if (s.contains("initial")) {
      const json& init = s.at("initial");
      if (init.contains("x0")) {
        cfg.initial.kind = InitialSpec::Kind::explicit_x0;
        const auto& arr = init.at("x0");
        cfg.initial.x0.resize(arr.size());
        for (std::size_t i = 0; i < arr.size(); ++i) {
          cfg.initial.x0[static_cast<int>(i)] = require_number(arr[i], "simulate.initial.x0");
        }
      } else if (init.contains("z0")) {
        cfg.initial.kind = InitialSpec::Kind::perturbed;
        const auto& arr = init.at("z0");
        cfg.initial.z0.resize(arr.size());
        for (std::size_t i = 0; i < arr.size(); ++i) {
          cfg.initial.z0[static_cast<int>(i)] = require_number(arr[i], "simulate.initial.z0");
        }
        cfg.initial.delta = init.value("delta", 1e-2);
      } else if (init.contains("spread")) {
        cfg.initial.kind = InitialSpec::Kind::spread;
        cfg.initial.spread = require_number(init.at("spread"), "simulate.initial.spread");
      } else {
        bad_field("simulate.initial", "need one of x0 / z0(+delta) / spread");
      }
    }
    if (s.contains("window")) {
      const auto& w = s.at("window");
      if (!w.is_array() || w.size() != 2) bad_field("simulate.window", "expected [lo, hi]");
      cfg.window_lo = require_number(w[0], "simulate.window");
      cfg.window_hi = require_number(w[1], "simulate.window");
    }
  }
  if (cfg.dt <= 0.0) bad_field("simulate.dt", "must be positive");
  if (cfg.T <= 0.0) bad_field("simulate.T", "must be positive");
  if (cfg.window_hi <= cfg.window_lo) {
    cfg.window_lo = 0.2 * cfg.T;
    cfg.window_hi = 0.8 * cfg.T;
  }
  if (cfg.window_hi > cfg.T || cfg.window_lo < 0.0) {
    bad_field("simulate.window", "must satisfy 0 <= lo < hi <= T");
  }

  if (doc.contains("sweep")) {
    const json& s = doc.at("sweep");
    cfg.sweep_param = s.value("param", std::string("delta"));
    if (cfg.sweep_param != "delta" && cfg.sweep_param != "gain") {
      bad_field("sweep.param", "must be 'delta' or 'gain'");
    }
    if (s.contains("values")) {
      cfg.sweep_values.clear();
      for (const auto& v : s.at("values")) {
        cfg.sweep_values.push_back(require_number(v, "sweep.values"));
      }
      if (cfg.sweep_values.empty()) bad_field("sweep.values", "must be nonempty");
    }
  }

  // Mirror of the effective settings for the manifest.
  json resolved = doc;
  resolved["seed"] = cfg.seed;
  resolved["grid"] = cfg.grid;
  resolved["random_points"] = cfg.random_points;
  if (!cfg.box.empty()) resolved["box"] = box_to_json(cfg.box);
  resolved["checks"] = cfg.checks;
  resolved["synthesis"] = {{"kind", cfg.synth_kind},
                           {"safety", cfg.safety},
                           {"override_gain", cfg.override_gain}};
  if (cfg.gain) resolved["synthesis"]["gain"] = *cfg.gain;
  if (doc.contains("backstep") || !cfg.backstep_base.empty()) {
    resolved["backstep"] = {{"base", cfg.backstep_base}, {"M_b", cfg.M_b}};
    if (cfg.eta) resolved["backstep"]["eta"] = *cfg.eta;
  }
  resolved["simulate"] = {{"T", cfg.T},
                          {"dt", cfg.dt},
                          {"decimate", cfg.decimate},
                          {"window", {cfg.window_lo, cfg.window_hi}}};
  switch (cfg.initial.kind) {
    case InitialSpec::Kind::explicit_x0: {
      std::vector<double> v(cfg.initial.x0.data(), cfg.initial.x0.data() + cfg.initial.x0.size());
      resolved["simulate"]["initial"] = {{"x0", v}};
      break;
    }
    case InitialSpec::Kind::perturbed: {
      std::vector<double> v(cfg.initial.z0.data(), cfg.initial.z0.data() + cfg.initial.z0.size());
      resolved["simulate"]["initial"] = {{"z0", v}, {"delta", cfg.initial.delta}};
      break;
    }
    case InitialSpec::Kind::spread:
      resolved["simulate"]["initial"] = {{"spread", cfg.initial.spread}};
      break;
  }
  resolved["sweep"] = {{"param", cfg.sweep_param}, {"values", cfg.sweep_values}};
  cfg.resolved = std::move(resolved);
  return cfg;
}

Config load_config(const std::string& path, const CliOverrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_usage("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw_usage("config parse error in '" + path + "': " + e.what());
  }
  Config cfg = parse_config(doc, overrides);
  cfg.resolved["config_digest"] = fnv1a_hex(buf.str());
  return cfg;
}

}  // namespace synckit
