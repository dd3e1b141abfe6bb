#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "oqs/bath.hpp"
#include "oqs/core.hpp"
#include "oqs/qubit.hpp"

namespace oqs {

using json = nlohmann::json;

struct OutputSpec {
  std::string path = "-";  // "-" writes to stdout
  std::string format = "csv";
};

struct ScanSpec {
  double omega_min = -5.0;
  double omega_max = 5.0;
  int count = 201;
  double eps = 1e-6;
};

struct WickSpec {
  int n_max = 12;
  int max_len = 6;
  int samples_per_len = 4;
};

struct RunConfig {
  SystemSpec system;
  BathSpec bath;
  SimulationConfig sim;
  Mat initial_state;  // zero rows selects the default (first basis state)
  int solver_substeps = 1;
  ScanSpec scan;
  std::string resonance_mode = "qp";
  WickSpec wick;
  OutputSpec output;
  json canonical;  // fully merged config this run was parsed from
};

inline json default_config() {
  json j;
  j["schema_version"] = 1;
  j["system"] = {{"preset", "qubit"}, {"omega0", 1.0}};
  j["bath"] = {{"model", "ohmic"}, {"eta", 0.1}, {"cutoff", 10.0}, {"beta", "inf"}};
  j["simulation"] = {{"t_start", 0.0},
                     {"t_stop", 10.0},
                     {"dt", 0.01},
                     {"mode", "markov"},
                     {"rwa", true},
                     {"ode_tol", 1e-8},
                     {"root_tol", 1e-9},
                     {"energy_match_tol", 1e-9},
                     {"pv_exclusion", 1e-3},
                     {"omega_cutoff", 0.0},
                     {"history_depth", 0},
                     {"solver_substeps", 1},
                     {"tol_herm", 1e-10},
                     {"tol_trace", 1e-10},
                     {"tol_pos", 1e-8},
                     {"seed", 20260822}};
  j["scan"] = {{"omega_min", -5.0}, {"omega_max", 5.0}, {"count", 201}, {"eps", 1e-6}};
  j["resonances"] = {{"mode", "qp"}};
  j["wick"] = {{"n_max", 12}, {"max_len", 6}, {"samples_per_len", 4}};
  j["output"] = {{"path", "-"}, {"format", "csv"}};
  return j;
}

// Recursive merge; patch values win, objects merge key by key.
inline json deep_merge(json base, const json& patch) {
  if (!base.is_object() || !patch.is_object()) return patch;
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (base.contains(it.key()))
      base[it.key()] = deep_merge(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
  return base;
}

// Dotted override of the form a.b.c=value; the value is parsed as JSON when
// possible and kept as a string otherwise, so rwa=false is a bool while
// beta=inf stays the string "inf".
inline void apply_set(json& j, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like key.path=value: " + kv);
  const std::string path = kv.substr(0, eq);
  const std::string raw = kv.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  json* cur = &j;
  size_t pos = 0;
  while (true) {
    const auto dot = path.find('.', pos);
    const std::string part = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
    if (part.empty()) throw ConfigError("empty key segment in override: " + kv);
    if (dot == std::string::npos) {
      (*cur)[part] = value;
      return;
    }
    cur = &((*cur)[part]);
    pos = dot + 1;
  }
}

inline json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + " is not valid json: " + e.what());
  }
}

// FNV-1a over the serialized config; embedded in every output so results
// can be traced back to the exact inputs.
inline std::string config_hash(const json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace detail {

inline void check_keys(const json& obj, const std::vector<std::string>& allowed,
                       const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed) ok = ok || k == it.key();
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

inline double number_at(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + " is missing '" + key + "'");
  if (!obj[key].is_number()) throw ConfigError(where + "." + key + " must be a number");
  return obj[key].get<double>();
}

}  // namespace detail

inline Mat mat_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("re"))
    throw ConfigError(where + " must be an object with re (and optional im) row arrays");
  const json& re = j["re"];
  if (!re.is_array() || re.empty()) throw ConfigError(where + ".re must be a nonempty array");
  const size_t rows = re.size();
  const size_t cols = re[0].size();
  Mat m(static_cast<int>(rows), static_cast<int>(cols));
  for (size_t r = 0; r < rows; ++r) {
    if (!re[r].is_array() || re[r].size() != cols)
      throw ConfigError(where + ".re rows must have equal length");
    for (size_t c = 0; c < cols; ++c) m(static_cast<int>(r), static_cast<int>(c)) = re[r][c].get<double>();
  }
  if (j.contains("im")) {
    const json& im = j["im"];
    if (!im.is_array() || im.size() != rows) throw ConfigError(where + ".im shape mismatch");
    for (size_t r = 0; r < rows; ++r) {
      if (!im[r].is_array() || im[r].size() != cols)
        throw ConfigError(where + ".im shape mismatch");
      for (size_t c = 0; c < cols; ++c)
        m(static_cast<int>(r), static_cast<int>(c)) += cplx(0.0, im[r][c].get<double>());
    }
  }
  return m;
}

inline json mat_to_json(const Mat& m) {
  json re = json::array(), im = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json rr = json::array(), ri = json::array();
    for (int c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ri.push_back(m(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ri);
  }
  return json{{"re", re}, {"im", im}};
}

inline double beta_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInfBeta;
    throw ConfigError("bath.beta must be a positive number or \"inf\"");
  }
  if (j.is_number()) return j.get<double>();
  throw ConfigError("bath.beta must be a positive number or \"inf\"");
}

inline SystemSpec system_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("system block must be an object");
  const std::string preset = j.value("preset", std::string("custom"));
  if (preset == "qubit") {
    detail::check_keys(j, {"preset", "omega0"}, "system");
    return qubit_system(detail::number_at(j, "omega0", "system"));
  }
  if (preset != "custom") throw ConfigError("system.preset must be qubit or custom");
  detail::check_keys(j, {"preset", "energies", "couplings", "conjugate_pairs"}, "system");
  SystemSpec s;
  if (!j.contains("energies") || !j["energies"].is_array())
    throw ConfigError("system.energies must be an array");
  const auto& en = j["energies"];
  s.energies = RealVec(static_cast<int>(en.size()));
  for (size_t i = 0; i < en.size(); ++i) s.energies(static_cast<int>(i)) = en[i].get<double>();
  if (!j.contains("couplings") || !j["couplings"].is_array())
    throw ConfigError("system.couplings must be an array of matrices");
  for (size_t a = 0; a < j["couplings"].size(); ++a)
    s.couplings.push_back(mat_from_json(j["couplings"][a], "system.couplings"));
  if (!j.contains("conjugate_pairs") || !j["conjugate_pairs"].is_array())
    throw ConfigError("system.conjugate_pairs must be an array");
  for (const auto& p : j["conjugate_pairs"]) s.conjugate_pairs.push_back(p.get<int>());
  s.validate();
  return s;
}

inline BathSpec bath_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("bath block must be an object");
  BathSpec spec;
  const std::string model = j.value("model", std::string("ohmic"));
  if (model == "ohmic") {
    detail::check_keys(j, {"model", "eta", "cutoff", "beta"}, "bath");
    OhmicExponential m;
    m.eta = detail::number_at(j, "eta", "bath");
    m.cutoff = detail::number_at(j, "cutoff", "bath");
    spec.model = m;
  } else if (model == "discrete") {
    detail::check_keys(j, {"model", "lambda", "omega", "smear_sigma", "beta"}, "bath");
    DiscreteModes m;
    if (!j.contains("lambda") || !j.contains("omega"))
      throw ConfigError("discrete bath needs lambda and omega arrays");
    for (const auto& v : j["lambda"]) m.lambda.push_back(v.get<double>());
    for (const auto& v : j["omega"]) m.omega.push_back(v.get<double>());
    m.smear_sigma = j.value("smear_sigma", 0.0);
    spec.model = m;
  } else {
    throw ConfigError("bath.model must be ohmic or discrete");
  }
  if (!j.contains("beta")) throw ConfigError("bath block is missing beta");
  spec.beta = beta_from_json(j["beta"]);
  spec.validate();
  return spec;
}

inline RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  detail::check_keys(j,
                     {"schema_version", "system", "bath", "simulation", "initial_state", "scan",
                      "resonances", "wick", "output"},
                     "config");
  if (!j.contains("schema_version") || j["schema_version"] != 1)
    throw ConfigError("config schema_version must be 1");
  RunConfig rc;
  rc.canonical = j;
  rc.system = system_from_json(j.at("system"));
  rc.bath = bath_from_json(j.at("bath"));

  const json& s = j.at("simulation");
  detail::check_keys(s,
                     {"t_start", "t_stop", "dt", "mode", "rwa", "ode_tol", "root_tol",
                      "energy_match_tol", "pv_exclusion", "omega_cutoff", "history_depth",
                      "solver_substeps", "tol_herm", "tol_trace", "tol_pos", "seed"},
                     "simulation");
  rc.sim.t_start = s.value("t_start", 0.0);
  rc.sim.t_stop = s.value("t_stop", 10.0);
  rc.sim.dt = s.value("dt", 0.01);
  rc.sim.ode_tol = s.value("ode_tol", 1e-8);
  rc.sim.root_tol = s.value("root_tol", 1e-9);
  rc.sim.energy_match_tol = s.value("energy_match_tol", 1e-9);
  rc.sim.pv_exclusion = s.value("pv_exclusion", 1e-3);
  rc.sim.omega_cutoff = s.value("omega_cutoff", 0.0);
  rc.sim.history_depth = s.value("history_depth", 0);
  rc.sim.tol_herm = s.value("tol_herm", 1e-10);
  rc.sim.tol_trace = s.value("tol_trace", 1e-10);
  rc.sim.tol_pos = s.value("tol_pos", 1e-8);
  rc.sim.seed = s.value("seed", std::uint64_t{20260822});
  rc.sim.rwa = s.value("rwa", true);
  const std::string mode = s.value("mode", std::string("markov"));
  if (mode == "markov")
    rc.sim.mode = EvolutionMode::markov;
  else if (mode == "memory")
    rc.sim.mode = EvolutionMode::memory;
  else
    throw ConfigError("simulation.mode must be markov or memory");
  rc.solver_substeps = s.value("solver_substeps", 1);
  if (rc.solver_substeps < 1) throw ConfigError("solver_substeps must be >= 1");
  rc.sim.validate();

  if (j.contains("initial_state")) {
    rc.initial_state = mat_from_json(j.at("initial_state"), "initial_state");
    if (rc.initial_state.rows() != rc.system.dim() || rc.initial_state.cols() != rc.system.dim())
      throw ConfigError("initial_state dimension does not match the system");
  }

  const json& sc = j.at("scan");
  detail::check_keys(sc, {"omega_min", "omega_max", "count", "eps"}, "scan");
  rc.scan.omega_min = sc.value("omega_min", -5.0);
  rc.scan.omega_max = sc.value("omega_max", 5.0);
  rc.scan.count = sc.value("count", 201);
  rc.scan.eps = sc.value("eps", 1e-6);
  if (rc.scan.count < 2 || !(rc.scan.omega_max > rc.scan.omega_min) || !(rc.scan.eps > 0.0))
    throw ConfigError("scan block needs count >= 2, omega_max > omega_min, eps > 0");

  const json& rs = j.at("resonances");
  detail::check_keys(rs, {"mode"}, "resonances");
  rc.resonance_mode = rs.value("mode", std::string("qp"));
  if (rc.resonance_mode != "qp" && rc.resonance_mode != "full")
    throw ConfigError("resonances.mode must be qp or full");

  const json& w = j.at("wick");
  detail::check_keys(w, {"n_max", "max_len", "samples_per_len"}, "wick");
  rc.wick.n_max = w.value("n_max", 12);
  rc.wick.max_len = w.value("max_len", 6);
  rc.wick.samples_per_len = w.value("samples_per_len", 4);
  if (rc.wick.n_max < 2 || rc.wick.max_len < 2 || rc.wick.max_len % 2 != 0 ||
      rc.wick.samples_per_len < 1)
    throw ConfigError("wick block needs n_max >= 2, even max_len >= 2, samples_per_len >= 1");

  const json& out = j.at("output");
  detail::check_keys(out, {"path", "format"}, "output");
  rc.output.path = out.value("path", std::string("-"));
  rc.output.format = out.value("format", std::string("csv"));
  if (rc.output.format != "csv" && rc.output.format != "json")
    throw ConfigError("output.format must be csv or json");
  return rc;
}

}  // namespace oqs
