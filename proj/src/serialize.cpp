#include "fletcher/serialize.hpp"

#include <cmath>

namespace fletcher {

using nlohmann::json;

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double read_tolerance(const json& j) { return j.is_null() ? kInfinity : j.get<double>(); }

}  // namespace

json to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const SolverConfig& cfg) {
  return json{{"eps1", cfg.eps1},
              {"eps2", number_or_null(cfg.eps2)},
              {"beta", cfg.beta},
              {"c1", cfg.c1},
              {"c2", cfg.c2},
              {"tau1", cfg.tau1},
              {"tau2", cfg.tau2},
              {"alpha01", cfg.alpha01},
              {"alpha02", cfg.alpha02},
              {"max_iters", cfg.max_iters},
              {"max_backtracks", cfg.max_backtracks},
              {"fd_step", cfg.fd_step}};
}

SolverConfig solver_config_from_json(const json& j, SolverConfig cfg) {
  auto read = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  read("eps1", cfg.eps1);
  if (j.contains("eps2")) cfg.eps2 = read_tolerance(j.at("eps2"));
  read("beta", cfg.beta);
  read("c1", cfg.c1);
  read("c2", cfg.c2);
  read("tau1", cfg.tau1);
  read("tau2", cfg.tau2);
  read("alpha01", cfg.alpha01);
  read("alpha02", cfg.alpha02);
  read("max_iters", cfg.max_iters);
  read("max_backtracks", cfg.max_backtracks);
  read("fd_step", cfg.fd_step);
  return cfg;
}

json to_json(const IterationRecord& rec) {
  return json{{"k", rec.k},
              {"kind", to_string(rec.kind)},
              {"step_len", rec.step_len},
              {"g_before", rec.g_before},
              {"g_after", rec.g_after},
              {"grad_norm", rec.grad_norm},
              {"h_norm", rec.h_norm},
              {"curvature", rec.curvature ? json(*rec.curvature) : json(nullptr)},
              {"backtracks", rec.backtracks}};
}

json to_json(const CriticalityCertificate& cert) {
  return json{{"eps0_measured", cert.eps0_measured},
              {"eps1_measured", cert.eps1_measured},
              {"eps2_measured", cert.eps2_measured},
              {"targets", json::array({number_or_null(cert.targets.eps0),
                                       number_or_null(cert.targets.eps1),
                                       number_or_null(cert.targets.eps2)})},
              {"focp_pass", cert.focp_pass},
              {"socp_pass", cert.socp_pass}};
}

json to_json(const RunTrace& trace) {
  json records = json::array();
  for (const auto& r : trace.records) records.push_back(to_json(r));
  return json{{"config", to_json(trace.config)},
              {"records", std::move(records)},
              {"final_x", to_json(trace.final_x)},
              {"certificate", to_json(trace.final_certificate)},
              {"termination", to_string(trace.termination)}};
}

json to_json(const PlateauResult& result) {
  json out = to_json(result.trace);
  json plateaus = json::array();
  for (const auto& p : result.plateaus) {
    plateaus.push_back(json{{"index", p.index},
                            {"beta", p.beta},
                            {"lp", p.lp},
                            {"iterations", p.iterations},
                            {"stop", to_string(p.stop)},
                            {"b_value", p.b_value ? json(*p.b_value) : json(nullptr)}});
  }
  out["plateaus"] = std::move(plateaus);
  out["final_beta"] = result.final_beta;
  return out;
}

json to_json(const RestoreResult& result) {
  json log = json::array();
  for (const auto& [t, phi] : result.decay_log) log.push_back(json{{"t", t}, {"phi", phi}});
  return json{{"final_x", to_json(result.x)}, {"decay_log", std::move(log)}, {"final_step", result.final_step}};
}

json to_json(const DerivativeReport& report) {
  return json{{"target", report.target},
              {"max_rel_err", number_or_null(report.max_rel_err)},
              {"worst_point_seed", report.worst_point_seed},
              {"step_used", report.step_used},
              {"tolerance", report.tolerance},
              {"pass", report.pass}};
}

}  // namespace fletcher
