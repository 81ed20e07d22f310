// JSON encodings of configs, traces, certificates and reports. Infinite
// tolerances are written as null.

#pragma once

#include <json.hpp>

#include "fletcher/criticality.hpp"
#include "fletcher/fdcheck.hpp"
#include "fletcher/solver.hpp"

namespace fletcher {

nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const SolverConfig& cfg);
nlohmann::json to_json(const IterationRecord& rec);
nlohmann::json to_json(const CriticalityCertificate& cert);
nlohmann::json to_json(const RunTrace& trace);
nlohmann::json to_json(const PlateauResult& result);
nlohmann::json to_json(const RestoreResult& result);
nlohmann::json to_json(const DerivativeReport& report);

/// Reads the fields present in j over the defaults in cfg.
SolverConfig solver_config_from_json(const nlohmann::json& j, SolverConfig cfg = {});

}  // namespace fletcher
