#pragma once

// Scenario execution and JSON reporting.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "owl/analysis.hpp"
#include "owl/budget.hpp"
#include "owl/config.hpp"
#include "owl/latency.hpp"

namespace owl {

inline constexpr int kReportSchemaVersion = 1;

nlohmann::json to_json(const EyeMetrics& m);
nlohmann::json to_json(const ComplianceReport& r);
nlohmann::json to_json(const EdgeTimes& e);
nlohmann::json to_json(const LatencyReport& r);
nlohmann::json to_json(const KneeVerdict& v);

struct SimulationOutcome {
    nlohmann::json report;
    std::vector<std::string> failed_checks;
    bool degraded = false;

    bool pass() const { return failed_checks.empty(); }
};

/// Runs the chain and the requested analyses. Analysis failures are recorded
/// in the report, never thrown. With write_artifacts the report, eye files
/// and (if requested) waveforms go to s.output_dir.
SimulationOutcome simulate(const Scenario& s, bool write_artifacts = true);

/// Dumps JSON with a trailing newline; identical input gives identical bytes.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace owl
