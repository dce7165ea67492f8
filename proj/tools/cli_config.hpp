#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "ddspin/sweep.hpp"

namespace ddspin::cli {

using json = nlohmann::ordered_json;

/// Parsed run configuration. Unknown keys anywhere in the document are
/// rejected with the offending key path; all tolerances must be positive.
struct RunConfig {
    SolverTier tier = SolverTier::MF;
    ModelParams params;
    LatticeSpec lattice = LatticeSpec::chain(3);

    bool has_sweep = false;
    SweepParameter parameter = SweepParameter::Delta;
    double sweep_start = 0.0;
    double sweep_stop = 1.0;
    int sweep_points = 2;
    SweepProtocol protocol = SweepProtocol::BothDirections;

    double run_t_final = 100.0;
    std::vector<double> record_times;

    SolverSettings solver;
    std::string prefix;

    SweepPlan to_plan(int threads) const;
};

RunConfig parse_config(const json& doc);
RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides = {});

// full echo of a resolved configuration; parse_config(config_to_json(c))
// reproduces an equivalent RunConfig
json config_to_json(const RunConfig& c);

// "a.b.c=value" applied onto the document (value parsed as JSON when possible)
void apply_override(json& doc, const std::string& spec);

} // namespace ddspin::cli
