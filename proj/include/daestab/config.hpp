#pragma once

#include <string>

#include "daestab/cct.hpp"
#include "daestab/systems.hpp"

namespace daestab {

struct SweepBlock {
    double from = 0.0;
    double to = 1.0;
    int steps = 2;
};

struct OracleBlock {
    double fd_delta = 1e-3;
    double cct_tol = 1e-7;
};

struct PortraitBlock {
    double x1_min = -1.0, x1_max = 1.0;
    double x2_min = -1.0, x2_max = 1.0;
    int x1_steps = 0, x2_steps = 0;  // 0 x 0 grid: trace and elements only
    double traj_t = 1.0;             // horizon of the short grid trajectories
    int trace_points = 201;
    double trace_min = 0.0, trace_max = 0.0;  // 0,0: use the catalog range
    bool with_critical = true;                // include the base critical trajectory
};

struct RunConfig {
    std::string system_id;
    ParamSet params;
    IntegratorConfig solver;
    CctOptions cct;
    SweepBlock sweep;
    OracleBlock oracle;
    PortraitBlock portrait;
    std::string out_dir = ".";
    int workers = 1;

    void validate() const;
};

/// Flat INI: [scenario] [params] [solver] [cct] [sweep] [oracle] [portrait]
/// [output]; `#`/`;` comments.  Unknown sections or keys are errors.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text);

/// Catalog defaults for `system_id` (params, bracket) with nothing overridden.
RunConfig default_config(const std::string& system_id);

}  // namespace daestab
