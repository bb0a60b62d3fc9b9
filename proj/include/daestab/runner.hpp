#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "daestab/config.hpp"

namespace daestab {

struct SweepRow {
    int index = 0;
    double p_value = 0.0;
    double cct = std::numeric_limits<double>::quiet_NaN();
    std::string mechanism;
    double dcct_dp = std::numeric_limits<double>::quiet_NaN();
    double dcct_dp_fd = std::numeric_limits<double>::quiet_NaN();
    double rel_err = std::numeric_limits<double>::quiet_NaN();
    double cond = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";
};

struct SweepOutcome {
    std::vector<SweepRow> rows;
    int exit_code = 0;
    std::string summary;
};

/// Parameter sweep with formula-vs-oracle comparison; writes sweep.csv and
/// tangents.csv under cfg.out_dir.  Exit code 0 unless a point away from a
/// mechanism transition misses the 2% tolerance (2) or fails outright (4).
SweepOutcome run_sweep(const RunConfig& cfg);

/// Single scenario run: trajectory.csv plus the stability verdict on `log`.
int run_single(const RunConfig& cfg, double t_cl, std::ostream& log);

/// Phase-portrait bundle: grid trajectories, singular-surface trace, located
/// critical elements and (optionally) the base critical trajectory.
int run_portrait(const RunConfig& cfg, std::ostream& log);

void write_systems_list(std::ostream& os);

}  // namespace daestab
