#pragma once

#include <functional>
#include <string>
#include <vector>

#include "daestab/model.hpp"

namespace daestab {

enum class LoadModel { Constant, FrequencyDependent };

/// Two-state system with a cubic constraint; the singular surface carries a
/// semi-saddle and a transverse saddle pseudo equilibrium for |p| <= 0.4.
/// Parameter set: {p}.
ScenarioModel build_example75(const ParamSet& p);

/// One machine, one bus: x1 rotor angle relative to the bus, x2 speed
/// deviation, y bus voltage magnitude; fault shorts the bus (y = 0) and
/// clears without topology change.  Parameter set: {X, Pm, E, M, Dl, Dg, Ql}.
ScenarioModel build_smib(const ParamSet& p, LoadModel load);

struct SystemCatalogEntry {
    std::string id;
    std::string description;
    ParamSet defaults;
    std::function<ScenarioModel(const ParamSet&)> build;

    // Newton seeds and ranges used by the portrait/experiment harness.
    std::vector<Point> equilibrium_seeds;
    std::vector<Point> pseudo_seeds;
    std::vector<Point> semi_seeds;
    Vec y_guess;            // default algebraic-solve seed for grid starts
    Point trace_seed;       // first point for the singular-surface scan
    double trace_scan_min = -2.0;  // x2 scan range of the trace
    double trace_scan_max = 2.0;
    double bracket_low = 0.0;  // default CCT bisection bracket
    double bracket_high = 3.0;
};

const std::vector<SystemCatalogEntry>& system_catalog();
const SystemCatalogEntry& find_system(const std::string& id);

}  // namespace daestab
