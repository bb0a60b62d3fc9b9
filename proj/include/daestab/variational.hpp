#pragma once

#include <optional>
#include <vector>

#include "daestab/integrate.hpp"

namespace daestab {

/// Which derivative of the flow the variational pass produces: with respect
/// to the dynamic initial state (n columns) or to the active parameter (1).
enum class SensTarget { InitialState, Parameter };

struct SensitivitySample {
    double t;
    Mat dx;  // n x k sensitivity of the dynamic states
    Mat dy;  // m x k slaved algebraic sensitivity
};

struct SensitivityHistory {
    std::vector<SensitivitySample> samples;
    const SensitivitySample& back() const { return samples.back(); }
};

/// Slaved algebraic sensitivity -(dg/dy)^-1 (dg/dx * dphix_dalpha + dg_dalpha).
Mat algebraic_sensitivity(const StageModel& stage, const Point& pt, const ParamSet& p,
                          const Mat& dphix_dalpha, const Mat& dg_dalpha,
                          double delta_floor = 1e-8);

/// Integrates the variational equations along `traj` with the same RK4 scheme
/// and step grid (the stage states of every step are rebuilt exactly), so the
/// result is the derivative of the discrete flow.  Stops after the last sample
/// with t <= t_stop when given.  Throws SingularPointError if a stage state
/// has |delta| under cfg.delta_floor; callers truncate before singular
/// endpoints.
SensitivityHistory integrate_variational(const StageModel& stage, const Trajectory& traj,
                                         const ParamSet& p, SensTarget target,
                                         const IntegratorConfig& cfg,
                                         std::optional<double> t_stop = std::nullopt);

}  // namespace daestab
