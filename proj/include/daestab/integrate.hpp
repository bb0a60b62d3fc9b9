#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "daestab/model.hpp"

namespace daestab {

struct IntegratorConfig {
    double dt = 1e-3;
    double newton_tol = 1e-10;
    int newton_max_iter = 50;
    double delta_floor = 1e-8;
    double t_max = 10.0;
    int shadow_stride = 1;            // solve the post-fault image every k-th step
    bool stop_on_shadow_crossing = true;
    int max_step_halvings = 14;       // rescue depth for fast algebraic transients

    void validate() const {
        if (dt <= 0 || newton_tol <= 0 || delta_floor <= 0 || shadow_stride < 1 ||
            max_step_halvings < 0)
            throw ConfigError("invalid integrator configuration");
    }
};

enum class Termination {
    HorizonReached,
    ConvergedToSep,
    SingularityReached,
    ShadowSingularityReached,
    NewtonFailure,
};

const char* to_string(Termination t);

struct TrajectorySample {
    double t;
    Vec x;
    Vec y;
    Vec y_post;           // empty when no shadow is tracked
    double delta_active;
    double delta_post;    // NaN when no shadow is tracked
};

/// Time-stamped solution samples plus the singularity monitors.  Sample times
/// are strictly increasing; every stored state satisfies its constraint to
/// newton_tol.
struct Trajectory {
    std::vector<TrajectorySample> samples;
    Termination termination = Termination::HorizonReached;
    double t_event = 0.0;  // time of the singular/failed step, when applicable
    bool has_shadow = false;

    const TrajectorySample& back() const { return samples.back(); }
    std::size_t size() const { return samples.size(); }

    /// Columns: t,x1..xn,y1..ym[,ypost1..ypostm],delta_active[,delta_post]
    void write_csv(std::ostream& os) const;
};

/// Converged-to-SEP early exit: inside `radius` of `sep` for `dwell` time units.
struct SepTarget {
    Point sep;
    double radius = 1e-3;
    double dwell = 1.0;
};

/// Newton projection onto g(x, ., p) = 0 at fixed x, damped by half-stepping
/// when the residual grows.  Throws NewtonFailureError after max_iter or when
/// |det dg/dy| falls under delta_floor during the iteration.
Vec solve_algebraic(const StageModel& stage, const Vec& x, const Vec& y_guess, const ParamSet& p,
                    const IntegratorConfig& cfg);

namespace detail {
struct AlgebraicSolve {
    bool ok = false;
    bool near_singular = false;
    bool branch_jump = false;
    Vec y;
    double residual = 0.0;
};
// Branch guards for the integration path.  A converged solution is rejected
// when (m = 1) another constraint root lies strictly between the seed and the
// solution, or when the solution moved farther than `max_displacement`: both
// mean the iteration left the ridden branch (a fold was hopped or the branch
// was annihilated), which must read as loss of the branch, not survival.
// max_displacement < 0 disables the displacement check.
AlgebraicSolve try_solve_algebraic(const StageModel& stage, const Vec& x, const Vec& y_guess,
                                   const ParamSet& p, const IntegratorConfig& cfg,
                                   bool guard_branch = false, double max_displacement = -1.0);

// Displacement budget for one elementary step of size dt starting at (x, y):
// a multiple of the slaved algebraic drift |gy^-1 gx xdot| of the constraint
// under the driving dynamic velocity xdot.
double branch_displacement_budget(const StageModel& stage, const Vec& x, const Vec& y,
                                  const ParamSet& p, double dt, const Vec& xdot);

// One semi-explicit RK4 step: x advances explicitly, y is re-solved by Newton
// at every stage evaluation.  Stage states are exposed so the variational
// pass can rebuild the exact same discrete map.
struct RkStagePoint {
    Vec x, y, k;  // k = f(x, y)
};
struct RkStep {
    bool ok = false;
    Vec x1, y1;
    RkStagePoint stage_pts[4];
};
RkStep rk4_step(const StageModel& stage, const Vec& x, const Vec& y, double dt, const ParamSet& p,
                const IntegratorConfig& cfg);

// Covers one grid step of size dt, recursively halving on Newton failure so
// fast algebraic transients (|dy/dt| ~ kappa/delta near the singular surface)
// are resolved instead of aborting the run.  The walk is deterministic, so a
// later pass can replay the exact same elementary steps.  `on_step` is called
// as on_step(x0, y0, dt_sub, rk) after every successful elementary step.
struct StepWalk {
    bool ok = false;
    double t_covered = 0.0;
    Vec x_end, y_end;
};
using StepCallback = std::function<void(const Vec&, const Vec&, double, const RkStep&)>;
StepWalk walk_step(const StageModel& stage, const Vec& x, const Vec& y, double dt,
                   const ParamSet& p, const IntegratorConfig& cfg, int depth,
                   const StepCallback& on_step);
}  // namespace detail

/// Fixed-step semi-explicit RK4 on `stage` from `start` until cfg.t_max, a
/// singularity crossing, a Newton failure, or (when given) the SEP dwell ball.
/// With `shadow_stage` the post-fault image y_post is tracked alongside and
/// its delta monitored; a shadow sign change terminates the run when
/// cfg.stop_on_shadow_crossing is set.
Trajectory simulate(const StageModel& stage, const Point& start, const ParamSet& p,
                    const IntegratorConfig& cfg, const StageModel* shadow_stage = nullptr,
                    const std::optional<SepTarget>& sep_target = std::nullopt);

enum class MonitorChannel { Active, Shadow };

/// Zero crossing of the delta monitor by quadratic interpolation through the
/// last three samples around the sign change (or extrapolation past the final
/// sample when the run terminated before crossing).  Returns the crossing
/// time and the state interpolated to it; for the shadow channel the returned
/// y is the post-fault image.
std::pair<double, Point> locate_singularity_crossing(const Trajectory& traj,
                                                     MonitorChannel channel,
                                                     double delta_floor = 1e-8);

}  // namespace daestab
