#pragma once

#include <functional>
#include <optional>
#include <string>

#include "daestab/types.hpp"

namespace daestab {

/// Gradient of the singularity field delta = det(dg/dy) with respect to the
/// dynamic states, the algebraic states and the active parameter.
struct DeltaGradient {
    Vec dx;
    Vec dy;
    double dp = 0.0;
};

/// One system stage (pre-fault, fault-on or post-fault): evaluation routines
/// for f, g and their first partial derivatives.  All routines are pure; a
/// built StageModel is immutable and safe to evaluate concurrently.
struct StageModel {
    int n = 0;
    int m = 0;

    std::function<Vec(const Vec&, const Vec&, const ParamSet&)> f;
    std::function<Vec(const Vec&, const Vec&, const ParamSet&)> g;

    std::function<Mat(const Vec&, const Vec&, const ParamSet&)> df_dx;  // n x n
    std::function<Mat(const Vec&, const Vec&, const ParamSet&)> df_dy;  // n x m
    std::function<Vec(const Vec&, const Vec&, const ParamSet&)> df_dp;  // n
    std::function<Mat(const Vec&, const Vec&, const ParamSet&)> dg_dx;  // m x n
    std::function<Mat(const Vec&, const Vec&, const ParamSet&)> dg_dy;  // m x m
    std::function<Vec(const Vec&, const Vec&, const ParamSet&)> dg_dp;  // m

    // Optional closed forms; when absent delta falls back to det(dg/dy) and
    // its gradient to central differences of eval_delta.
    std::function<double(const Vec&, const Vec&, const ParamSet&)> delta;
    std::function<DeltaGradient(const Vec&, const Vec&, const ParamSet&)> delta_gradient;

    void check_point(const Point& pt) const {
        if (pt.x.size() != n || pt.y.size() != m)
            throw DimensionError("point dimensions do not match stage (n=" + std::to_string(n) +
                                 ", m=" + std::to_string(m) + ")");
    }
};

/// The three stages of a fault scenario.  Both built-in systems share n and m
/// across stages and use pre == post.
struct ScenarioModel {
    StageModel pre;
    StageModel fault;
    StageModel post;
    std::string name;
    Point sep_guess;  // Newton seed for the pre-fault SEP
};

/// Adjugate (classical adjoint): cofactor expansion for m <= 3, per-entry
/// LU-factored minors above that.  Well defined at singular arguments.
Mat adjugate(const Mat& a);

/// delta(x, y) = det(dg/dy), via the model's closed form when supplied.
double eval_delta(const StageModel& stage, const Point& pt, const ParamSet& p);

/// Gradient of delta; analytic when the model supplies it, otherwise central
/// differences with step 1e-6 * max(1, |coordinate|).
DeltaGradient eval_delta_gradient(const StageModel& stage, const Point& pt, const ParamSet& p);

/// kappa(x, y) = -adj(dg/dy) * dg/dx * f, the algebraic drift of the
/// regularized system.  Defined everywhere, including on the singular surface.
Vec eval_kappa(const StageModel& stage, const Point& pt, const ParamSet& p);

/// Tangency indicator (dDelta/dy) . kappa; zero together with delta at
/// semi-singular points.
double eval_semi_singular_indicator(const StageModel& stage, const Point& pt, const ParamSet& p);

/// Reduced state matrix df/dx - df/dy (dg/dy)^-1 dg/dx at a regular point.
Mat reduced_jacobian(const StageModel& stage, const Point& pt, const ParamSet& p,
                     double delta_floor = 1e-8);

}  // namespace daestab
