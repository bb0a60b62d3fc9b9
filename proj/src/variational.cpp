#include "daestab/variational.hpp"

#include <cmath>

namespace daestab {

Mat algebraic_sensitivity(const StageModel& stage, const Point& pt, const ParamSet& p,
                          const Mat& dphix_dalpha, const Mat& dg_dalpha, double delta_floor) {
    stage.check_point(pt);
    if (dphix_dalpha.rows() != stage.n || dg_dalpha.rows() != stage.m ||
        dphix_dalpha.cols() != dg_dalpha.cols())
        throw DimensionError("algebraic_sensitivity: block dimensions disagree");
    const Mat gy = stage.dg_dy(pt.x, pt.y, p);
    if (std::abs(gy.partialPivLu().determinant()) < delta_floor)
        throw SingularPointError("algebraic_sensitivity at a singular point");
    const Mat gx = stage.dg_dx(pt.x, pt.y, p);
    return -gy.partialPivLu().solve(gx * dphix_dalpha + dg_dalpha);
}

namespace {

// Reduced coefficients of the variational ODE at one stage state:
//   S' = A S + b,  A = fx - fy gy^-1 gx,  b = fp - fy gy^-1 gp (parameter runs).
struct VarCoeffs {
    Mat a;
    Vec b;
};

VarCoeffs coeffs_at(const StageModel& stage, const Vec& x, const Vec& y, const ParamSet& p,
                    bool with_param, double delta_floor) {
    const Mat gy = stage.dg_dy(x, y, p);
    if (std::abs(gy.partialPivLu().determinant()) < delta_floor)
        throw SingularPointError("variational integration reached a singular point");
    const auto lu = gy.partialPivLu();
    const Mat fy = stage.df_dy(x, y, p);
    VarCoeffs c;
    c.a = stage.df_dx(x, y, p) - fy * lu.solve(stage.dg_dx(x, y, p));
    if (with_param) c.b = stage.df_dp(x, y, p) - fy * lu.solve(stage.dg_dp(x, y, p));
    return c;
}

}  // namespace

SensitivityHistory integrate_variational(const StageModel& stage, const Trajectory& traj,
                                         const ParamSet& p, SensTarget target,
                                         const IntegratorConfig& cfg,
                                         std::optional<double> t_stop) {
    if (traj.samples.empty()) throw DimensionError("integrate_variational: empty trajectory");
    const int n = stage.n;
    const bool with_param = target == SensTarget::Parameter;
    const int k = with_param ? 1 : n;

    Mat s = with_param ? Mat(Mat::Zero(n, 1)) : Mat(Mat::Identity(n, n));

    auto slaved = [&](const Vec& x, const Vec& y, const Mat& sv) {
        const Mat dgda = with_param ? Mat(stage.dg_dp(x, y, p)) : Mat::Zero(stage.m, k);
        return algebraic_sensitivity(stage, Point{x, y}, p, sv, dgda, cfg.delta_floor);
    };

    SensitivityHistory hist;
    hist.samples.push_back(
        {traj.samples[0].t, s, slaved(traj.samples[0].x, traj.samples[0].y, s)});

    const double t_eps = 1e-12 * std::max(1.0, std::abs(traj.back().t));
    for (std::size_t i = 0; i + 1 < traj.samples.size(); ++i) {
        const auto& cur = traj.samples[i];
        const auto& nxt = traj.samples[i + 1];
        if (t_stop && nxt.t > *t_stop + t_eps) break;
        const double dt = nxt.t - cur.t;

        // Replay the exact elementary steps (including any rescue halvings)
        // the simulator used, advancing the sensitivity through each.
        auto on_step = [&](const Vec&, const Vec&, double dts, const detail::RkStep& step) {
            VarCoeffs c[4];
            for (int j = 0; j < 4; ++j)
                c[j] = coeffs_at(stage, step.stage_pts[j].x, step.stage_pts[j].y, p, with_param,
                                 cfg.delta_floor);
            auto rhs = [&](int j, const Mat& sv) -> Mat {
                Mat r = c[j].a * sv;
                if (with_param) r.col(0) += c[j].b;
                return r;
            };
            const Mat k1 = rhs(0, s);
            const Mat k2 = rhs(1, s + 0.5 * dts * k1);
            const Mat k3 = rhs(2, s + 0.5 * dts * k2);
            const Mat k4 = rhs(3, s + dts * k3);
            s += (dts / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
        };
        const auto walk =
            detail::walk_step(stage, cur.x, cur.y, dt, p, cfg, cfg.max_step_halvings, on_step);
        if (!walk.ok)
            throw SingularPointError("variational integration could not rebuild a step");

        hist.samples.push_back({nxt.t, s, slaved(nxt.x, nxt.y, s)});
    }
    return hist;
}

}  // namespace daestab
