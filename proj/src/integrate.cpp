#include "daestab/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "daestab/csv.hpp"

namespace daestab {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

const char* to_string(Termination t) {
    switch (t) {
        case Termination::HorizonReached: return "horizon_reached";
        case Termination::ConvergedToSep: return "converged_to_sep";
        case Termination::SingularityReached: return "singularity_reached";
        case Termination::ShadowSingularityReached: return "shadow_singularity_reached";
        case Termination::NewtonFailure: return "newton_failure";
    }
    return "unknown";
}

namespace detail {

double branch_displacement_budget(const StageModel& stage, const Vec& x, const Vec& y,
                                  const ParamSet& p, double dt, const Vec& xdot) {
    // Factor 2 over the local drift: a resolved step moves the root by about
    // rate * dt, while a fold hop moves it by the finite branch gap, which
    // no longer shrinks as the step is halved.
    const Mat gy = stage.dg_dy(x, y, p);
    const auto lu = gy.partialPivLu();
    double rate = 0.0;
    if (std::abs(lu.determinant()) > 1e-300)
        rate = lu.solve(stage.dg_dx(x, y, p) * xdot).norm();
    return 2.0 * dt * rate + 1e-9 * (1 + y.norm());
}

AlgebraicSolve try_solve_algebraic(const StageModel& stage, const Vec& x, const Vec& y_guess,
                                   const ParamSet& p, const IntegratorConfig& cfg,
                                   bool guard_branch, double max_displacement) {
    AlgebraicSolve out;
    out.y = y_guess;
    Vec r = stage.g(x, out.y, p);
    out.residual = r.norm();
    auto accept = [&]() {
        if (max_displacement >= 0 && (out.y - y_guess).norm() > max_displacement) return false;
        if (!guard_branch || stage.m != 1) return true;
        const double a = y_guess(0), b = out.y(0);
        if (std::abs(b - a) < 1e-9 * std::max(1.0, std::abs(a))) return true;
        double prev_g = 0.0;
        bool have_prev = false;
        for (int k = 1; k <= 7; ++k) {
            Vec ym(1);
            ym(0) = a + (b - a) * k / 8.0;
            const double gv = stage.g(x, ym, p)(0);
            if (have_prev && prev_g * gv < 0) return false;  // skipped a root
            prev_g = gv;
            have_prev = true;
        }
        return true;
    };
    for (int it = 0; it < cfg.newton_max_iter; ++it) {
        if (out.residual <= cfg.newton_tol) {
            if (!accept()) {
                out.ok = false;
                out.branch_jump = true;
                return out;
            }
            out.ok = true;
            return out;
        }
        const Mat gy = stage.dg_dy(x, out.y, p);
        const double det = gy.partialPivLu().determinant();
        if (std::abs(det) < cfg.delta_floor) {
            out.near_singular = true;
            return out;
        }
        const Vec step = -gy.partialPivLu().solve(r);
        double lambda = 1.0;
        Vec y_next = out.y + step;
        Vec r_next = stage.g(x, y_next, p);
        while (r_next.norm() > out.residual && lambda > 1.0 / 64.0) {
            lambda *= 0.5;
            y_next = out.y + lambda * step;
            r_next = stage.g(x, y_next, p);
        }
        out.y = y_next;
        r = r_next;
        out.residual = r.norm();
    }
    out.ok = out.residual <= cfg.newton_tol && accept();
    return out;
}

RkStep rk4_step(const StageModel& stage, const Vec& x, const Vec& y, double dt, const ParamSet& p,
                const IntegratorConfig& cfg) {
    RkStep step;
    const double budget = branch_displacement_budget(stage, x, y, p, dt, stage.f(x, y, p));
    auto eval_stage = [&](const Vec& xs, const Vec& y_seed, RkStagePoint& out) {
        const AlgebraicSolve sol = try_solve_algebraic(stage, xs, y_seed, p, cfg, true, budget);
        if (!sol.ok) return false;
        out.x = xs;
        out.y = sol.y;
        out.k = stage.f(xs, sol.y, p);
        return true;
    };

    step.stage_pts[0] = {x, y, stage.f(x, y, p)};
    if (!eval_stage(x + 0.5 * dt * step.stage_pts[0].k, y, step.stage_pts[1])) return step;
    if (!eval_stage(x + 0.5 * dt * step.stage_pts[1].k, step.stage_pts[1].y, step.stage_pts[2]))
        return step;
    if (!eval_stage(x + dt * step.stage_pts[2].k, step.stage_pts[2].y, step.stage_pts[3]))
        return step;

    step.x1 = x + (dt / 6.0) * (step.stage_pts[0].k + 2 * step.stage_pts[1].k +
                                2 * step.stage_pts[2].k + step.stage_pts[3].k);
    const AlgebraicSolve sol =
        try_solve_algebraic(stage, step.x1, step.stage_pts[3].y, p, cfg, true, budget);
    if (!sol.ok) return step;
    step.y1 = sol.y;
    step.ok = true;
    return step;
}

StepWalk walk_step(const StageModel& stage, const Vec& x, const Vec& y, double dt,
                   const ParamSet& p, const IntegratorConfig& cfg, int depth,
                   const StepCallback& on_step) {
    const RkStep step = rk4_step(stage, x, y, dt, p, cfg);
    if (step.ok) {
        if (on_step) on_step(x, y, dt, step);
        StepWalk out;
        out.ok = true;
        out.t_covered = dt;
        out.x_end = step.x1;
        out.y_end = step.y1;
        return out;
    }
    if (depth <= 0) {
        StepWalk out;
        out.x_end = x;
        out.y_end = y;
        return out;
    }
    StepWalk first = walk_step(stage, x, y, 0.5 * dt, p, cfg, depth - 1, on_step);
    if (!first.ok) return first;
    StepWalk second =
        walk_step(stage, first.x_end, first.y_end, 0.5 * dt, p, cfg, depth - 1, on_step);
    second.t_covered += first.t_covered;
    return second;
}

}  // namespace detail

namespace {

// When a physical step dies near the singular surface, the time-rescaled
// system x' = delta f, y' = kappa, t' = delta stays smooth through the
// passage and keeps g = 0 invariant.  Riding it tells apart a genuine
// surface crossing (the trajectory ends there) from a fast algebraic sweep
// the fixed grid could not resolve (integration resumes past it).
struct BridgeOutcome {
    enum class Kind { Died, Survived, Failed } kind = Kind::Failed;
    double t;
    Vec x, y;
};

BridgeOutcome regularized_bridge(const StageModel& stage, const Vec& x0, const Vec& y0,
                                 const ParamSet& p, const IntegratorConfig& cfg, double t0) {
    BridgeOutcome out;
    out.t = t0;
    out.x = x0;
    out.y = y0;
    const double d0 = eval_delta(stage, Point{x0, y0}, p);
    if (std::abs(d0) > 0.5) return out;  // not a surface passage
    const double sign0 = d0 >= 0 ? 1.0 : -1.0;

    const Eigen::Index n = x0.size(), m = y0.size();
    Vec z(n + m + 1);
    z << x0, y0, t0;
    auto rhs = [&](const Vec& zz) {
        const Point pt{zz.head(n), zz.segment(n, m)};
        const double d = eval_delta(stage, pt, p);
        Vec dz(n + m + 1);
        dz << d * stage.f(pt.x, pt.y, p), eval_kappa(stage, pt, p), d;
        return dz;
    };
    // Hand back once the physical grid can resolve the drift again.
    auto resolvable = [&](const Vec& zz, double d) {
        if (d * sign0 < 1e-4) return false;
        const Point pt{zz.head(n), zz.segment(n, m)};
        const double budget = detail::branch_displacement_budget(stage, pt.x, pt.y, p, cfg.dt,
                                                                 stage.f(pt.x, pt.y, p));
        return budget <= 0.01 * (1 + pt.y.norm());
    };
    const double ds = cfg.dt;
    double d_prev = d0;
    Vec z_prev = z;
    for (long k = 0; k < 200000; ++k) {
        const Vec k1 = rhs(z);
        const Vec k2 = rhs(z + 0.5 * ds * k1);
        const Vec k3 = rhs(z + 0.5 * ds * k2);
        const Vec k4 = rhs(z + ds * k3);
        z_prev = z;
        z += (ds / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
        const double d = eval_delta(stage, Point{z.head(n), z.segment(n, m)}, p);
        if (d * sign0 < 0) {
            // crossed the surface: interpolate the crossing inside this step
            const double w = d_prev / (d_prev - d);
            const Vec zc = (1 - w) * z_prev + w * z;
            out.kind = BridgeOutcome::Kind::Died;
            out.x = zc.head(n);
            out.y = zc.segment(n, m);
            out.t = zc(n + m);
            return out;
        }
        if (resolvable(z, d)) {
            const auto polish = detail::try_solve_algebraic(stage, z.head(n), z.segment(n, m),
                                                            p, cfg);
            if (!polish.ok) return out;
            out.kind = BridgeOutcome::Kind::Survived;
            out.x = z.head(n);
            out.y = polish.y;
            out.t = z(n + m);
            return out;
        }
        d_prev = d;
    }
    return out;  // stalled (e.g. asymptotic approach to a pseudo equilibrium)
}

}  // namespace

Vec solve_algebraic(const StageModel& stage, const Vec& x, const Vec& y_guess, const ParamSet& p,
                    const IntegratorConfig& cfg) {
    if (x.size() != stage.n || y_guess.size() != stage.m)
        throw DimensionError("solve_algebraic: dimensions do not match stage");
    const auto sol = detail::try_solve_algebraic(stage, x, y_guess, p, cfg);
    if (!sol.ok)
        throw NewtonFailureError(sol.near_singular
                                     ? "algebraic solve hit |delta| < delta_floor"
                                     : "algebraic solve did not converge, residual " +
                                           fmt_num(sol.residual));
    return sol.y;
}

Trajectory simulate(const StageModel& stage, const Point& start, const ParamSet& p,
                    const IntegratorConfig& cfg, const StageModel* shadow_stage,
                    const std::optional<SepTarget>& sep_target) {
    cfg.validate();
    stage.check_point(start);

    Trajectory traj;
    traj.has_shadow = shadow_stage != nullptr;

    const Vec y0 = solve_algebraic(stage, start.x, start.y, p, cfg);
    Vec y_post;
    if (shadow_stage) {
        y_post = solve_algebraic(*shadow_stage, start.x, start.y, p, cfg);
    }

    auto make_sample = [&](double t, const Vec& x, const Vec& y, const Vec& ypost,
                           bool with_shadow) {
        TrajectorySample s;
        s.t = t;
        s.x = x;
        s.y = y;
        s.delta_active = eval_delta(stage, Point{x, y}, p);
        if (with_shadow) {
            s.y_post = ypost;
            s.delta_post = eval_delta(*shadow_stage, Point{x, ypost}, p);
        } else {
            s.delta_post = kNan;
        }
        return s;
    };

    traj.samples.push_back(make_sample(0.0, start.x, y0, y_post, traj.has_shadow));
    const double sign0 = traj.samples[0].delta_active >= 0 ? 1.0 : -1.0;
    const double shadow_sign0 =
        traj.has_shadow ? (traj.samples[0].delta_post >= 0 ? 1.0 : -1.0) : 0.0;

    if (std::abs(traj.samples[0].delta_active) < cfg.delta_floor)
        throw SingularPointError("simulate: start point is singular");

    double inside_since = -1.0;
    auto sep_converged = [&](const TrajectorySample& s) {
        if (!sep_target) return false;
        const double dist = std::sqrt((s.x - sep_target->sep.x).squaredNorm() +
                                      (s.y - sep_target->sep.y).squaredNorm());
        if (dist <= sep_target->radius) {
            if (inside_since < 0) inside_since = s.t;
            return s.t - inside_since >= sep_target->dwell;
        }
        inside_since = -1.0;
        return false;
    };
    if (sep_converged(traj.samples[0]) && cfg.t_max <= 0) {
        traj.termination = Termination::ConvergedToSep;
        return traj;
    }

    long step_index = 0;
    bool shadow_alive = traj.has_shadow;
    Vec x_shadow_prev = start.x;
    double t_shadow_prev = 0.0;

    // Records a new state, updates the shadow and checks the terminations.
    // Returns true when the caller should keep stepping.
    bool done = false;
    auto commit = [&](double t_new, const Vec& x_new, const Vec& y_new) {
        Vec ypost_next = y_post;
        bool shadow_now = false;
        if (shadow_alive && (step_index % cfg.shadow_stride == 0)) {
            const double elapsed = t_new - t_shadow_prev;
            const Vec xdot_avg = (x_new - x_shadow_prev) / elapsed;
            const double budget = detail::branch_displacement_budget(*shadow_stage, x_shadow_prev,
                                                                     y_post, p, elapsed, xdot_avg);
            const auto sol =
                detail::try_solve_algebraic(*shadow_stage, x_new, y_post, p, cfg, true, budget);
            if (!sol.ok) {
                if (cfg.stop_on_shadow_crossing) {
                    traj.termination = Termination::ShadowSingularityReached;
                    traj.t_event = t_new;
                    done = true;
                    return false;
                }
                shadow_alive = false;
            } else {
                ypost_next = sol.y;
                y_post = sol.y;
                shadow_now = true;
                x_shadow_prev = x_new;
                t_shadow_prev = t_new;
            }
        }

        traj.samples.push_back(make_sample(t_new, x_new, y_new, ypost_next, shadow_now));
        const auto& s = traj.back();
        if (std::abs(s.delta_active) < cfg.delta_floor || s.delta_active * sign0 < 0) {
            traj.termination = Termination::SingularityReached;
            traj.t_event = s.t;
            done = true;
            return false;
        }
        if (shadow_now && cfg.stop_on_shadow_crossing &&
            (std::abs(s.delta_post) < cfg.delta_floor || s.delta_post * shadow_sign0 < 0)) {
            traj.termination = Termination::ShadowSingularityReached;
            traj.t_event = s.t;
            done = true;
            return false;
        }
        if (sep_converged(s)) {
            traj.termination = Termination::ConvergedToSep;
            done = true;
            return false;
        }
        return true;
    };

    int consecutive_bridges = 0;
    while (true) {
        const double t = traj.back().t;
        if (t >= cfg.t_max - 1e-15 * std::max(1.0, cfg.t_max)) {
            traj.termination = Termination::HorizonReached;
            return traj;
        }
        const double dt = std::min(cfg.dt, cfg.t_max - t);

        // When the slaved drift outruns the grid, the passage is decided by
        // the regularized flow instead of brute-force stepping.
        const double drift = detail::branch_displacement_budget(
            stage, traj.back().x, traj.back().y, p, dt,
            stage.f(traj.back().x, traj.back().y, p));
        detail::StepWalk step;
        step.x_end = traj.back().x;
        step.y_end = traj.back().y;
        if (drift <= 0.02 * (1 + traj.back().y.norm())) {
            step = detail::walk_step(stage, traj.back().x, traj.back().y, dt, p, cfg,
                                     cfg.max_step_halvings, nullptr);
        }
        ++step_index;
        if (step.ok) {
            consecutive_bridges = 0;
            if (!commit(t + dt, step.x_end, step.y_end)) return traj;
            continue;
        }

        // Decide the passage with the regularized flow.
        const auto br =
            regularized_bridge(stage, step.x_end, step.y_end, p, cfg, t + step.t_covered);
        if (br.kind == BridgeOutcome::Kind::Died) {
            if (br.t > traj.back().t) {
                TrajectorySample s;
                s.t = br.t;
                s.x = br.x;
                s.y = br.y;
                s.delta_active = eval_delta(stage, Point{br.x, br.y}, p);
                s.delta_post = kNan;
                traj.samples.push_back(std::move(s));
            }
            traj.termination = Termination::SingularityReached;
            traj.t_event = br.t;
            return traj;
        }
        if (br.kind == BridgeOutcome::Kind::Survived && br.t > traj.back().t &&
            ++consecutive_bridges < 100) {
            if (!commit(br.t, br.x, br.y)) return traj;
            continue;
        }
        traj.termination = Termination::NewtonFailure;
        traj.t_event = t + step.t_covered;
        return traj;
    }
}

namespace {

// Quadratic through three (t, v) pairs; returns the root inside [lo, hi] or,
// failing that, the root nearest to `prefer` in that interval via the linear
// chord.  NaN when nothing usable exists.
double quadratic_root(const double tt[3], const double vv[3], double lo, double hi) {
    const double d01 = (vv[1] - vv[0]) / (tt[1] - tt[0]);
    const double d12 = (vv[2] - vv[1]) / (tt[2] - tt[1]);
    const double a = (d12 - d01) / (tt[2] - tt[0]);
    // v(t) = vv[0] + d01 (t - t0) + a (t - t0)(t - t1)
    const double b = d01 - a * (tt[0] + tt[1]);
    const double c0 = vv[0] - d01 * tt[0] + a * tt[0] * tt[1];
    double roots[2];
    int nroots = 0;
    if (std::abs(a) < 1e-300) {
        if (b != 0.0) roots[nroots++] = -c0 / b;
    } else {
        const double disc = b * b - 4 * a * c0;
        if (disc >= 0) {
            const double sq = std::sqrt(disc);
            const double q = -0.5 * (b + (b >= 0 ? sq : -sq));
            roots[nroots++] = q / a;
            if (q != 0.0) roots[nroots++] = c0 / q;
        }
    }
    double best = kNan;
    for (int i = 0; i < nroots; ++i) {
        if (roots[i] >= lo && roots[i] <= hi) {
            if (std::isnan(best) || roots[i] < best) best = roots[i];
        }
    }
    return best;
}

Vec interpolate_columns(const double tt[3], const Vec cols[3], double t) {
    const double l0 = (t - tt[1]) * (t - tt[2]) / ((tt[0] - tt[1]) * (tt[0] - tt[2]));
    const double l1 = (t - tt[0]) * (t - tt[2]) / ((tt[1] - tt[0]) * (tt[1] - tt[2]));
    const double l2 = (t - tt[0]) * (t - tt[1]) / ((tt[2] - tt[0]) * (tt[2] - tt[1]));
    return l0 * cols[0] + l1 * cols[1] + l2 * cols[2];
}

}  // namespace

std::pair<double, Point> locate_singularity_crossing(const Trajectory& traj,
                                                     MonitorChannel channel,
                                                     double delta_floor) {
    // Indices with a usable monitor value (the shadow may be strided).
    std::vector<std::size_t> idx;
    std::vector<double> val;
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        const auto& s = traj.samples[i];
        const double v = channel == MonitorChannel::Active ? s.delta_active : s.delta_post;
        if (std::isfinite(v)) {
            idx.push_back(i);
            val.push_back(v);
        }
    }
    if (idx.empty()) throw NoCrossingError("monitor has no samples");

    auto point_at = [&](std::size_t j) {
        const auto& s = traj.samples[idx[j]];
        return Point{s.x, channel == MonitorChannel::Active ? s.y : s.y_post};
    };

    std::size_t cross = idx.size();  // first index past a sign change
    for (std::size_t j = 0; j < idx.size(); ++j) {
        if (std::abs(val[j]) <= delta_floor)
            return {traj.samples[idx[j]].t, point_at(j)};  // exact hit
        if (j > 0 && val[j - 1] * val[j] < 0) {
            cross = j;
            break;
        }
    }

    double tt[3];
    Vec xs[3], ys[3];
    double vv[3];
    double lo, hi;
    std::size_t j2;  // newest of the three stencil points
    if (cross < idx.size()) {
        j2 = cross;
        lo = traj.samples[idx[cross - 1]].t;
        hi = traj.samples[idx[cross]].t;
    } else {
        // No in-sample crossing: extrapolate past the end (the run terminated
        // before reaching the surface).
        if (idx.size() < 3) throw NoCrossingError("monitor never approaches zero");
        j2 = idx.size() - 1;
        if (std::abs(val[j2]) >= std::abs(val[j2 - 1]))
            throw NoCrossingError("monitor never approaches zero");
        lo = traj.samples[idx[j2]].t;
        const double spacing = traj.samples[idx[j2]].t - traj.samples[idx[j2 - 1]].t;
        hi = lo + 5 * spacing;
    }
    const std::size_t j0 = j2 >= 2 ? j2 - 2 : 0;
    const std::size_t j1 = j2 >= 1 ? j2 - 1 : 0;
    const std::size_t stencil[3] = {j0, j1, j2};
    if (j0 == j1 || j1 == j2) {
        // Two-sample trajectory: linear chord.
        const double t0 = traj.samples[idx[0]].t, t1 = traj.samples[idx[j2]].t;
        const double tcross = t0 + (t1 - t0) * val[0] / (val[0] - val[j2]);
        const Point p0 = point_at(0), p1 = point_at(j2);
        const double w = (tcross - t0) / (t1 - t0);
        return {tcross, Point{(1 - w) * p0.x + w * p1.x, (1 - w) * p0.y + w * p1.y}};
    }
    for (int k = 0; k < 3; ++k) {
        const auto& s = traj.samples[idx[stencil[k]]];
        tt[k] = s.t;
        vv[k] = val[stencil[k]];
        xs[k] = s.x;
        ys[k] = channel == MonitorChannel::Active ? s.y : s.y_post;
    }
    double tcross = quadratic_root(tt, vv, lo, hi);
    if (std::isnan(tcross)) {
        if (cross < idx.size()) {
            // Bracketed sign change: fall back to the linear chord.
            tcross = tt[1] + (tt[2] - tt[1]) * vv[1] / (vv[1] - vv[2]);
        } else {
            throw NoCrossingError("extrapolated monitor has no nearby root");
        }
    }
    return {tcross, Point{interpolate_columns(tt, xs, tcross), interpolate_columns(tt, ys, tcross)}};
}

void Trajectory::write_csv(std::ostream& os) const {
    if (samples.empty()) return;
    const auto n = samples.front().x.size();
    const auto m = samples.front().y.size();
    os << "t";
    for (Eigen::Index i = 0; i < n; ++i) os << ",x" << (i + 1);
    for (Eigen::Index i = 0; i < m; ++i) os << ",y" << (i + 1);
    if (has_shadow)
        for (Eigen::Index i = 0; i < m; ++i) os << ",ypost" << (i + 1);
    os << ",delta_active";
    if (has_shadow) os << ",delta_post";
    os << "\n";
    for (const auto& s : samples) {
        os << fmt_num(s.t);
        for (Eigen::Index i = 0; i < n; ++i) os << "," << fmt_num(s.x(i));
        for (Eigen::Index i = 0; i < m; ++i) os << "," << fmt_num(s.y(i));
        if (has_shadow) {
            for (Eigen::Index i = 0; i < m; ++i)
                os << "," << (s.y_post.size() == m ? fmt_num(s.y_post(i)) : "nan");
        }
        os << "," << fmt_num(s.delta_active);
        if (has_shadow) os << "," << fmt_num(s.delta_post);
        os << "\n";
    }
}

}  // namespace daestab
