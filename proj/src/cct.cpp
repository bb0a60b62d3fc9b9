#include "daestab/cct.hpp"

#include <algorithm>
#include <cmath>

#include "daestab/csv.hpp"

namespace daestab {

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Stable: return "stable";
        case Verdict::Unstable: return "unstable";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "unknown";
}

const char* to_string(MechanismKind k) {
    switch (k) {
        case MechanismKind::LossOfSynchronism: return "loss_of_synchronism";
        case MechanismKind::SingularityAtClearing: return "singularity_at_clearing";
        case MechanismKind::PostFaultSemiSaddle: return "post_fault_semi_saddle";
        case MechanismKind::PostFaultTransverseSaddle: return "post_fault_transverse_saddle";
    }
    return "unknown";
}

JudgeDetail judge_stability_detail(const ScenarioModel& scenario, double t_cl, const ParamSet& p,
                                   const IntegratorConfig& icfg, const CctOptions& copts) {
    if (t_cl < 0) throw ConfigError("judge_stability: negative clearing time");
    JudgeDetail out;
    out.t_cl = t_cl;
    out.pre_sep = find_equilibrium(scenario.pre, scenario.sep_guess, p);
    out.post_sep = find_equilibrium(scenario.post, scenario.sep_guess, p);

    IntegratorConfig fault_cfg = icfg;
    fault_cfg.t_max = t_cl;
    fault_cfg.stop_on_shadow_crossing = true;
    const Vec y_fault0 =
        solve_algebraic(scenario.fault, out.pre_sep.x, out.pre_sep.y, p, icfg);
    out.fault_traj = simulate(scenario.fault, Point{out.pre_sep.x, y_fault0}, p, fault_cfg,
                              &scenario.post);

    out.clearing = Point{out.fault_traj.back().x, out.fault_traj.back().y};
    if (out.fault_traj.back().y_post.size() == scenario.post.m)
        out.y_post_cl = out.fault_traj.back().y_post;

    if (out.fault_traj.termination != Termination::HorizonReached) {
        out.verdict = Verdict::Unstable;
        out.reason = std::string("fault stage: ") + to_string(out.fault_traj.termination);
        return out;
    }

    if (out.y_post_cl.size() != scenario.post.m) {
        // Strided shadow: recover the post-fault image at the clearing state.
        Vec seed = out.post_sep.y;
        for (auto it = out.fault_traj.samples.rbegin(); it != out.fault_traj.samples.rend(); ++it)
            if (it->y_post.size() == scenario.post.m) {
                seed = it->y_post;
                break;
            }
        const auto sol =
            detail::try_solve_algebraic(scenario.post, out.clearing.x, seed, p, icfg);
        if (!sol.ok) {
            out.verdict = Verdict::Unstable;
            out.reason = "post-fault image does not exist at clearing";
            return out;
        }
        out.y_post_cl = sol.y;
    }

    const double delta_cl =
        eval_delta(scenario.post, Point{out.clearing.x, out.y_post_cl}, p);
    if (std::abs(delta_cl) < icfg.delta_floor) {
        out.verdict = Verdict::Unstable;
        out.reason = "clearing state on the post-fault singular surface";
        return out;
    }

    IntegratorConfig post_cfg = icfg;
    const SepTarget target{out.post_sep, copts.eps_sep, copts.sep_dwell};
    out.post_traj = simulate(scenario.post, Point{out.clearing.x, out.y_post_cl}, p, post_cfg,
                             nullptr, target);
    switch (out.post_traj.termination) {
        case Termination::ConvergedToSep:
            out.verdict = Verdict::Stable;
            break;
        case Termination::HorizonReached:
            out.verdict = Verdict::Inconclusive;
            out.reason = "t_max reached outside the SEP ball";
            break;
        default:
            out.verdict = Verdict::Unstable;
            out.reason = std::string("post stage: ") + to_string(out.post_traj.termination);
            break;
    }
    return out;
}

Verdict judge_stability(const ScenarioModel& scenario, double t_cl, const ParamSet& p,
                        const IntegratorConfig& icfg, const CctOptions& copts) {
    return judge_stability_detail(scenario, t_cl, p, icfg, copts).verdict;
}

Mechanism classify_mechanism(const ScenarioModel& scenario, const JudgeDetail& detail,
                             const ParamSet& p, const IntegratorConfig& icfg,
                             const CctOptions& copts) {
    if (detail.verdict != Verdict::Unstable)
        throw UnclassifiableError("classify_mechanism requires an unstable judgement");
    const StageModel& post = scenario.post;

    // (1) The post-fault image hit S_post during the fault or at clearing.
    const bool fault_cut_short =
        detail.fault_traj.termination != Termination::HorizonReached;
    const bool clearing_singular =
        detail.post_traj.samples.empty() ||
        std::abs(detail.post_traj.samples.front().delta_active) <= icfg.delta_floor;
    if (fault_cut_short || clearing_singular) {
        Mechanism mech;
        mech.kind = MechanismKind::SingularityAtClearing;
        MonitorChannel channel = MonitorChannel::Shadow;
        if (detail.fault_traj.termination == Termination::SingularityReached)
            channel = MonitorChannel::Active;  // shared fault/post constraint
        auto [t_cross, pt] =
            locate_singularity_crossing(detail.fault_traj, channel, icfg.delta_floor);
        try {
            pt = refine_singular_point(post, pt, p);
        } catch (const Error&) {
            // keep the interpolated point
        }
        mech.point = pt;
        mech.t_cross = t_cross;
        mech.t_end = 0.0;
        return mech;
    }

    // (2) Passage near a type-1 UEP (loss of synchronism).
    double fmin = std::numeric_limits<double>::infinity();
    std::size_t imin = 0;
    double t_first_below = -1.0;
    for (std::size_t i = 0; i < detail.post_traj.samples.size(); ++i) {
        const auto& s = detail.post_traj.samples[i];
        const double fi = post.f(s.x, s.y, p).norm();
        if (fi < fmin) {
            fmin = fi;
            imin = i;
        }
        if (t_first_below < 0 && fi <= copts.eps_uep) t_first_below = s.t;
    }
    if (fmin <= copts.eps_uep) {
        const auto& s = detail.post_traj.samples[imin];
        try {
            const Point eq = find_equilibrium(post, Point{s.x, s.y}, p);
            const double sep_dist = std::sqrt((eq.x - detail.post_sep.x).squaredNorm() +
                                              (eq.y - detail.post_sep.y).squaredNorm());
            if (sep_dist > copts.eps_sep) {
                const CriticalElement el = classify_equilibrium(post, eq, p, icfg.delta_floor);
                if (el.kind == ElementKind::Uep && el.uep_type == 1) {
                    Mechanism mech;
                    mech.kind = MechanismKind::LossOfSynchronism;
                    mech.point = eq;
                    mech.element = el;
                    mech.t_end = t_first_below;
                    return mech;
                }
            }
        } catch (const Error&) {
            // fall through to the singular-endpoint branch
        }
    }

    // (3) Post-fault trajectory terminated at the singular surface.
    if (detail.post_traj.termination == Termination::SingularityReached ||
        detail.post_traj.termination == Termination::NewtonFailure) {
        auto [t_end, endpoint] =
            locate_singularity_crossing(detail.post_traj, MonitorChannel::Active,
                                        icfg.delta_floor);
        const double kappa_norm = eval_kappa(post, endpoint, p).norm();
        Mechanism mech;
        mech.t_end = t_end;
        if (kappa_norm <= copts.eps_kappa) {
            mech.kind = MechanismKind::PostFaultTransverseSaddle;
            mech.point = find_pseudo_ep(post, endpoint, p);
            mech.element = classify_pseudo_ep(post, mech.point, p);
        } else {
            mech.kind = MechanismKind::PostFaultSemiSaddle;
            mech.point = find_semi_singular(post, endpoint, p);
            const double interior =
                detail.post_traj.samples.front().delta_active >= 0 ? 1.0 : -1.0;
            mech.element = classify_semi_singular(post, mech.point, p, interior);
        }
        return mech;
    }

    throw UnclassifiableError(
        "no mechanism branch fired: fault=" +
        std::string(to_string(detail.fault_traj.termination)) +
        ", post=" + to_string(detail.post_traj.termination) +
        ", min ||f_post|| = " + fmt_num(fmin));
}

CctResult compute_cct(const ScenarioModel& scenario, const ParamSet& p,
                      const IntegratorConfig& icfg, const CctOptions& copts) {
    copts.validate();
    double lo = copts.bracket_low;
    double hi = copts.bracket_high;

    CctResult res;
    auto judge = [&](double t_cl) {
        JudgeDetail d = judge_stability_detail(scenario, t_cl, p, icfg, copts);
        if (d.verdict == Verdict::Inconclusive)
            throw InconclusiveError("judge_stability inconclusive at t_cl = " + fmt_num(t_cl) +
                                    "; raise t_max");
        res.bisection_history.emplace_back(t_cl, d.verdict == Verdict::Stable);
        return d;
    };

    JudgeDetail d_lo = judge(lo);
    if (d_lo.verdict != Verdict::Stable)
        throw BracketError("bracket.low = " + fmt_num(lo) + " is not stable");
    JudgeDetail d_hi = judge(hi);
    if (d_hi.verdict != Verdict::Unstable)
        throw BracketError("bracket.high = " + fmt_num(hi) + " is not unstable");
    res.critical = std::move(d_hi);

    while (hi - lo > copts.cct_tol) {
        const double mid = 0.5 * (lo + hi);
        JudgeDetail d = judge(mid);
        if (d.verdict == Verdict::Stable) {
            lo = mid;
        } else {
            hi = mid;
            res.critical = std::move(d);
        }
    }

    res.cct = 0.5 * (lo + hi);
    res.mechanism = classify_mechanism(scenario, res.critical, p, icfg, copts);
    res.t_end = res.mechanism.t_end;

    if (res.mechanism.kind == MechanismKind::SingularityAtClearing) {
        // The clearing state is the interpolated shadow crossing.
        const Vec y_fault = solve_algebraic(scenario.fault, res.mechanism.point.x,
                                            res.critical.clearing.y, p, icfg);
        res.clearing_state = Point{res.mechanism.point.x, y_fault};
        res.y_post_cl = res.mechanism.point.y;
    } else {
        res.clearing_state = res.critical.clearing;
        res.y_post_cl = res.critical.y_post_cl;
    }
    return res;
}

CctOptions refine_bracket(const ScenarioModel& scenario, const ParamSet& p,
                          const IntegratorConfig& icfg, const CctOptions& copts,
                          int scan_points) {
    copts.validate();
    double last_stable = std::numeric_limits<double>::quiet_NaN();
    for (int i = 0; i <= scan_points; ++i) {
        const double t = copts.bracket_low +
                         (copts.bracket_high - copts.bracket_low) * i / double(scan_points);
        Verdict v;
        try {
            v = judge_stability(scenario, t, p, icfg, copts);
        } catch (const Error&) {
            continue;
        }
        if (v == Verdict::Stable) {
            last_stable = t;
        } else if (v == Verdict::Unstable) {
            if (std::isnan(last_stable))
                throw BracketError("scan: unstable before any stable clearing time");
            CctOptions out = copts;
            out.bracket_low = last_stable;
            out.bracket_high = t;
            return out;
        }
    }
    throw BracketError("scan: no unstable clearing time in [" + fmt_num(copts.bracket_low) +
                       ", " + fmt_num(copts.bracket_high) + "]");
}

namespace {

// Flow sensitivities to a singular endpoint via the time-rescaled system.
// With psi the flow of (x', y', t') = (delta f, kappa, delta) in rescaled
// time s, the physical flow satisfies phi(z0, t(z0, s)) = psi(z0, s), so
//   d phi/d alpha |_t  =  d psi/d alpha |_s  -  (dz/dt) * d t/d alpha |_s.
// Every right-hand quantity is smooth through the singular surface, which
// evaluates D1 and D3 at the endpoint exactly instead of truncating the
// integrable 1/delta tail of the physical variational equations.
struct EndpointSensitivity {
    bool ok = false;
    Mat d1;  // n x n
    Vec d3;  // n
    Point endpoint;
    double t_end = 0.0;
};

EndpointSensitivity regularized_endpoint_sensitivity(const StageModel& stage, const Point& start,
                                                     const ParamSet& p,
                                                     const IntegratorConfig& icfg,
                                                     double t_stop) {
    const int n = stage.n, m = stage.m;
    const int dim = n + m + 1;  // (x, y, t)
    const int cols = n + 1;     // d/dx^cl columns then d/dp

    auto rhs = [&](const Vec& z, const ParamSet& pp) {
        const Point pt{z.head(n), z.segment(n, m)};
        const double d = eval_delta(stage, pt, pp);
        Vec out(dim);
        out << d * stage.f(pt.x, pt.y, pp), eval_kappa(stage, pt, pp), d;
        return out;
    };
    auto jac = [&](const Vec& z) {
        Mat j(dim, dim + 1);  // state columns (t column zero), then d rhs/d p
        Vec q = z;
        for (int i = 0; i < n + m; ++i) {
            const double h = 1e-6 * std::max(1.0, std::abs(z(i)));
            q(i) = z(i) + h;
            const Vec fp = rhs(q, p);
            q(i) = z(i) - h;
            const Vec fm = rhs(q, p);
            q(i) = z(i);
            j.col(i) = (fp - fm) / (2 * h);
        }
        j.col(n + m).setZero();  // t does not enter the autonomous field
        const double hp = 1e-6 * std::max(1.0, std::abs(p.active_value()));
        j.col(dim) = (rhs(z, p.with_active_shifted(hp)) - rhs(z, p.with_active_shifted(-hp))) /
                     (2 * hp);
        return j;
    };

    EndpointSensitivity out;
    Vec z(dim);
    z << start.x, start.y, 0.0;
    const double d_start = eval_delta(stage, start, p);
    const double sign0 = d_start >= 0 ? 1.0 : -1.0;

    Mat v(dim, cols);
    v.setZero();
    v.topLeftCorner(n, n).setIdentity();
    {
        const Mat gy = stage.dg_dy(start.x, start.y, p);
        const Mat gx = stage.dg_dx(start.x, start.y, p);
        const auto lu = gy.partialPivLu();
        v.block(n, 0, m, n) = -lu.solve(gx);
        v.block(n, n, m, 1) = -lu.solve(stage.dg_dp(start.x, start.y, p));
    }

    const double ds = icfg.dt;
    for (long k = 0; k < 400000; ++k) {
        // one RK4 step of the state and the variational matrix together
        Vec zs[4];
        Mat js[4];
        zs[0] = z;
        Vec k1 = rhs(zs[0], p);
        zs[1] = z + 0.5 * ds * k1;
        Vec k2 = rhs(zs[1], p);
        zs[2] = z + 0.5 * ds * k2;
        Vec k3 = rhs(zs[2], p);
        zs[3] = z + ds * k3;
        Vec k4 = rhs(zs[3], p);
        const Vec z_next = z + (ds / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);

        for (int j = 0; j < 4; ++j) js[j] = jac(zs[j]);
        auto vdot = [&](const Mat& full, const Mat& vv) {
            Mat r = full.leftCols(dim) * vv;
            r.col(cols - 1) += full.col(dim);  // parameter forcing
            return r;
        };
        const Mat m1 = vdot(js[0], v);
        const Mat m2 = vdot(js[1], v + 0.5 * ds * m1);
        const Mat m3 = vdot(js[2], v + 0.5 * ds * m2);
        const Mat m4 = vdot(js[3], v + ds * m3);
        const Mat v_next = v + (ds / 6.0) * (m1 + 2 * m2 + 2 * m3 + m4);

        const double d_next =
            eval_delta(stage, Point{z_next.head(n), z_next.segment(n, m)}, p);
        if (d_next * sign0 < 0) {
            const double d_cur = eval_delta(stage, Point{z.head(n), z.segment(n, m)}, p);
            const double w = d_cur / (d_cur - d_next);
            const Vec zc = (1 - w) * z + w * z_next;
            const Mat vc = (1 - w) * v + w * v_next;
            out.endpoint = Point{zc.head(n), zc.segment(n, m)};
            out.t_end = zc(dim - 1);
            const Vec f_end = stage.f(out.endpoint.x, out.endpoint.y, p);
            const Mat vx = vc.topRows(n);
            const Eigen::RowVectorXd vt = vc.row(dim - 1);
            out.d1 = vx.leftCols(n) - f_end * vt.head(n);
            out.d3 = vx.col(cols - 1) - f_end * vt(cols - 1);
            out.ok = true;
            return out;
        }
        z = z_next;
        v = v_next;
        if (!v.allFinite()) return out;
    }
    return out;
}

Eigen::RowVectorXd fd_lambda_row_x(const StageModel& stage, const Point& pt, const ParamSet& p,
                                   const std::function<double(const Point&, const ParamSet&)>& f) {
    Eigen::RowVectorXd row(stage.n);
    Point q = pt;
    for (int i = 0; i < stage.n; ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(pt.x(i)));
        q.x(i) = pt.x(i) + h;
        const double fp = f(q, p);
        q.x(i) = pt.x(i) - h;
        const double fm = f(q, p);
        q.x(i) = pt.x(i);
        row(i) = (fp - fm) / (2 * h);
    }
    return row;
}

Eigen::RowVectorXd fd_lambda_row_y(const StageModel& stage, const Point& pt, const ParamSet& p,
                                   const std::function<double(const Point&, const ParamSet&)>& f) {
    Eigen::RowVectorXd row(stage.m);
    Point q = pt;
    for (int i = 0; i < stage.m; ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(pt.y(i)));
        q.y(i) = pt.y(i) + h;
        const double fp = f(q, p);
        q.y(i) = pt.y(i) - h;
        const double fm = f(q, p);
        q.y(i) = pt.y(i);
        row(i) = (fp - fm) / (2 * h);
    }
    return row;
}

double fd_lambda_p(const Point& pt, const ParamSet& p,
                   const std::function<double(const Point&, const ParamSet&)>& f) {
    const double h = 1e-6 * std::max(1.0, std::abs(p.active_value()));
    return (f(pt, p.with_active_shifted(h)) - f(pt, p.with_active_shifted(-h))) / (2 * h);
}

// Picks the kappa component whose row keeps the constraint stack best
// conditioned (forced for m = 1).
int select_kappa_component(const StageModel& stage, const Point& pt, const ParamSet& p) {
    if (stage.m == 1) return 0;
    const Mat gx = stage.dg_dx(pt.x, pt.y, p);
    const Mat gy = stage.dg_dy(pt.x, pt.y, p);
    const DeltaGradient grad = eval_delta_gradient(stage, pt, p);
    int best = 0;
    double best_sigma = -1.0;
    for (int i = 0; i < stage.m; ++i) {
        auto kappa_i = [&](const Point& q, const ParamSet& pp) {
            return eval_kappa(stage, q, pp)(i);
        };
        Mat stack(stage.m + 2, stage.n + stage.m);
        stack.topLeftCorner(stage.m, stage.n) = gx;
        stack.topRightCorner(stage.m, stage.m) = gy;
        stack.row(stage.m).head(stage.n) = grad.dx.transpose();
        stack.row(stage.m).tail(stage.m) = grad.dy.transpose();
        stack.row(stage.m + 1).head(stage.n) = fd_lambda_row_x(stage, pt, p, kappa_i);
        stack.row(stage.m + 1).tail(stage.m) = fd_lambda_row_y(stage, pt, p, kappa_i);
        const double sigma =
            stack.jacobiSvd().singularValues().tail(1)(0);
        if (sigma > best_sigma) {
            best_sigma = sigma;
            best = i;
        }
    }
    return best;
}

}  // namespace

SensitivityAssembly assemble_sensitivity(const ScenarioModel& scenario, const CctResult& result,
                                         const ParamSet& p, const IntegratorConfig& icfg,
                                         const CctOptions& copts) {
    SensitivityAssembly a;
    a.kind = result.mechanism.kind;
    const StageModel& post = scenario.post;

    a.a1 = equilibrium_location_sensitivity(scenario.pre, result.critical.pre_sep, p,
                                            icfg.delta_floor);

    // Fault-stage flow sensitivities up to the clearing instant.
    const Trajectory* fault_traj = &result.critical.fault_traj;
    Trajectory refit;
    if (a.kind == MechanismKind::SingularityAtClearing) {
        // Re-run the fault stage on a grid that ends exactly at the crossing.
        IntegratorConfig cfg = icfg;
        cfg.t_max = result.mechanism.t_cross;
        cfg.stop_on_shadow_crossing = false;
        const Vec y_fault0 = solve_algebraic(scenario.fault, result.critical.pre_sep.x,
                                             result.critical.pre_sep.y, p, icfg);
        refit = simulate(scenario.fault, Point{result.critical.pre_sep.x, y_fault0}, p, cfg);
        fault_traj = &refit;
    }
    a.b1 = integrate_variational(scenario.fault, *fault_traj, p, SensTarget::InitialState, icfg)
               .back()
               .dx;
    a.b3 = integrate_variational(scenario.fault, *fault_traj, p, SensTarget::Parameter, icfg)
               .back()
               .dx.col(0);
    a.b2 = scenario.fault.f(result.clearing_state.x, result.clearing_state.y, p);

    switch (a.kind) {
        case MechanismKind::SingularityAtClearing: {
            const Point cross{result.clearing_state.x, result.y_post_cl};
            a.c1 = post.dg_dx(cross.x, cross.y, p);
            a.c2 = post.dg_dp(cross.x, cross.y, p);
            const Mat gy = post.dg_dy(cross.x, cross.y, p);
            const Eigen::JacobiSVD<Mat> svd(gy, Eigen::ComputeFullU);
            a.v_sing = svd.matrixU().col(post.m - 1);
            break;
        }
        case MechanismKind::LossOfSynchronism: {
            const double t_stop = result.t_end;
            const auto h1 = integrate_variational(post, result.critical.post_traj, p,
                                                  SensTarget::InitialState, icfg, t_stop);
            const auto h3 = integrate_variational(post, result.critical.post_traj, p,
                                                  SensTarget::Parameter, icfg, t_stop);
            a.d1 = h1.back().dx;
            a.d3 = h3.back().dx.col(0);
            const Point& cuep = result.mechanism.point;
            a.h1 = equilibrium_location_sensitivity(post, cuep, p, icfg.delta_floor);
            a.v_cu = result.mechanism.element->unstable_direction;
            break;
        }
        case MechanismKind::PostFaultSemiSaddle:
        case MechanismKind::PostFaultTransverseSaddle: {
            const Point post_start{result.critical.post_traj.samples.front().x,
                                   result.critical.post_traj.samples.front().y};
            const auto reg = regularized_endpoint_sensitivity(post, post_start, p, icfg);
            if (reg.ok) {
                a.d1 = reg.d1;
                a.d3 = reg.d3;
            } else {
                // Fallback: physical variational run truncated before the
                // singular endpoint.
                const double t_stop = copts.trunc_fraction * result.t_end;
                a.d1 = integrate_variational(post, result.critical.post_traj, p,
                                             SensTarget::InitialState, icfg, t_stop)
                           .back()
                           .dx;
                a.d3 = integrate_variational(post, result.critical.post_traj, p,
                                             SensTarget::Parameter, icfg, t_stop)
                           .back()
                           .dx.col(0);
            }

            const Point& end = result.mechanism.point;
            a.d2 = post.f(end.x, end.y, p);
            const DeltaGradient grad = eval_delta_gradient(post, end, p);
            a.e1 = grad.dx.transpose();
            a.e2 = grad.dy.transpose();
            a.e3 = grad.dp;
            a.f1 = post.dg_dx(end.x, end.y, p);
            a.f2 = post.dg_dy(end.x, end.y, p);
            a.f3 = post.dg_dp(end.x, end.y, p);

            std::function<double(const Point&, const ParamSet&)> lambda;
            if (a.kind == MechanismKind::PostFaultSemiSaddle) {
                lambda = [&post](const Point& q, const ParamSet& pp) {
                    return eval_semi_singular_indicator(post, q, pp);
                };
            } else {
                a.kappa_component = select_kappa_component(post, end, p);
                const int ki = a.kappa_component;
                lambda = [&post, ki](const Point& q, const ParamSet& pp) {
                    return eval_kappa(post, q, pp)(ki);
                };
            }
            a.g1 = fd_lambda_row_x(post, end, p, lambda);
            a.g2 = fd_lambda_row_y(post, end, p, lambda);
            a.g3 = fd_lambda_p(end, p, lambda);
            break;
        }
    }
    return a;
}

SensitivityValue sens_singularity_at_clearing(const SensitivityAssembly& a) {
    const Vec inner = a.c2 + a.c1 * (a.b1 * a.a1 + a.b3);
    const double num = a.v_sing.dot(inner);
    const double den = a.v_sing.dot(a.c1 * a.b2);
    if (std::abs(den) < 1e-10)
        throw DegenerateDenominatorError(
            "singularity-at-clearing sensitivity: |v' C1 B2| = " + fmt_num(std::abs(den)));
    return {-num / den, std::abs(den)};
}

SensitivityValue sens_post_fault_singularity(const SensitivityAssembly& a, MechanismKind kind) {
    if (kind != MechanismKind::PostFaultSemiSaddle &&
        kind != MechanismKind::PostFaultTransverseSaddle)
        throw ConfigError("sens_post_fault_singularity: wrong mechanism kind");
    const int m = static_cast<int>(a.f2.rows());
    const Vec j = a.d3 + a.d1 * (a.b1 * a.a1 + a.b3);

    Mat sys(m + 2, m + 2);
    Vec rhs(m + 2);
    const Vec d1b2 = a.d1 * a.b2;
    sys(0, 0) = a.e1.dot(d1b2);
    sys(0, 1) = a.e1.dot(a.d2);
    sys.row(0).tail(m) = a.e2;
    rhs(0) = -a.e3 - a.e1.dot(j);
    sys.block(1, 0, m, 1) = a.f1 * d1b2;
    sys.block(1, 1, m, 1) = a.f1 * a.d2;
    sys.block(1, 2, m, m) = a.f2;
    rhs.segment(1, m) = -a.f3 - a.f1 * j;
    sys(m + 1, 0) = a.g1.dot(d1b2);
    sys(m + 1, 1) = a.g1.dot(a.d2);
    sys.row(m + 1).tail(m) = a.g2;
    rhs(m + 1) = -a.g3 - a.g1.dot(j);

    const Eigen::JacobiSVD<Mat> svd(sys, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double sigma_min = svd.singularValues().tail(1)(0);
    if (sigma_min < 1e-10)
        throw IllConditionedError("post-fault singularity sensitivity: sigma_min = " +
                                  fmt_num(sigma_min));
    const Vec sol = svd.solve(rhs);
    return {sol(0), sigma_min};
}

SensitivityValue sens_cuep(const SensitivityAssembly& a) {
    const Vec inner = a.h1 - (a.d3 + a.d1 * (a.b1 * a.a1 + a.b3));
    const double num = a.v_cu.dot(inner);
    const double den = a.v_cu.dot(a.d1 * a.b2);
    if (std::abs(den) < 1e-10)
        throw DegenerateDenominatorError("cuep sensitivity: |v' D1 B2| = " +
                                         fmt_num(std::abs(den)));
    return {-num / den, std::abs(den)};
}

SensitivityValue cct_sensitivity(const ScenarioModel& scenario, const CctResult& result,
                                 const ParamSet& p, const IntegratorConfig& icfg,
                                 const CctOptions& copts) {
    const SensitivityAssembly a = assemble_sensitivity(scenario, result, p, icfg, copts);
    switch (a.kind) {
        case MechanismKind::SingularityAtClearing: return sens_singularity_at_clearing(a);
        case MechanismKind::LossOfSynchronism: return sens_cuep(a);
        case MechanismKind::PostFaultSemiSaddle:
        case MechanismKind::PostFaultTransverseSaddle:
            return sens_post_fault_singularity(a, a.kind);
    }
    throw Error("cct_sensitivity: unhandled mechanism");
}

double fd_oracle(const ScenarioModel& scenario, const ParamSet& p, double delta,
                 const IntegratorConfig& icfg, const CctOptions& copts, double oracle_cct_tol,
                 double base_cct_hint) {
    auto cct_at = [&](double shift) {
        const ParamSet pp = p.with_active_shifted(shift);
        CctOptions oc = copts;
        oc.cct_tol = oracle_cct_tol;
        if (std::isfinite(base_cct_hint)) {
            double w = std::max(0.05, 0.1 * std::abs(base_cct_hint));
            for (;;) {
                oc.bracket_low = std::max(copts.bracket_low, base_cct_hint - w);
                oc.bracket_high = std::min(copts.bracket_high, base_cct_hint + w);
                try {
                    return compute_cct(scenario, pp, icfg, refine_bracket(scenario, pp, icfg, oc))
                        .cct;
                } catch (const BracketError&) {
                    if (oc.bracket_low <= copts.bracket_low &&
                        oc.bracket_high >= copts.bracket_high)
                        throw;
                    w *= 4;
                }
            }
        }
        return compute_cct(scenario, pp, icfg, refine_bracket(scenario, pp, icfg, oc)).cct;
    };
    const double plus = cct_at(delta);
    const double minus = cct_at(-delta);
    return (plus - minus) / (2 * delta);
}

}  // namespace daestab
