#include "daestab/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <thread>

#include "daestab/csv.hpp"

namespace daestab {

namespace {

std::ofstream open_out(const RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out_dir);
    const auto path = std::filesystem::path(cfg.out_dir) / name;
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path.string());
    return os;
}

SweepRow sweep_point(const RunConfig& cfg, int index, double p_value) {
    SweepRow row;
    row.index = index;
    row.p_value = p_value;
    try {
        const SystemCatalogEntry& entry = find_system(cfg.system_id);
        const ParamSet p = cfg.params.with(cfg.params.active_name(), p_value);
        const ScenarioModel scenario = entry.build(p);
        const CctOptions anchored = refine_bracket(scenario, p, cfg.solver, cfg.cct);
        const CctResult res = compute_cct(scenario, p, cfg.solver, anchored);
        row.cct = res.cct;
        row.mechanism = to_string(res.mechanism.kind);
        const SensitivityValue sens = cct_sensitivity(scenario, res, p, cfg.solver, cfg.cct);
        row.dcct_dp = sens.dcct_dp;
        row.cond = sens.conditioning;
        row.dcct_dp_fd = fd_oracle(scenario, p, cfg.oracle.fd_delta, cfg.solver, cfg.cct,
                                   cfg.oracle.cct_tol, res.cct);
        row.rel_err = std::abs(row.dcct_dp - row.dcct_dp_fd) /
                      std::max(std::abs(row.dcct_dp_fd), 1e-6);
    } catch (const Error& e) {
        row.status = e.what();
    }
    return row;
}

}  // namespace

SweepOutcome run_sweep(const RunConfig& cfg) {
    cfg.validate();
    const int steps = cfg.sweep.steps;
    SweepOutcome out;
    out.rows.resize(steps);

    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= steps) return;
            const double pv =
                cfg.sweep.from + (cfg.sweep.to - cfg.sweep.from) * i / double(steps - 1);
            out.rows[i] = sweep_point(cfg, i, pv);
        }
    };
    const int nworkers = std::min(cfg.workers, steps);
    if (nworkers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nworkers; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    auto transition_adjacent = [&](int i) {
        const auto& rows = out.rows;
        if (rows[i].status != "ok") return false;
        const auto differs = [&](int j) {
            return j >= 0 && j < steps && rows[j].status == "ok" &&
                   rows[j].mechanism != rows[i].mechanism;
        };
        return differs(i - 1) || differs(i + 1);
    };

    int n_fail = 0, n_tol = 0;
    for (int i = 0; i < steps; ++i) {
        const bool adjacent = transition_adjacent(i);
        if (out.rows[i].status != "ok") {
            if (!adjacent) ++n_fail;
        } else if (!adjacent && out.rows[i].rel_err > 0.02) {
            ++n_tol;
        }
    }
    out.exit_code = n_fail > 0 ? 4 : (n_tol > 0 ? 2 : 0);
    out.summary = "points=" + std::to_string(steps) + " failures=" + std::to_string(n_fail) +
                  " over_tolerance=" + std::to_string(n_tol);

    auto os = open_out(cfg, "sweep.csv");
    os << "p,cct,mechanism,dcct_dp,dcct_dp_fd,rel_err,cond,status\n";
    for (const auto& r : out.rows) {
        std::string status = r.status;
        for (auto& c : status)
            if (c == ',' || c == '\n') c = ';';
        os << fmt_num(r.p_value) << "," << fmt_num(r.cct) << "," << r.mechanism << ","
           << fmt_num(r.dcct_dp) << "," << fmt_num(r.dcct_dp_fd) << "," << fmt_num(r.rel_err)
           << "," << fmt_num(r.cond) << "," << status << "\n";
    }

    // Tangent-segment overlay: one local linear estimate per point, spanning
    // half the sweep spacing each way.
    const double half = 0.5 * (cfg.sweep.to - cfg.sweep.from) / (steps - 1);
    auto ts = open_out(cfg, "tangents.csv");
    ts << "p,cct,tan_p0,tan_cct0,tan_p1,tan_cct1\n";
    for (const auto& r : out.rows) {
        if (r.status != "ok") continue;
        ts << fmt_num(r.p_value) << "," << fmt_num(r.cct) << "," << fmt_num(r.p_value - half)
           << "," << fmt_num(r.cct - r.dcct_dp * half) << "," << fmt_num(r.p_value + half) << ","
           << fmt_num(r.cct + r.dcct_dp * half) << "\n";
    }
    return out;
}

namespace {

void write_stitched_trajectory(std::ostream& os, const Trajectory& fault_traj,
                               const Trajectory& post_traj, double t_cl) {
    const auto n = fault_traj.samples.front().x.size();
    const auto m = fault_traj.samples.front().y.size();
    os << "t,stage";
    for (Eigen::Index i = 0; i < n; ++i) os << ",x" << (i + 1);
    for (Eigen::Index i = 0; i < m; ++i) os << ",y" << (i + 1);
    for (Eigen::Index i = 0; i < m; ++i) os << ",ypost" << (i + 1);
    os << ",delta_active,delta_post\n";
    auto emit = [&](double t, const char* stage, const Vec& x, const Vec& y, const Vec& ypost,
                    double da, double dp) {
        os << fmt_num(t) << "," << stage;
        for (Eigen::Index i = 0; i < n; ++i) os << "," << fmt_num(x(i));
        for (Eigen::Index i = 0; i < m; ++i) os << "," << fmt_num(y(i));
        for (Eigen::Index i = 0; i < m; ++i)
            os << "," << (ypost.size() == m ? fmt_num(ypost(i)) : "nan");
        os << "," << fmt_num(da) << "," << fmt_num(dp) << "\n";
    };
    for (const auto& s : fault_traj.samples)
        emit(s.t, "fault", s.x, s.y, s.y_post, s.delta_active, s.delta_post);
    for (const auto& s : post_traj.samples)
        emit(t_cl + s.t, "post", s.x, s.y, s.y, s.delta_active, s.delta_active);
}

}  // namespace

int run_single(const RunConfig& cfg, double t_cl, std::ostream& log) {
    cfg.validate();
    const SystemCatalogEntry& entry = find_system(cfg.system_id);
    const ScenarioModel scenario = entry.build(cfg.params);
    const JudgeDetail detail =
        judge_stability_detail(scenario, t_cl, cfg.params, cfg.solver, cfg.cct);

    auto os = open_out(cfg, "trajectory.csv");
    write_stitched_trajectory(os, detail.fault_traj, detail.post_traj, t_cl);

    log << "system=" << cfg.system_id << " tcl=" << fmt_num(t_cl)
        << " verdict=" << to_string(detail.verdict);
    if (!detail.reason.empty()) log << " reason=\"" << detail.reason << "\"";
    log << " fault_end=" << fmt_num(detail.fault_traj.back().t);
    if (!detail.post_traj.samples.empty())
        log << " post_end=" << fmt_num(detail.post_traj.back().t)
            << " post_termination=" << to_string(detail.post_traj.termination);
    log << "\n";
    return 0;
}

int run_portrait(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    const SystemCatalogEntry& entry = find_system(cfg.system_id);
    const ScenarioModel scenario = entry.build(cfg.params);
    const ParamSet& p = cfg.params;
    const StageModel& post = scenario.post;

    // (a) short trajectories from a rectangular grid of dynamic states
    int skipped = 0;
    {
        auto os = open_out(cfg, "portrait_grid.csv");
        os << "seed,t";
        for (int i = 0; i < post.n; ++i) os << ",x" << (i + 1);
        for (int i = 0; i < post.m; ++i) os << ",y" << (i + 1);
        os << ",delta\n";
        int seed = 0;
        for (int i = 0; i < cfg.portrait.x1_steps; ++i) {
            for (int j = 0; j < cfg.portrait.x2_steps; ++j, ++seed) {
                Vec x0(2);
                x0 << cfg.portrait.x1_min +
                          (cfg.portrait.x1_max - cfg.portrait.x1_min) *
                              (cfg.portrait.x1_steps == 1 ? 0.5
                                                          : i / double(cfg.portrait.x1_steps - 1)),
                    cfg.portrait.x2_min +
                        (cfg.portrait.x2_max - cfg.portrait.x2_min) *
                            (cfg.portrait.x2_steps == 1 ? 0.5
                                                        : j / double(cfg.portrait.x2_steps - 1));
                try {
                    const Vec y0 = solve_algebraic(post, x0, entry.y_guess, p, cfg.solver);
                    IntegratorConfig icfg = cfg.solver;
                    icfg.t_max = cfg.portrait.traj_t;
                    const Trajectory traj = simulate(post, Point{x0, y0}, p, icfg);
                    for (const auto& s : traj.samples) {
                        os << seed << "," << fmt_num(s.t);
                        for (int c = 0; c < post.n; ++c) os << "," << fmt_num(s.x(c));
                        for (int c = 0; c < post.m; ++c) os << "," << fmt_num(s.y(c));
                        os << "," << fmt_num(s.delta_active) << "\n";
                    }
                } catch (const Error&) {
                    ++skipped;
                }
            }
        }
    }

    // (b) singular-surface trace {g = 0, delta = 0} by an x2 scan with
    // continuation of the (x1, y) Newton solution
    {
        auto os = open_out(cfg, "portrait_trace.csv");
        os << "x1,x2,y,delta,g_norm\n";
        const double lo =
            cfg.portrait.trace_min != 0 || cfg.portrait.trace_max != 0 ? cfg.portrait.trace_min
                                                                       : entry.trace_scan_min;
        const double hi =
            cfg.portrait.trace_min != 0 || cfg.portrait.trace_max != 0 ? cfg.portrait.trace_max
                                                                       : entry.trace_scan_max;
        const int npts = cfg.portrait.trace_points;
        struct TracePt {
            double x1, x2, y, delta, gnorm;
        };
        std::vector<TracePt> pts;
        auto solve_at = [&](double x2, Point seed) -> std::optional<Point> {
            // 2x2 Newton on [g; delta] over (x1, y) at fixed x2
            Point q = seed;
            q.x(1) = x2;
            for (int it = 0; it < 60; ++it) {
                Vec r(2);
                r << post.g(q.x, q.y, p)(0), eval_delta(post, q, p);
                if (r.lpNorm<Eigen::Infinity>() < 1e-12) return q;
                const Mat gx = post.dg_dx(q.x, q.y, p);
                const Mat gy = post.dg_dy(q.x, q.y, p);
                const DeltaGradient grad = eval_delta_gradient(post, q, p);
                Mat j(2, 2);
                j << gx(0, 0), gy(0, 0), grad.dx(0), grad.dy(0);
                Eigen::FullPivLU<Mat> lu(j);
                if (!lu.isInvertible()) return std::nullopt;
                const Vec step = lu.solve(r);
                q.x(0) -= step(0);
                q.y(0) -= step(1);
            }
            return std::nullopt;
        };
        auto scan = [&](double from, double to, int count) {
            Point seed = entry.trace_seed;
            for (int i = 0; i < count; ++i) {
                const double x2 = from + (to - from) * i / double(count - 1);
                const auto q = solve_at(x2, seed);
                if (!q) continue;
                seed = *q;
                pts.push_back({q->x(0), x2, q->y(0), eval_delta(post, *q, p),
                               post.g(q->x, q->y, p).norm()});
            }
        };
        const double mid = entry.trace_seed.x(1);
        const int n_up = std::max(2, int(npts * (hi - mid) / (hi - lo)));
        const int n_dn = std::max(2, npts - n_up);
        scan(mid, hi, n_up);
        scan(mid, lo, n_dn);
        std::sort(pts.begin(), pts.end(),
                  [](const TracePt& a, const TracePt& b) { return a.x2 < b.x2; });
        for (const auto& t : pts)
            os << fmt_num(t.x1) << "," << fmt_num(t.x2) << "," << fmt_num(t.y) << ","
               << fmt_num(t.delta) << "," << fmt_num(t.gnorm) << "\n";
    }

    // (c) critical elements from the catalog seeds
    {
        auto os = open_out(cfg, "portrait_elements.csv");
        os << "kind,label";
        for (int i = 0; i < post.n; ++i) os << ",x" << (i + 1);
        for (int i = 0; i < post.m; ++i) os << ",y" << (i + 1);
        os << ",f_norm,delta,kappa_norm\n";
        auto emit = [&](const CriticalElement& el) {
            const Point& q = el.location;
            os << to_string(el.kind) << "," << el.label();
            for (int i = 0; i < post.n; ++i) os << "," << fmt_num(q.x(i));
            for (int i = 0; i < post.m; ++i) os << "," << fmt_num(q.y(i));
            os << "," << fmt_num(post.f(q.x, q.y, p).norm()) << ","
               << fmt_num(eval_delta(post, q, p)) << ","
               << fmt_num(eval_kappa(post, q, p).norm()) << "\n";
        };
        int failures = 0;
        for (const auto& seed : entry.equilibrium_seeds) {
            try {
                const Point eq = find_equilibrium(post, seed, p);
                emit(classify_equilibrium(post, eq, p, cfg.solver.delta_floor));
            } catch (const Error&) {
                ++failures;
            }
        }
        double interior_sign = 1.0;
        try {
            const Point sep = find_equilibrium(post, scenario.sep_guess, p);
            interior_sign = eval_delta(post, sep, p) >= 0 ? 1.0 : -1.0;
        } catch (const Error&) {
        }
        for (const auto& seed : entry.pseudo_seeds) {
            try {
                const Point pep = find_pseudo_ep(post, seed, p);
                emit(classify_pseudo_ep(post, pep, p));
            } catch (const Error&) {
                ++failures;
            }
        }
        for (const auto& seed : entry.semi_seeds) {
            try {
                const Point ss = find_semi_singular(post, seed, p);
                emit(classify_semi_singular(post, ss, p, interior_sign));
            } catch (const Error&) {
                ++failures;
            }
        }
        skipped += failures;
    }

    // (d) base critical trajectory for the configured fault
    if (cfg.portrait.with_critical) {
        const CctResult res =
            compute_cct(scenario, p, cfg.solver, refine_bracket(scenario, p, cfg.solver, cfg.cct));
        auto os = open_out(cfg, "portrait_critical.csv");
        write_stitched_trajectory(os, res.critical.fault_traj, res.critical.post_traj, res.cct);
        auto sum = open_out(cfg, "portrait_summary.csv");
        sum << "cct,mechanism,t_end\n";
        sum << fmt_num(res.cct) << "," << to_string(res.mechanism.kind) << ","
            << fmt_num(res.t_end) << "\n";
    }

    log << "portrait written to " << cfg.out_dir << " (skipped seeds: " << skipped << ")\n";
    return 0;
}

void write_systems_list(std::ostream& os) {
    for (const auto& entry : system_catalog()) {
        os << entry.id << ": " << entry.description << "\n  defaults:";
        for (const auto& [k, v] : entry.defaults.values()) os << " " << k << "=" << fmt_num(v);
        os << " (active: " << entry.defaults.active_name() << ")\n";
    }
}

}  // namespace daestab
