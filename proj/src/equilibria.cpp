#include "daestab/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "daestab/csv.hpp"

namespace daestab {

const char* to_string(ElementKind k) {
    switch (k) {
        case ElementKind::Sep: return "sep";
        case ElementKind::Uep: return "uep";
        case ElementKind::PseudoEp: return "pseudo_ep";
        case ElementKind::SemiSingular: return "semi_singular";
    }
    return "unknown";
}
const char* to_string(PseudoClass c) {
    switch (c) {
        case PseudoClass::TransverseSaddle: return "transverse_saddle";
        case PseudoClass::TransverseSource: return "transverse_source";
        case PseudoClass::TransverseSink: return "transverse_sink";
    }
    return "unknown";
}
const char* to_string(SemiClass c) {
    switch (c) {
        case SemiClass::SemiSaddle: return "semi_saddle";
        case SemiClass::SemiFocus: return "semi_focus";
    }
    return "unknown";
}

std::string CriticalElement::label() const {
    switch (kind) {
        case ElementKind::Sep: return "sep";
        case ElementKind::Uep: return "uep_type" + std::to_string(uep_type);
        case ElementKind::PseudoEp:
            return pseudo_class ? to_string(*pseudo_class) : "pseudo_ep";
        case ElementKind::SemiSingular:
            return semi_class ? to_string(*semi_class) : "semi_singular";
    }
    return "unknown";
}

namespace {

using ResidualFn = std::function<Vec(const Vec&)>;
using JacobianFn = std::function<Mat(const Vec&)>;

// Damped Newton; Gauss-Newton minimum-norm steps when the system is not
// square.  Converges on the infinity norm of the residual.
Vec newton_solve(const ResidualFn& res, const JacobianFn& jac, Vec z, const NewtonOptions& opts,
                 const char* what) {
    Vec r = res(z);
    double rnorm = r.lpNorm<Eigen::Infinity>();
    if (rnorm <= opts.tol) return z;  // fixed point: zero iterations
    for (int it = 0; it < opts.max_iter; ++it) {
        const Mat j = jac(z);
        Vec step;
        if (j.rows() == j.cols()) {
            Eigen::FullPivLU<Mat> lu(j);
            if (!lu.isInvertible())
                throw SingularJacobianError(std::string(what) + ": singular Newton matrix");
            step = -lu.solve(r);
        } else {
            step = -j.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(r);
        }
        double lambda = 1.0;
        Vec z_next = z + step;
        Vec r_next = res(z_next);
        while (r_next.lpNorm<Eigen::Infinity>() > rnorm && lambda > 1.0 / 1024.0) {
            lambda *= 0.5;
            z_next = z + lambda * step;
            r_next = res(z_next);
        }
        z = z_next;
        r = r_next;
        rnorm = r.lpNorm<Eigen::Infinity>();
        if (rnorm <= opts.tol) return z;
    }
    throw NewtonFailureError(std::string(what) + ": no convergence, residual " + fmt_num(rnorm));
}

Point split(const StageModel& stage, const Vec& z) {
    return Point{z.head(stage.n), z.tail(stage.m)};
}
Vec join(const Point& pt) {
    Vec z(pt.x.size() + pt.y.size());
    z << pt.x, pt.y;
    return z;
}

double fd_step(double v) { return 1e-6 * std::max(1.0, std::abs(v)); }

// Central-difference row of a scalar field over the stacked (x, y) state.
Eigen::RowVectorXd fd_row(const StageModel& stage, const Vec& z,
                          const std::function<double(const Point&)>& field) {
    Eigen::RowVectorXd row(z.size());
    Vec q = z;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double h = fd_step(z(i));
        q(i) = z(i) + h;
        const double fp = field(split(stage, q));
        q(i) = z(i) - h;
        const double fm = field(split(stage, q));
        q(i) = z(i);
        row(i) = (fp - fm) / (2 * h);
    }
    return row;
}

Mat fd_rows(const StageModel& stage, const Vec& z,
            const std::function<Vec(const Point&)>& field, int rows) {
    Mat out(rows, z.size());
    Vec q = z;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double h = fd_step(z(i));
        q(i) = z(i) + h;
        const Vec fp = field(split(stage, q));
        q(i) = z(i) - h;
        const Vec fm = field(split(stage, q));
        q(i) = z(i);
        out.col(i) = (fp - fm) / (2 * h);
    }
    return out;
}

}  // namespace

Point find_equilibrium(const StageModel& stage, const Point& guess, const ParamSet& p,
                       const NewtonOptions& opts) {
    stage.check_point(guess);
    auto res = [&](const Vec& z) {
        const Point pt = split(stage, z);
        Vec r(stage.n + stage.m);
        r << stage.f(pt.x, pt.y, p), stage.g(pt.x, pt.y, p);
        return r;
    };
    auto jac = [&](const Vec& z) {
        const Point pt = split(stage, z);
        Mat j(stage.n + stage.m, stage.n + stage.m);
        j.topLeftCorner(stage.n, stage.n) = stage.df_dx(pt.x, pt.y, p);
        j.topRightCorner(stage.n, stage.m) = stage.df_dy(pt.x, pt.y, p);
        j.bottomLeftCorner(stage.m, stage.n) = stage.dg_dx(pt.x, pt.y, p);
        j.bottomRightCorner(stage.m, stage.m) = stage.dg_dy(pt.x, pt.y, p);
        return j;
    };
    return split(stage, newton_solve(res, jac, join(guess), opts, "find_equilibrium"));
}

CriticalElement classify_equilibrium(const StageModel& stage, const Point& eq, const ParamSet& p,
                                     double delta_floor) {
    const Mat a = reduced_jacobian(stage, eq, p, delta_floor);
    const Eigen::EigenSolver<Mat> es(a);
    if (es.info() != Eigen::Success)
        throw Error("classify_equilibrium: eigen decomposition failed");

    CriticalElement el;
    el.location = eq;
    el.eigenvalues = es.eigenvalues();
    int unstable = 0;
    int unstable_index = -1;
    for (Eigen::Index i = 0; i < el.eigenvalues.size(); ++i) {
        const double re = el.eigenvalues(i).real();
        if (std::abs(re) < 1e-8)
            throw EigenvalueOnAxisError("classify_equilibrium: eigenvalue on the axis, Re = " +
                                        fmt_num(re));
        if (re > 0) {
            ++unstable;
            unstable_index = static_cast<int>(i);
        }
    }
    if (unstable == 0) {
        el.kind = ElementKind::Sep;
        return el;
    }
    el.kind = ElementKind::Uep;
    el.uep_type = unstable;
    if (unstable == 1) {
        // A lone positive eigenvalue of a real matrix is real, so the
        // eigenvector can be rotated to a real one.
        Eigen::VectorXcd vc = es.eigenvectors().col(unstable_index);
        Eigen::Index imax;
        vc.cwiseAbs().maxCoeff(&imax);
        vc *= std::conj(vc(imax)) / std::abs(vc(imax));
        Vec v = vc.real();
        v.normalize();
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (std::abs(v(i)) > 1e-12) {
                if (v(i) < 0) v = -v;
                break;
            }
        }
        el.unstable_direction = v;
    }
    return el;
}

Point find_pseudo_ep(const StageModel& stage, const Point& guess, const ParamSet& p,
                     const NewtonOptions& opts) {
    stage.check_point(guess);
    const int m = stage.m;
    auto res = [&](const Vec& z) {
        const Point pt = split(stage, z);
        Vec r(2 * m + 1);
        r << stage.g(pt.x, pt.y, p), eval_delta(stage, pt, p), eval_kappa(stage, pt, p);
        return r;
    };
    auto jac = [&](const Vec& z) {
        const Point pt = split(stage, z);
        Mat j(2 * m + 1, stage.n + m);
        j.block(0, 0, m, stage.n) = stage.dg_dx(pt.x, pt.y, p);
        j.block(0, stage.n, m, m) = stage.dg_dy(pt.x, pt.y, p);
        const DeltaGradient grad = eval_delta_gradient(stage, pt, p);
        j.row(m).head(stage.n) = grad.dx.transpose();
        j.row(m).tail(m) = grad.dy.transpose();
        j.bottomRows(m) = fd_rows(
            stage, z, [&](const Point& q) { return eval_kappa(stage, q, p); }, m);
        return j;
    };
    const Point out = split(stage, newton_solve(res, jac, join(guess), opts, "find_pseudo_ep"));
    if (stage.f(out.x, out.y, p).norm() < 1e-3)
        throw WrongElementKindError("find_pseudo_ep: converged to an equilibrium (f ~ 0)");
    return out;
}

Point find_semi_singular(const StageModel& stage, const Point& guess, const ParamSet& p,
                         const NewtonOptions& opts) {
    stage.check_point(guess);
    const int m = stage.m;
    auto res = [&](const Vec& z) {
        const Point pt = split(stage, z);
        Vec r(m + 2);
        r << stage.g(pt.x, pt.y, p), eval_delta(stage, pt, p),
            eval_semi_singular_indicator(stage, pt, p);
        return r;
    };
    auto jac = [&](const Vec& z) {
        const Point pt = split(stage, z);
        Mat j(m + 2, stage.n + m);
        j.block(0, 0, m, stage.n) = stage.dg_dx(pt.x, pt.y, p);
        j.block(0, stage.n, m, m) = stage.dg_dy(pt.x, pt.y, p);
        const DeltaGradient grad = eval_delta_gradient(stage, pt, p);
        j.row(m).head(stage.n) = grad.dx.transpose();
        j.row(m).tail(m) = grad.dy.transpose();
        j.row(m + 1) = fd_row(
            stage, z, [&](const Point& q) { return eval_semi_singular_indicator(stage, q, p); });
        return j;
    };
    const Point out =
        split(stage, newton_solve(res, jac, join(guess), opts, "find_semi_singular"));
    if (eval_kappa(stage, out, p).norm() < 1e-6)
        throw WrongElementKindError("find_semi_singular: kappa vanishes (pseudo EP?)");
    return out;
}

namespace {

Vec regularized_rhs(const StageModel& stage, const Point& pt, const ParamSet& p) {
    Vec r(stage.n + stage.m);
    r << eval_delta(stage, pt, p) * stage.f(pt.x, pt.y, p), eval_kappa(stage, pt, p);
    return r;
}

}  // namespace

CriticalElement classify_pseudo_ep(const StageModel& stage, const Point& pep, const ParamSet& p) {
    stage.check_point(pep);
    const Vec z = join(pep);
    const Mat j = fd_rows(
        stage, z, [&](const Point& q) { return regularized_rhs(stage, q, p); },
        stage.n + stage.m);
    const Eigen::EigenSolver<Mat> es(j);
    Eigen::VectorXcd ev = es.eigenvalues();
    std::vector<int> order(ev.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return std::abs(ev(a)) > std::abs(ev(b)); });
    if (ev.size() > 2) {
        const double mag2 = std::abs(ev(order[1]));
        const double mag3 = std::abs(ev(order[2]));
        if (mag2 < 1e2 * mag3)
            throw AmbiguousSpectrumError(
                "classify_pseudo_ep: transversal/center eigenvalue gap only " +
                fmt_num(mag3 > 0 ? mag2 / mag3 : 0.0) + "x");
    }
    const double re1 = ev(order[0]).real();
    const double re2 = ev(order[1]).real();
    CriticalElement el;
    el.kind = ElementKind::PseudoEp;
    el.location = pep;
    el.eigenvalues = ev;
    if (re1 > 0 && re2 > 0)
        el.pseudo_class = PseudoClass::TransverseSource;
    else if (re1 < 0 && re2 < 0)
        el.pseudo_class = PseudoClass::TransverseSink;
    else
        el.pseudo_class = PseudoClass::TransverseSaddle;
    return el;
}

CriticalElement classify_semi_singular(const StageModel& stage, const Point& pt,
                                       const ParamSet& p, double interior_sign) {
    stage.check_point(pt);
    // One small RK4 step of the regularized flow each way; the second
    // difference of delta tells which side the flow curves to.
    const double h = 1e-3;
    auto flow_step = [&](double dt) {
        Vec z = join(pt);
        auto rhs = [&](const Vec& zz) { return regularized_rhs(stage, split(stage, zz), p); };
        const Vec k1 = rhs(z);
        const Vec k2 = rhs(z + 0.5 * dt * k1);
        const Vec k3 = rhs(z + 0.5 * dt * k2);
        const Vec k4 = rhs(z + dt * k3);
        return Vec(z + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4));
    };
    const double d0 = eval_delta(stage, pt, p);
    const double dp = eval_delta(stage, split(stage, flow_step(h)), p);
    const double dm = eval_delta(stage, split(stage, flow_step(-h)), p);
    const double curvature = (dp - 2 * d0 + dm) / (h * h);

    CriticalElement el;
    el.kind = ElementKind::SemiSingular;
    el.location = pt;
    el.semi_class =
        curvature * interior_sign > 0 ? SemiClass::SemiSaddle : SemiClass::SemiFocus;
    el.borderline = std::abs(curvature) < 1e-3;
    return el;
}

Vec equilibrium_location_sensitivity(const StageModel& stage, const Point& eq, const ParamSet& p,
                                     double delta_floor) {
    const Mat a = reduced_jacobian(stage, eq, p, delta_floor);
    Eigen::FullPivLU<Mat> lu(a);
    if (!lu.isInvertible())
        throw SingularJacobianError("equilibrium_location_sensitivity: reduced matrix singular");
    const Mat gy = stage.dg_dy(eq.x, eq.y, p);
    const Mat fy = stage.df_dy(eq.x, eq.y, p);
    const Vec rhs = fy * gy.partialPivLu().solve(stage.dg_dp(eq.x, eq.y, p)) -
                    stage.df_dp(eq.x, eq.y, p);
    return lu.solve(rhs);
}

Point refine_singular_point(const StageModel& stage, const Point& guess, const ParamSet& p,
                            const NewtonOptions& opts) {
    stage.check_point(guess);
    const int m = stage.m;
    auto res = [&](const Vec& z) {
        const Point pt = split(stage, z);
        Vec r(m + 1);
        r << stage.g(pt.x, pt.y, p), eval_delta(stage, pt, p);
        return r;
    };
    auto jac = [&](const Vec& z) {
        const Point pt = split(stage, z);
        Mat j(m + 1, stage.n + m);
        j.block(0, 0, m, stage.n) = stage.dg_dx(pt.x, pt.y, p);
        j.block(0, stage.n, m, m) = stage.dg_dy(pt.x, pt.y, p);
        const DeltaGradient grad = eval_delta_gradient(stage, pt, p);
        j.row(m).head(stage.n) = grad.dx.transpose();
        j.row(m).tail(m) = grad.dy.transpose();
        return j;
    };
    return split(stage, newton_solve(res, jac, join(guess), opts, "refine_singular_point"));
}

}  // namespace daestab
