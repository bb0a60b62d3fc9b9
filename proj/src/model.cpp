#include "daestab/model.hpp"

#include <cmath>

namespace daestab {

namespace {

double det_of_minor(const Mat& a, int drop_row, int drop_col) {
    const int n = static_cast<int>(a.rows());
    Mat minor(n - 1, n - 1);
    int r = 0;
    for (int i = 0; i < n; ++i) {
        if (i == drop_row) continue;
        int c = 0;
        for (int j = 0; j < n; ++j) {
            if (j == drop_col) continue;
            minor(r, c++) = a(i, j);
        }
        ++r;
    }
    return minor.partialPivLu().determinant();
}

double fd_step(double v) { return 1e-6 * std::max(1.0, std::abs(v)); }

}  // namespace

Mat adjugate(const Mat& a) {
    const int n = static_cast<int>(a.rows());
    if (a.cols() != n) throw DimensionError("adjugate requires a square matrix");
    if (n == 0) return Mat(0, 0);
    if (n == 1) return Mat::Identity(1, 1);
    Mat adj(n, n);
    if (n == 2) {
        adj << a(1, 1), -a(0, 1), -a(1, 0), a(0, 0);
        return adj;
    }
    if (n == 3) {
        adj(0, 0) = a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
        adj(0, 1) = -(a(0, 1) * a(2, 2) - a(0, 2) * a(2, 1));
        adj(0, 2) = a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1);
        adj(1, 0) = -(a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0));
        adj(1, 1) = a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0);
        adj(1, 2) = -(a(0, 0) * a(1, 2) - a(0, 2) * a(1, 0));
        adj(2, 0) = a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0);
        adj(2, 1) = -(a(0, 0) * a(2, 1) - a(0, 1) * a(2, 0));
        adj(2, 2) = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
        return adj;
    }
    // adj(A)_ij = (-1)^(i+j) * M_ji with each minor determinant LU-factored;
    // stays exact near det(A) = 0 where det(A) * A^-1 would not.
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            adj(i, j) = (((i + j) % 2) ? -1.0 : 1.0) * det_of_minor(a, j, i);
    return adj;
}

double eval_delta(const StageModel& stage, const Point& pt, const ParamSet& p) {
    stage.check_point(pt);
    if (stage.delta) return stage.delta(pt.x, pt.y, p);
    return stage.dg_dy(pt.x, pt.y, p).partialPivLu().determinant();
}

DeltaGradient eval_delta_gradient(const StageModel& stage, const Point& pt, const ParamSet& p) {
    stage.check_point(pt);
    if (stage.delta_gradient) return stage.delta_gradient(pt.x, pt.y, p);
    DeltaGradient grad;
    grad.dx = Vec(stage.n);
    grad.dy = Vec(stage.m);
    Point q = pt;
    for (int i = 0; i < stage.n; ++i) {
        const double h = fd_step(pt.x(i));
        q.x(i) = pt.x(i) + h;
        const double fp = eval_delta(stage, q, p);
        q.x(i) = pt.x(i) - h;
        const double fm = eval_delta(stage, q, p);
        q.x(i) = pt.x(i);
        grad.dx(i) = (fp - fm) / (2 * h);
    }
    for (int i = 0; i < stage.m; ++i) {
        const double h = fd_step(pt.y(i));
        q.y(i) = pt.y(i) + h;
        const double fp = eval_delta(stage, q, p);
        q.y(i) = pt.y(i) - h;
        const double fm = eval_delta(stage, q, p);
        q.y(i) = pt.y(i);
        grad.dy(i) = (fp - fm) / (2 * h);
    }
    const double hp = fd_step(p.active_value());
    grad.dp = (eval_delta(stage, pt, p.with_active_shifted(hp)) -
               eval_delta(stage, pt, p.with_active_shifted(-hp))) /
              (2 * hp);
    return grad;
}

Vec eval_kappa(const StageModel& stage, const Point& pt, const ParamSet& p) {
    stage.check_point(pt);
    const Mat gy = stage.dg_dy(pt.x, pt.y, p);
    const Mat gx = stage.dg_dx(pt.x, pt.y, p);
    const Vec fv = stage.f(pt.x, pt.y, p);
    return -adjugate(gy) * (gx * fv);
}

double eval_semi_singular_indicator(const StageModel& stage, const Point& pt, const ParamSet& p) {
    const DeltaGradient grad = eval_delta_gradient(stage, pt, p);
    return grad.dy.dot(eval_kappa(stage, pt, p));
}

Mat reduced_jacobian(const StageModel& stage, const Point& pt, const ParamSet& p,
                     double delta_floor) {
    stage.check_point(pt);
    if (std::abs(eval_delta(stage, pt, p)) < delta_floor)
        throw SingularPointError("reduced_jacobian at a singular point");
    const Mat gy = stage.dg_dy(pt.x, pt.y, p);
    const Mat gx = stage.dg_dx(pt.x, pt.y, p);
    const Mat fy = stage.df_dy(pt.x, pt.y, p);
    return stage.df_dx(pt.x, pt.y, p) - fy * gy.partialPivLu().solve(gx);
}

}  // namespace daestab
