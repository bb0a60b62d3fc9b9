#include "daestab/systems.hpp"

#include <cmath>

namespace daestab {

namespace {

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}
Vec vec1(double a) {
    Vec v(1);
    v << a;
    return v;
}

StageModel example75_post_stage() {
    StageModel s;
    s.n = 2;
    s.m = 1;
    s.f = [](const Vec& x, const Vec& y, const ParamSet& ps) {
        const double p = ps.value("p");
        const double y1 = y(0);
        return vec2(1 + p - x(0) + p * y1, 2 - x(1) + p * y1 * y1);
    };
    s.g = [](const Vec& x, const Vec& y, const ParamSet& ps) {
        const double p = ps.value("p");
        const double y1 = y(0);
        return vec1(x(0) * y1 - p * y1 - x(1) + y1 * y1 * y1);
    };
    s.df_dx = [](const Vec&, const Vec&, const ParamSet&) {
        Mat j(2, 2);
        j << -1, 0, 0, -1;
        return j;
    };
    s.df_dy = [](const Vec&, const Vec& y, const ParamSet& ps) {
        const double p = ps.value("p");
        Mat j(2, 1);
        j << p, 2 * p * y(0);
        return j;
    };
    s.df_dp = [](const Vec&, const Vec& y, const ParamSet&) {
        const double y1 = y(0);
        return vec2(1 + y1, y1 * y1);
    };
    s.dg_dx = [](const Vec&, const Vec& y, const ParamSet&) {
        Mat j(1, 2);
        j << y(0), -1;
        return j;
    };
    s.dg_dy = [](const Vec& x, const Vec& y, const ParamSet& ps) {
        Mat j(1, 1);
        j << x(0) - ps.value("p") + 3 * y(0) * y(0);
        return j;
    };
    s.dg_dp = [](const Vec&, const Vec& y, const ParamSet&) { return vec1(-y(0)); };
    s.delta = [](const Vec& x, const Vec& y, const ParamSet& ps) {
        return 3 * y(0) * y(0) - ps.value("p") + x(0);
    };
    s.delta_gradient = [](const Vec&, const Vec& y, const ParamSet&) {
        DeltaGradient grad;
        grad.dx = vec2(1, 0);
        grad.dy = vec1(6 * y(0));
        grad.dp = -1;
        return grad;
    };
    return s;
}

StageModel example75_fault_stage() {
    StageModel s = example75_post_stage();  // keeps the shared constraint
    s.f = [](const Vec& x, const Vec&, const ParamSet&) { return vec2(x(1), -1); };
    s.df_dx = [](const Vec&, const Vec&, const ParamSet&) {
        Mat j(2, 2);
        j << 0, 1, 0, 0;
        return j;
    };
    s.df_dy = [](const Vec&, const Vec&, const ParamSet&) { return Mat::Zero(2, 1); };
    s.df_dp = [](const Vec&, const Vec&, const ParamSet&) { return Vec::Zero(2); };
    return s;
}

struct SmibParams {
    double X, Pm, E, M, Dl, Dg, Ql;
};

SmibParams smib_params(const ParamSet& ps) {
    return {ps.value("X"),  ps.value("Pm"), ps.value("E"), ps.value("M"),
            ps.value("Dl"), ps.value("Dg"), ps.value("Ql")};
}

StageModel smib_post_stage(LoadModel load) {
    StageModel s;
    s.n = 2;
    s.m = 1;
    s.f = [](const Vec& x, const Vec& y, const ParamSet& ps) {
        const auto q = smib_params(ps);
        const double acc = q.Pm - (q.E * y(0) / q.X) * std::sin(x(0));
        return vec2(x(1) + acc / q.Dl, (acc - q.Dg * x(1)) / q.M);
    };
    s.g = [load](const Vec& x, const Vec& y, const ParamSet& ps) {
        const auto q = smib_params(ps);
        const double ql = load == LoadModel::Constant ? q.Ql : q.Ql * (1 + x(1));
        return vec1((q.E * y(0) / q.X) * std::cos(x(0)) - y(0) * y(0) / q.X - ql);
    };
    s.df_dx = [](const Vec& x, const Vec& y, const ParamSet& ps) {
        const auto q = smib_params(ps);
        const double dpe = (q.E * y(0) / q.X) * std::cos(x(0));
        Mat j(2, 2);
        j << -dpe / q.Dl, 1, -dpe / q.M, -q.Dg / q.M;
        return j;
    };
    s.df_dy = [](const Vec& x, const Vec&, const ParamSet& ps) {
        const auto q = smib_params(ps);
        const double dpe = (q.E / q.X) * std::sin(x(0));
        Mat j(2, 1);
        j << -dpe / q.Dl, -dpe / q.M;
        return j;
    };
    s.df_dp = [](const Vec& x, const Vec& y, const ParamSet& ps) {
        const auto q = smib_params(ps);
        const double s1 = std::sin(x(0));
        const double pe = (q.E * y(0) / q.X) * s1;
        const double acc = q.Pm - pe;
        const std::string& a = ps.active_name();
        if (a == "Pm") return vec2(1 / q.Dl, 1 / q.M);
        if (a == "M") return vec2(0, -(acc - q.Dg * x(1)) / (q.M * q.M));
        if (a == "X") return vec2(pe / (q.X * q.Dl), pe / (q.X * q.M));
        if (a == "E") {
            const double d = (y(0) / q.X) * s1;
            return vec2(-d / q.Dl, -d / q.M);
        }
        if (a == "Dl") return vec2(-acc / (q.Dl * q.Dl), 0);
        if (a == "Dg") return vec2(0, -x(1) / q.M);
        if (a == "Ql") return vec2(0, 0);
        throw ConfigError("smib: unknown active parameter " + a);
    };
    s.dg_dx = [load](const Vec& x, const Vec& y, const ParamSet& ps) {
        const auto q = smib_params(ps);
        Mat j(1, 2);
        j << -(q.E * y(0) / q.X) * std::sin(x(0)),
            (load == LoadModel::Constant ? 0.0 : -q.Ql);
        return j;
    };
    s.dg_dy = [](const Vec& x, const Vec& y, const ParamSet& ps) {
        const auto q = smib_params(ps);
        Mat j(1, 1);
        j << (q.E / q.X) * std::cos(x(0)) - 2 * y(0) / q.X;
        return j;
    };
    s.dg_dp = [load](const Vec& x, const Vec& y, const ParamSet& ps) {
        const auto q = smib_params(ps);
        const double c1 = std::cos(x(0));
        const std::string& a = ps.active_name();
        if (a == "X") return vec1((-q.E * y(0) * c1 + y(0) * y(0)) / (q.X * q.X));
        if (a == "E") return vec1((y(0) / q.X) * c1);
        if (a == "Ql") return vec1(load == LoadModel::Constant ? -1.0 : -(1 + x(1)));
        if (a == "Pm" || a == "M" || a == "Dl" || a == "Dg") return vec1(0.0);
        throw ConfigError("smib: unknown active parameter " + a);
    };
    s.delta = [](const Vec& x, const Vec& y, const ParamSet& ps) {
        const auto q = smib_params(ps);
        return (q.E * std::cos(x(0)) - 2 * y(0)) / q.X;
    };
    s.delta_gradient = [](const Vec& x, const Vec& y, const ParamSet& ps) {
        const auto q = smib_params(ps);
        const double c1 = std::cos(x(0));
        DeltaGradient grad;
        grad.dx = vec2(-(q.E / q.X) * std::sin(x(0)), 0);
        grad.dy = vec1(-2 / q.X);
        const std::string& a = ps.active_name();
        if (a == "X")
            grad.dp = -(q.E * c1 - 2 * y(0)) / (q.X * q.X);
        else if (a == "E")
            grad.dp = c1 / q.X;
        else
            grad.dp = 0.0;
        return grad;
    };
    return s;
}

StageModel smib_fault_stage(LoadModel load) {
    StageModel s = smib_post_stage(load);  // machine dynamics unchanged
    s.g = [](const Vec&, const Vec& y, const ParamSet&) { return vec1(y(0)); };
    s.dg_dx = [](const Vec&, const Vec&, const ParamSet&) { return Mat::Zero(1, 2); };
    s.dg_dy = [](const Vec&, const Vec&, const ParamSet&) { return Mat::Identity(1, 1); };
    s.dg_dp = [](const Vec&, const Vec&, const ParamSet&) { return Vec::Zero(1); };
    s.delta = [](const Vec&, const Vec&, const ParamSet&) { return 1.0; };
    s.delta_gradient = [](const Vec&, const Vec&, const ParamSet&) {
        DeltaGradient grad;
        grad.dx = Vec::Zero(2);
        grad.dy = Vec::Zero(1);
        grad.dp = 0;
        return grad;
    };
    return s;
}

Point point2(double x1, double x2, double y1) { return Point{vec2(x1, x2), vec1(y1)}; }

}  // namespace

ScenarioModel build_example75(const ParamSet& p) {
    (void)p.value("p");  // fail fast on an incomplete parameter set
    ScenarioModel sc;
    sc.post = example75_post_stage();
    sc.pre = sc.post;  // scenario starts at the post-fault SEP
    sc.fault = example75_fault_stage();
    sc.name = "example75";
    sc.sep_guess = point2(1.0 + 2 * p.value("p"), 2.0 + p.value("p"), 1.0);
    return sc;
}

ScenarioModel build_smib(const ParamSet& p, LoadModel load) {
    (void)smib_params(p);
    ScenarioModel sc;
    sc.post = smib_post_stage(load);
    sc.pre = sc.post;  // fault clears without changing the topology
    sc.fault = smib_fault_stage(load);
    sc.name = load == LoadModel::Constant ? "smib_const" : "smib_freq";
    sc.sep_guess = point2(0.2, 0.0, 0.9);
    return sc;
}

const std::vector<SystemCatalogEntry>& system_catalog() {
    static const std::vector<SystemCatalogEntry> catalog = [] {
        std::vector<SystemCatalogEntry> entries;

        SystemCatalogEntry ex75;
        ex75.id = "example75";
        ex75.description =
            "two-state cubic-constraint system; semi-saddle and transverse "
            "saddle pseudo EP on the stability boundary";
        ex75.defaults = ParamSet{{{"p", 0.0}}, "p"};
        ex75.build = [](const ParamSet& p) { return build_example75(p); };
        ex75.equilibrium_seeds = {point2(1.0, 2.0, 1.0)};
        ex75.pseudo_seeds = {point2(-2.8, -1.9, 1.05)};
        ex75.semi_seeds = {point2(0.05, 0.02, 0.02)};
        ex75.y_guess = vec1(1.0);
        ex75.trace_seed = point2(0.0, 0.0, 0.0);
        ex75.trace_scan_min = -3.0;
        ex75.trace_scan_max = 3.0;
        ex75.bracket_low = 0.0;
        ex75.bracket_high = 5.8;
        entries.push_back(ex75);

        const ParamSet smib_defaults{{{"X", 0.5},
                                      {"Pm", 0.3},
                                      {"E", 1.0},
                                      {"M", 1.0},
                                      {"Dl", 1.0},
                                      {"Dg", 1.0},
                                      {"Ql", 0.1}},
                                     "Pm"};

        SystemCatalogEntry sc;
        sc.id = "smib_const";
        sc.description = "one machine one bus, constant reactive load";
        sc.defaults = smib_defaults;
        sc.build = [](const ParamSet& p) { return build_smib(p, LoadModel::Constant); };
        sc.equilibrium_seeds = {point2(0.16, 0.0, 0.93), point2(1.1, 0.0, 0.28)};
        sc.pseudo_seeds = {point2(1.1, 0.1, 0.22), point2(1.1, -0.1, 0.22)};
        sc.semi_seeds = {};  // dDelta/dy never vanishes for this constraint
        sc.y_guess = vec1(0.9);
        sc.trace_seed = point2(1.1, 0.0, 0.22);
        sc.trace_scan_min = -2.0;
        sc.trace_scan_max = 2.0;
        sc.bracket_low = 0.0;
        sc.bracket_high = 3.0;
        entries.push_back(sc);

        SystemCatalogEntry sf = sc;
        sf.id = "smib_freq";
        sf.description = "one machine one bus, frequency dependent reactive load";
        sf.defaults = smib_defaults.with("Pm", 0.5);
        sf.defaults.set_active("M");
        sf.build = [](const ParamSet& p) { return build_smib(p, LoadModel::FrequencyDependent); };
        entries.push_back(sf);

        return entries;
    }();
    return catalog;
}

const SystemCatalogEntry& find_system(const std::string& id) {
    for (const auto& entry : system_catalog())
        if (entry.id == id) return entry;
    throw ConfigError("unknown system id: " + id);
}

}  // namespace daestab
