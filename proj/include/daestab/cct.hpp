#pragma once

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "daestab/equilibria.hpp"
#include "daestab/integrate.hpp"
#include "daestab/variational.hpp"

namespace daestab {

struct CctOptions {
    double bracket_low = 0.0;
    double bracket_high = 3.0;
    double cct_tol = 1e-6;
    double eps_sep = 1e-3;    // SEP convergence ball radius
    double sep_dwell = 1.0;   // time units inside the ball before Stable
    double eps_uep = 1e-2;    // ||f_post|| threshold for the CUEP check
    double eps_kappa = 1e-3;  // ||kappa|| threshold splitting the singular endpoints
    double trunc_fraction = 0.98;  // variational truncation before singular endpoints

    void validate() const {
        if (bracket_low >= bracket_high || cct_tol <= 0)
            throw ConfigError("invalid cct options (bracket or tolerance)");
    }
};

enum class Verdict { Stable, Unstable, Inconclusive };
const char* to_string(Verdict v);

/// Everything one stability judgement produced; compute_cct keeps the last
/// unstable one as the base critical trajectory.
struct JudgeDetail {
    Verdict verdict = Verdict::Inconclusive;
    std::string reason;
    Trajectory fault_traj;  // shadow-tracked; clock starts at fault inception
    Trajectory post_traj;   // clock starts at fault clearing
    Point pre_sep, post_sep;
    Point clearing;  // (x^cl, y_fault^cl); for early fault termination, the last sample
    Vec y_post_cl;   // post-fault image at clearing (empty if never obtained)
    double t_cl = 0.0;
};

/// Simulate-and-test against the post-fault SEP ball with dwell.
JudgeDetail judge_stability_detail(const ScenarioModel& scenario, double t_cl, const ParamSet& p,
                                   const IntegratorConfig& icfg, const CctOptions& copts);
Verdict judge_stability(const ScenarioModel& scenario, double t_cl, const ParamSet& p,
                        const IntegratorConfig& icfg, const CctOptions& copts);

enum class MechanismKind {
    LossOfSynchronism,
    SingularityAtClearing,
    PostFaultSemiSaddle,
    PostFaultTransverseSaddle,
};
const char* to_string(MechanismKind k);

struct Mechanism {
    MechanismKind kind;
    Point point;  // refined crossing point / critical element location
    std::optional<CriticalElement> element;
    double t_end = 0.0;    // post-fault duration to the element (0 at clearing)
    double t_cross = 0.0;  // fault-clock crossing time (SingularityAtClearing only)
};

struct CctResult {
    double cct = 0.0;
    Point clearing_state;  // (x^cl, y_fault^cl)
    Vec y_post_cl;
    Mechanism mechanism;
    double t_end = 0.0;
    std::vector<std::pair<double, bool>> bisection_history;  // (t_cl, stable)
    JudgeDetail critical;  // marginally unstable judgement (base critical trajectory)
};

/// Classifies why the marginally unstable trajectory diverged: shadow
/// singularity at clearing, passage near a type-1 UEP, or a post-fault
/// singular endpoint split by ||kappa|| into semi-saddle vs transverse
/// saddle.  Throws UnclassifiableError with diagnostics when nothing fires.
Mechanism classify_mechanism(const ScenarioModel& scenario, const JudgeDetail& detail,
                             const ParamSet& p, const IntegratorConfig& icfg,
                             const CctOptions& copts);

/// Bisection on judge_stability between the bracket endpoints.
CctResult compute_cct(const ScenarioModel& scenario, const ParamSet& p,
                      const IntegratorConfig& icfg, const CctOptions& copts);

/// Coarse forward scan over the configured bracket for the first unstable
/// clearing time; returns options with the bracket tightened around it.  The
/// stability boundary can wind, so a raw far-end bracket may sit in a
/// re-stabilized window; this anchors bisection on the first crossing.
CctOptions refine_bracket(const ScenarioModel& scenario, const ParamSet& p,
                          const IntegratorConfig& icfg, const CctOptions& copts,
                          int scan_points = 16);

/// The named blocks of the sensitivity formulas; only the blocks the active
/// mechanism needs are filled.
struct SensitivityAssembly {
    MechanismKind kind;
    Vec a1;          // pre-fault SEP location sensitivity (n)
    Mat b1;          // fault-stage flow sensitivity wrt x0 (n x n)
    Vec b2;          // f_fault at clearing (n)
    Vec b3;          // fault-stage flow sensitivity wrt p (n)
    Mat c1;          // dg_post/dx at the clearing crossing (m x n)
    Vec c2;          // dg_post/dp there (m)
    Mat d1;          // post-stage flow sensitivity wrt x^cl (n x n)
    Vec d2;          // f_post at the endpoint element (n)
    Vec d3;          // post-stage flow sensitivity wrt p (n)
    Eigen::RowVectorXd e1, e2;  // dDelta/dx, dDelta/dy at the endpoint
    double e3 = 0.0;            // dDelta/dp
    Mat f1, f2;                 // dg/dx, dg/dy at the endpoint
    Vec f3;                     // dg/dp
    Eigen::RowVectorXd g1, g2;  // dlambda/dx, dlambda/dy at the endpoint
    double g3 = 0.0;            // dlambda/dp
    Vec h1;                     // CUEP location sensitivity (n)
    Vec v_sing;                 // left null vector of dg_post/dy at clearing (m)
    Vec v_cu;                   // unstable eigenvector at the CUEP (n)
    int kappa_component = -1;   // lambda choice for transverse saddles
};

SensitivityAssembly assemble_sensitivity(const ScenarioModel& scenario, const CctResult& result,
                                         const ParamSet& p, const IntegratorConfig& icfg,
                                         const CctOptions& copts);

struct SensitivityValue {
    double dcct_dp = 0.0;
    double conditioning = 0.0;  // |denominator| or smallest singular value
};

SensitivityValue sens_singularity_at_clearing(const SensitivityAssembly& a);
SensitivityValue sens_post_fault_singularity(const SensitivityAssembly& a, MechanismKind kind);
SensitivityValue sens_cuep(const SensitivityAssembly& a);

/// Dispatch on the classified mechanism.
SensitivityValue cct_sensitivity(const ScenarioModel& scenario, const CctResult& result,
                                 const ParamSet& p, const IntegratorConfig& icfg,
                                 const CctOptions& copts);

/// Central-difference reference (CCT(p+delta) - CCT(p-delta)) / (2 delta);
/// both CCTs at oracle_cct_tol, brackets re-anchored near base_cct_hint when
/// given (NaN re-uses the configured bracket).
double fd_oracle(const ScenarioModel& scenario, const ParamSet& p, double delta,
                 const IntegratorConfig& icfg, const CctOptions& copts,
                 double oracle_cct_tol = 1e-7,
                 double base_cct_hint = std::numeric_limits<double>::quiet_NaN());

}  // namespace daestab
