#pragma once

#include <optional>
#include <string>

#include "daestab/model.hpp"

namespace daestab {

enum class ElementKind { Sep, Uep, PseudoEp, SemiSingular };
enum class PseudoClass { TransverseSaddle, TransverseSource, TransverseSink };
enum class SemiClass { SemiSaddle, SemiFocus };

const char* to_string(ElementKind k);
const char* to_string(PseudoClass c);
const char* to_string(SemiClass c);

struct CriticalElement {
    ElementKind kind;
    int uep_type = 0;  // number of eigenvalues with positive real part
    std::optional<PseudoClass> pseudo_class;
    std::optional<SemiClass> semi_class;
    bool borderline = false;  // classification margin too thin to trust blindly
    Point location;
    Eigen::VectorXcd eigenvalues;  // reduced matrix (EPs) / regularized system (pseudo EPs)
    Vec unstable_direction;        // unit v_cu for type-1 UEPs, empty otherwise

    std::string label() const;
};

struct NewtonOptions {
    double tol = 1e-12;  // infinity-norm residual target
    int max_iter = 100;
};

/// Newton on the stacked system [f; g] = 0.  A guess already at residual tol
/// is returned unchanged without iterating.
Point find_equilibrium(const StageModel& stage, const Point& guess, const ParamSet& p,
                       const NewtonOptions& opts = {});

/// Eigen-classification of a regular equilibrium via the reduced state
/// matrix; refuses points with an eigenvalue real part within 1e-8 of zero.
/// Type-1 UEPs carry the unit unstable eigenvector, sign-fixed so its first
/// nonzero component is positive.
CriticalElement classify_equilibrium(const StageModel& stage, const Point& eq, const ParamSet& p,
                                     double delta_floor = 1e-8);

/// Newton on [g; delta; kappa] = 0, post-verified against ||f|| >= 1e-3.
Point find_pseudo_ep(const StageModel& stage, const Point& guess, const ParamSet& p,
                     const NewtonOptions& opts = {});

/// Newton on [g; delta; (dDelta/dy).kappa] = 0, post-verified against
/// ||kappa|| >= 1e-6.
Point find_semi_singular(const StageModel& stage, const Point& guess, const ParamSet& p,
                         const NewtonOptions& opts = {});

/// Classifies a pseudo equilibrium by the two dominant eigenvalues of the
/// regularized system's Jacobian (finite differenced).
CriticalElement classify_pseudo_ep(const StageModel& stage, const Point& pep, const ParamSet& p);

/// Semi-saddle vs semi-focus: sign of the second time derivative of delta
/// along the regularized flow, compared against the interior delta sign.
CriticalElement classify_semi_singular(const StageModel& stage, const Point& pt,
                                       const ParamSet& p, double interior_sign);

/// Implicit-function derivative of the equilibrium location with respect to
/// the active parameter (A1 at the pre-fault SEP, H1 at the CUEP).
Vec equilibrium_location_sensitivity(const StageModel& stage, const Point& eq, const ParamSet& p,
                                     double delta_floor = 1e-8);

/// Minimum-norm Gauss-Newton projection onto {g = 0, delta = 0}; used to
/// sharpen interpolated singular-surface crossings.
Point refine_singular_point(const StageModel& stage, const Point& guess, const ParamSet& p,
                            const NewtonOptions& opts = {});

}  // namespace daestab
