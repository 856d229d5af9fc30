#pragma once

#include "varsode/algebroid.hpp"
#include "varsode/prolongation.hpp"
#include "varsode/report.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace varsode {

/// Gamma^a over the (x, y) layout; the section y^a T~_a + Gamma^a V~_a.
using SodeSection = FieldVector;
/// F_a over the (x, y) layout, a fiberwise map E -> E*.
using MultiplierMap = FieldVector;

enum class Classification { variational, weak_variational, fails, degenerate };

std::string_view to_string(Classification c);

/// Condition numbers of g = dF/dy above this count as degenerate.
inline constexpr double degenerate_condition = 1e12;

/// rho^t(Gamma)(f) = y^a rho^i_a df/dx^i + Gamma^a df/dy^a.
double sode_derivative(const LieAlgebroid& E, const SodeSection& gamma, const ScalarField& f,
                       std::span<const double> xy);

/// theta_a and F_a at a point.
ThetaSection theta_components(const LieAlgebroid& E, const SodeSection& gamma,
                              const MultiplierMap& F, std::span<const double> xy);

/// First-order jets of (theta, F) over the (x, y) layout.
CovectorJets theta_jets(const LieAlgebroid& E, const SodeSection& gamma, const MultiplierMap& F,
                        std::span<const double> xy);

struct HelmholtzReport {
  /// Blocks R1, R2, R3 and, after classify, K.
  Report report;
  Classification classification = Classification::fails;
  /// cond(dF/dy) per point.
  std::vector<double> condition;
  bool degenerate = false;
  /// d theta_I / dy for declared kernel indices, filled when R1-R3 pass.
  std::optional<Report> diagnostics;
};

HelmholtzReport helmholtz_residuals(const LieAlgebroid& E, const SodeSection& gamma,
                                    const MultiplierMap& F, const Points& points,
                                    double tol = default_tolerance);

/// Block K: theta . Z for each kernel vector Z, or theta_I for declared indices.
Report kernel_condition(const LieAlgebroid& E, const SodeSection& gamma, const MultiplierMap& F,
                        const Points& points, double tol = default_tolerance);

/// Certifies the supplied F; it does not search for one.
HelmholtzReport classify(const LieAlgebroid& E, const SodeSection& gamma, const MultiplierMap& F,
                         const Points& points, double tol = default_tolerance);

struct ConnectionQuantities {
  Eigen::MatrixXd Lambda;  // (g, a)
  Eigen::MatrixXd D;       // (g, e)
  Eigen::MatrixXd Phi;     // (g, e)
};

ConnectionQuantities connection_quantities(const LieAlgebroid& E, const SodeSection& gamma,
                                           std::span<const double> xy);

/// Blocks P1 to P4 of the horizontal-lift form of the conditions.
Report pop_residuals(const LieAlgebroid& E, const SodeSection& gamma, const MultiplierMap& F,
                     const Points& points, double tol = default_tolerance);

struct AtiyahReducedReport {
  /// Blocks symmetry, mixed, horizontal, vertical.
  Report reduced;
  /// Blocks implied_dy, implied_dx, implied_c.
  Report implied;
  /// False only when the vertical block passes and an implied block fails.
  bool implication_holds = true;
};

/// Throws ModelError unless E was built by atiyah_algebroid.
AtiyahReducedReport atiyah_reduced_residuals(const LieAlgebroid& E, const SodeSection& gamma,
                                             const MultiplierMap& F, const Points& points,
                                             double tol = default_tolerance);

}  // namespace varsode
