#pragma once

#include "varsode/algebroid.hpp"
#include "varsode/field.hpp"
#include "varsode/report.hpp"

#include <functional>
#include <span>
#include <vector>

namespace varsode {

/// Structure of L^tE as a Lie algebroid over E. Its base coordinates are
/// x1..x(m+n), the last n standing for y1..yn; fiber indices 0..n-1 are
/// the T~ basis and n..2n-1 the V~ basis.
LieAlgebroid prolong_structure(const LieAlgebroid& E);

/// Element (z, v) of L^tE over a point of E.
struct ProlongVector {
  PointE p;
  std::vector<double> z;
  std::vector<double> v;
};

/// Section z^a T~_a + v^a V~_a with components over the (x, y) layout.
struct ProlongSection {
  FieldVector t;
  FieldVector v;
};

/// Components (mu_a, nu_a) against the dual basis {T~^a, V~^a}.
struct ProlongCovector {
  FieldVector mu;
  FieldVector nu;
};

/// First-order jets of a covector over the (x, y) layout at one point.
struct CovectorJets {
  std::vector<Jet1> mu;
  std::vector<Jet1> nu;
};
using CovectorJetFn = std::function<CovectorJets(std::span<const double>)>;

/// S(a T~ + b V~) = a V~.
ProlongSection vertical_endo(const ProlongSection& s);
/// Delta = y^a V~_a.
ProlongSection euler_section(const LieAlgebroid& E);
/// y^a T~_a + Gamma^a V~_a.
ProlongSection sode_section(const LieAlgebroid& E, const FieldVector& gamma);

/// Residual of S(X) = Delta, block "S": the T~ part of X minus y.
Report sode_check(const LieAlgebroid& E, const ProlongSection& X, const Points& points,
                  double tol = 1e-12);

/// H_a = T~_a + Lambda^g_a V~_g. Symbolic when Gamma is; otherwise the
/// V~ components carry values only.
std::vector<ProlongSection> horizontal_lift_basis(const LieAlgebroid& E, const FieldVector& gamma);

struct TulczyjewImage {
  std::vector<double> x;
  std::vector<double> z;
  std::vector<double> w;
  std::vector<double> ystar;
};

/// A_E(x, y*, z, v) = (x, z, v_a + C^g_ab y*_g z^b, y*).
TulczyjewImage tulczyjew_map(const LieAlgebroid& E, std::span<const double> x,
                             std::span<const double> ystar, std::span<const double> z,
                             std::span<const double> v);

struct LiftImage {
  std::vector<double> x;
  std::vector<double> ystar;
  std::vector<double> z;
  std::vector<double> w;
};

/// LF(x, y, z, v) = (x, F(x, y), z, rho^i_b z^b dF_a/dx^i + v^b dF_a/dy^b).
LiftImage lift_map(const LieAlgebroid& E, const FieldVector& F, const ProlongVector& p);

/// Value of Theta_{Gamma,F} = A_E . LF . Gamma at a point.
struct ThetaSection {
  std::vector<double> theta;
  std::vector<double> F;
};

ThetaSection theta_composition(const LieAlgebroid& E, const FieldVector& gamma,
                               const FieldVector& F, std::span<const double> xy);

/// Appends the closedness residuals of (mu, nu) at one point: "R1" for the
/// V~V~ block, "R2" for T~V~ (all index pairs) and "R3" for T~T~. With
/// declared kernel indices each entry is labelled HH, HV or VV.
void add_closedness(const LieAlgebroid& E, const CovectorJets& c, std::span<const double> xy,
                    Report& rep, std::size_t point);

Report closedness_report(const LieAlgebroid& E, const CovectorJetFn& c, const Points& points,
                         double tol = 1e-8);

CovectorJets covector_jets(const ProlongCovector& c, std::span<const double> xy);

}  // namespace varsode
