#pragma once

#include "varsode/algebroid.hpp"
#include "varsode/prolongation.hpp"
#include "varsode/report.hpp"
#include "varsode/sode.hpp"

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <vector>

namespace varsode {

/// Base map and fiber matrix as jets over x1..xm.
struct MorphismJets {
  std::vector<Jet2> f;
  /// Psi^{a'}_a at [a' * n + a].
  std::vector<Jet2> psi;
};

/// Fiberwise linear map E -> E' over f: M -> M', y' = Psi(x) y. Anchor and
/// bracket compatibility are checked by check_morphism, not assumed.
class AlgebroidMorphism {
 public:
  /// `base_map` holds m' expressions and `fiber_map` the n' x n matrix
  /// Psi^{a'}_a at [a' * n + a], all in x1..xm. Throws ModelError on a
  /// dimension mismatch or a foreign variable.
  AlgebroidMorphism(LieAlgebroid source, LieAlgebroid target, std::vector<Expr> base_map,
                    std::vector<Expr> fiber_map);

  const LieAlgebroid& source() const;
  const LieAlgebroid& target() const;
  const std::vector<Expr>& base_map() const;
  const std::vector<Expr>& fiber_map() const;

  MorphismJets jets(std::span<const double> x) const;
  std::vector<double> base_image(std::span<const double> x) const;
  Eigen::MatrixXd fiber_matrix(std::span<const double> x) const;
  /// (f(x), Psi(x) y) for a point of E.
  std::vector<double> image(std::span<const double> xy) const;

  struct Data;

 private:
  std::shared_ptr<const Data> data_;
};

AlgebroidMorphism identity_morphism(const LieAlgebroid& E);

/// T f : TR^m -> TR^m' with Psi the Jacobian of f.
AlgebroidMorphism tangent_lift(std::size_t m, std::vector<Expr> f);

/// second . first. Throws ModelError unless first's target has the
/// dimensions of second's source.
AlgebroidMorphism compose(const AlgebroidMorphism& second, const AlgebroidMorphism& first);

/// Blocks "anchor" (j, a), "pullback_function" (j, a) on the target
/// coordinate functions and "pullback_one_section" (g', b, c), b < c, on the
/// dual basis e'^g'. Points may be points of E or of its base.
Report check_morphism(const AlgebroidMorphism& psi, const Points& points,
                      double tol = default_tolerance);

/// L Psi(z T~_a + v V~_a) = (Psi z) T~' + (w z + Psi v) V~' with
/// w^{a'}_b = rho^i_b dPsi^{a'}_a/dx^i y^a.
ProlongVector prolong_map(const AlgebroidMorphism& psi, const ProlongVector& Z);

/// L Psi as a morphism between prolong_structure(E) and prolong_structure(E').
AlgebroidMorphism prolong_morphism(const AlgebroidMorphism& psi);

struct CovectorValue {
  std::vector<double> mu;
  std::vector<double> nu;
};

/// (L Psi)^* Theta' at a point of E: mu_b = mu'_{a'} Psi^{a'}_b + nu'_{a'} w^{a'}_b,
/// nu_b = nu'_{a'} Psi^{a'}_b, with Theta' taken at the image point.
CovectorValue pullback_covector(const AlgebroidMorphism& psi, const ProlongCovector& target,
                                std::span<const double> xy);

/// Same pullback for jets; `target` yields jets over the (x', y') layout
/// and the result is over the (x, y) layout of E.
CovectorJets pullback_covector(const AlgebroidMorphism& psi, const CovectorJetFn& target,
                               std::span<const double> xy);

/// Blocks "T" and "V" of L Psi . Gamma - Gamma' . Psi.
Report sode_related(const AlgebroidMorphism& psi, const SodeSection& gamma,
                    const SodeSection& gamma_target, const Points& points,
                    double tol = default_tolerance);

struct ReductionReport {
  /// sode_related(psi, Gamma, Gamma'); the check needs it to pass.
  Report related;
  /// classify(E', Gamma', F') at the image points.
  HelmholtzReport target;
  /// R1-R3 of the pulled-back Theta on E, and K when the target is variational.
  Report pulled;
  /// The target classified as weak_variational or variational.
  bool hypothesis = false;

  bool pass() const { return related.pass() && (!hypothesis || pulled.pass()); }
};

/// Forward direction only: when Gamma' is (weak) variational with F', the
/// pulled-back section must be closed (and annihilate Ker rho) on E.
ReductionReport reduction_check(const AlgebroidMorphism& psi, const SodeSection& gamma,
                                const SodeSection& gamma_target, const MultiplierMap& F_target,
                                const Points& points, double tol = default_tolerance);

}  // namespace varsode
