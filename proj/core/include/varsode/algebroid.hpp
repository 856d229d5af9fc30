#pragma once

#include "varsode/errors.hpp"
#include "varsode/expr.hpp"
#include "varsode/field.hpp"
#include "varsode/jets.hpp"
#include "varsode/report.hpp"
#include "varsode/sampling.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace varsode {

/// x1..xm
std::vector<std::string> base_names(std::size_t m);
/// y1..yn
std::vector<std::string> fiber_names(std::size_t n);
/// x1..xm followed by y1..yn, the layout of every field on E.
std::vector<std::string> bundle_names(std::size_t m, std::size_t n);

/// Point of E split into base and fiber coordinates.
struct PointE {
  std::vector<double> x;
  std::vector<double> y;

  static PointE split(std::span<const double> xy, std::size_t m);
  std::vector<double> flat() const;
};

/// One bracket coefficient [e_alpha, e_beta] = value * e_gamma + ...,
/// zero-based. The mirrored entry is generated with the opposite sign.
struct BracketEntry {
  std::size_t gamma;
  std::size_t alpha;
  std::size_t beta;
  Expr value;
};

/// Principal connection data on a trivial bundle U x G.
struct AtiyahData {
  std::size_t m = 0;
  std::size_t ng = 0;
  /// A^a_i at [a * m + i], expressions in x1..xm.
  std::vector<Expr> A;
  /// c^c_ab at [(c * ng + a) * ng + b].
  std::vector<double> c;
};

enum class AlgebroidKind { custom, tangent, lie_algebra, atiyah, prolongation };

/// Anchor and structure functions evaluated at a base point.
template <class T>
struct StructureSample {
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<T> rho;  // [i * n + a]
  std::vector<T> c;    // [(g * n + a) * n + b]
  const std::vector<char>* rho_live = nullptr;
  const std::vector<char>* c_live = nullptr;

  const T& r(std::size_t i, std::size_t a) const { return rho[i * n + a]; }
  const T& C(std::size_t g, std::size_t a, std::size_t b) const { return c[(g * n + a) * n + b]; }
  /// False when the entry is identically zero by construction.
  bool r_live(std::size_t i, std::size_t a) const { return (*rho_live)[i * n + a] != 0; }
  bool C_live(std::size_t g, std::size_t a, std::size_t b) const {
    return (*c_live)[(g * n + a) * n + b] != 0;
  }
};

/// A Lie algebroid E -> M given by its local anchor rho^i_a(x) and structure
/// functions C^g_ab(x). Immutable and cheap to copy.
class LieAlgebroid {
 public:
  struct Options {
    std::optional<std::vector<std::size_t>> kernel_indices;
    std::optional<AtiyahData> atiyah;
    AlgebroidKind kind = AlgebroidKind::custom;
  };

  /// `anchor` holds rho^i_a at [i * n + a]. Throws ModelError when a
  /// structure function depends on anything but x1..xm, when an entry is
  /// repeated or when a diagonal entry is nonzero.
  LieAlgebroid(std::size_t m, std::size_t n, std::vector<Expr> anchor,
               const std::vector<BracketEntry>& brackets, Options options);
  LieAlgebroid(std::size_t m, std::size_t n, std::vector<Expr> anchor,
               const std::vector<BracketEntry>& brackets);

  std::size_t m() const;
  std::size_t n() const;
  AlgebroidKind kind() const;
  const Expr& anchor(std::size_t i, std::size_t a) const;
  const Expr& structure(std::size_t g, std::size_t a, std::size_t b) const;
  const std::optional<std::vector<std::size_t>>& kernel_indices() const;
  const AtiyahData* atiyah() const;
  const std::vector<std::string>& base_variables() const;

  StructureSample<double> values(std::span<const double> x) const;
  /// Jets over a layout of `dim` variables whose first m are x1..xm.
  StructureSample<Jet1> jets1(std::span<const double> x, Index dim) const;
  StructureSample<Jet2> jets2(std::span<const double> x, Index dim) const;
  Eigen::MatrixXd anchor_matrix(std::span<const double> x) const;

  struct Data;

 private:
  std::shared_ptr<const Data> data_;
};

/// Residuals of the structure equations; blocks "anchor", "jacobi" and, for
/// declared kernel indices, "kernel_decl".
Report validate_structure(const LieAlgebroid& E, const Points& points, double tol = 1e-10);

/// Components of a section of E* as fields over the base.
using OneSection = FieldVector;

/// d^E f, with theta_a = rho^i_a df/dx^i. f must be symbolic so the result
/// keeps second derivatives.
OneSection dE_function(const LieAlgebroid& E, const ScalarField& f);

/// Antisymmetric matrix (d^E theta)_bg at x.
Eigen::MatrixXd dE_one_section(const LieAlgebroid& E, const OneSection& theta,
                               std::span<const double> x);

struct KernelBasis {
  int rank = 0;
  /// n x (n - rank), columns spanning Ker rho(x).
  Eigen::MatrixXd basis;
};

KernelBasis kernel_basis(const LieAlgebroid& E, std::span<const double> x);

/// Anchor rank at each point; throws RegularityViolation on a jump.
std::vector<int> check_regular(const LieAlgebroid& E, const Points& base_points);

/// Closedness ("closed", b < g) and kernel annihilation ("kernel").
Report local_exactness_check(const LieAlgebroid& E, const OneSection& theta, const Points& points,
                             double tol = 1e-8);

LieAlgebroid tangent_bundle(std::size_t m);
/// c at [(g * n + a) * n + b]; throws ModelError when not antisymmetric.
LieAlgebroid lie_algebra(std::size_t n, const std::vector<double>& c);

/// Curvature B^c_ij at [(c * m + i) * m + j], as expressions.
std::vector<Expr> atiyah_curvature(const AtiyahData& D);
std::vector<double> atiyah_curvature(const AtiyahData& D, std::span<const double> x);

/// Fiber indices 0..m-1 are horizontal, m..m+ng-1 vertical. Throws
/// ModelError when c is not antisymmetric or fails the Jacobi identity.
LieAlgebroid atiyah_algebroid(const AtiyahData& D);

}  // namespace varsode
