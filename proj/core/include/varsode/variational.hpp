#pragma once

#include "varsode/algebroid.hpp"
#include "varsode/sampling.hpp"
#include "varsode/sode.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace varsode {

/// A scalar field L(x, y) over the bundle layout.
using Lagrangian = ScalarField;

/// F_a = dL/dy^a. L must be symbolic, since F needs second derivatives.
MultiplierMap legendre(const LieAlgebroid& E, const Lagrangian& L);

/// E_L = y^a dL/dy^a - L.
double energy(const LieAlgebroid& E, const Lagrangian& L, std::span<const double> xy);

/// g_ab Gamma^b + L_{y^a x^i} rho^i_b y^b - rho^i_a L_{x^i} + C^g_ab y^b L_{y^g}.
std::vector<double> el_residual(const LieAlgebroid& E, const Lagrangian& L,
                                const SodeSection& gamma, std::span<const double> xy);

/// Gamma_L at one point. Throws DegenerateError when the fiber Hessian has
/// condition number above degenerate_condition.
std::vector<double> sode_from_lagrangian(const LieAlgebroid& E, const Lagrangian& L,
                                         std::span<const double> xy);

/// Gamma_L as a field with second-order jets. L must be symbolic.
SodeSection sode_from_lagrangian(const LieAlgebroid& E, const Lagrangian& L);

enum class ReconstructionMode {
  /// m = n and rho invertible over the region.
  full_rank_square,
  /// rho identically zero; the base term h(x) is taken as 0.
  zero_anchor,
};

struct ReconstructionOptions {
  /// Region of validity; defaults to [-1, 1]^(m+n).
  std::optional<Box> region;
  std::size_t verify_points = 32;
  std::uint64_t seed = 1;
  /// Bound for the internal verification.
  double tolerance = 1e-6;
  double quadrature_tolerance = 1e-10;
};

/// L(x, y) = int_0^1 F(x, y0 + s (y - y0)) . (y - y0) ds + h(x), with h
/// integrated along coordinate axes from x0 so that rho^T dh/dx = theta(x, y0).
/// L vanishes at the basepoint (x0, y0). Before returning, checks at fresh
/// points of the region that dh/dx is path independent, dL/dy = F,
/// rho^T dL/dx = theta and the Euler-Lagrange residual of Gamma vanishes;
/// throws ReconstructionFailed otherwise, and ModelError when the mode
/// does not fit E.
Lagrangian reconstruct_lagrangian(const LieAlgebroid& E, const SodeSection& gamma,
                                  const MultiplierMap& F, std::span<const double> basepoint,
                                  ReconstructionMode mode, const ReconstructionOptions& options = {});

}  // namespace varsode
