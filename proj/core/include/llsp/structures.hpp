#pragma once

#include <optional>
#include <vector>

#include "llsp/tensor.hpp"

namespace llsp {

/// Endomorphism field S with the tangent-structure axioms (S^2 = 0, half rank,
/// vanishing Nijenhuis tensor) together with its verification record.
struct TangentStructure {
  EndField S;
  ComplianceReport verification;
  bool verified() const { return verification.pass(); }
};

/// Nondegenerate Lagrangian function on a split chart.
struct LagrangianChart {
  ChartPtr chart;
  Expr L;

  LagrangianChart(ChartPtr c, Expr lagrangian);
  /// H_ij = d^2 L / du^i du^j.
  ExprMat fiber_hessian() const;
  /// d^2 L / dq^i du^j (rows: base, cols: fiber).
  ExprMat mixed_hessian() const;
};

/// S dq^i = du^i, S du^i = 0 on a split chart.
TangentStructure canonical_tangent_structure(ChartPtr chart, const RunConfig& cfg);

/// Verifies S^2 = 0 (structural with numeric fallback), rank S = dim/2 at
/// samples, and the Nijenhuis tensor at samples.
ComplianceReport check_tangent(const EndField& s, const RunConfig& cfg);

/// The Lagrangian 2-form: mixed-Hessian antisymmetrization on dq^dq plus the
/// fiber Hessian on du^dq.  Requires the fiber Hessian to have full rank at
/// samples.
PForm lagrangian_form(const LagrangianChart& lc, const RunConfig& cfg);
/// theta = dL . S; its exterior derivative is an independent route to the
/// Lagrangian form.
PForm lagrangian_theta(const LagrangianChart& lc);

/// Compatibility omega(X, SY) = omega(Y, SX) on the coordinate frame, after
/// closedness and nondegeneracy; also reports the symmetry of the pairing
/// matrix omega(v'_i, S v'_k) on a transversal frame (default: base frame).
ComplianceReport check_compat(const PForm& omega, const EndField& s, const RunConfig& cfg,
                              const std::vector<VectorField>* vprime = nullptr);

struct TransversalMetric {
  MetricBlock theta;
  bool elliptic = false;
};

/// Theta(X, Y) = omega(SX, Y) on the V' frame; elliptic iff positive definite
/// at every sample (leading principal minors).
TransversalMetric theta_metric(const PForm& omega, const EndField& s,
                               const std::vector<VectorField>& vprime,
                               const RunConfig& cfg);

/// Unique omega-compatible tangent structure with prescribed transversal
/// metric: S = 0 on V, S = sharp_omega . flat_theta on V'.
TangentStructure tangent_from_metric(const PForm& omega, const Splitting& split,
                                     const MetricBlock& theta, const RunConfig& cfg);

/// Chart transition of the leafwise-affine shape: base coordinates map through
/// the base alone and fiber coordinates map by the base Jacobian plus a base
/// shift.  Checks that the Lagrangian difference is affine in the fibers with
/// closed linear part, and that both Lagrangian forms agree on the overlap.
ComplianceReport transition_check(const LagrangianChart& la, const LagrangianChart& lb,
                                  const std::vector<Expr>& map, const RunConfig& cfg);

/// E = u^i d/du^i.
VectorField euler_field(ChartPtr chart);

enum class SecondOrderMode { TangentBundle, General };

/// Tangent-bundle mode: SX = E at samples.  General mode: SX - E is vertical
/// with fiber-independent components.
ComplianceReport is_second_order(const VectorField& x, const EndField& s,
                                 SecondOrderMode mode, const RunConfig& cfg);

struct AlmostProduct {
  EndField F;                    // L_X S
  std::vector<VectorField> vprime;  // (-1)-eigenspace frame
};

/// F = L_X S with F^2 = Id; V' is the (-1)-eigenspace, returned through its
/// closed-form frame.
AlmostProduct almost_product(const VectorField& x, const EndField& s, const RunConfig& cfg);

struct EnergyHamiltonian {
  Expr energy;        // E L - L
  VectorField field;  // i(X) omega_L = -d energy
};

EnergyHamiltonian energy_hamiltonian(const LagrangianChart& lc, const RunConfig& cfg);

/// Solves Psi + i(Z) d'' zeta = df for a vertical field Z, where
/// Psi = i(X) pullback(Phi).  Phi lives on the base coordinates of the split
/// chart, f depends on the base only.
VectorField solve_vertical_correction(const PForm& phi, const PForm& zeta,
                                      const VectorField& x, const Expr& f,
                                      const RunConfig& cfg);

struct TNForm {
  PForm omega;              // pi* Phi + d zeta
  Expr lagrangian_potential;  // phi with d'' phi = zeta-components
  ComplianceReport checks;
};

/// Assembles the compatible symplectic forms on a tangent-bundle chart from a
/// closed base 2-form and a (1,0)-form with symmetric fiber derivatives, and
/// verifies the local-Lagrangian decomposition.
TNForm assemble_tn_form(const PForm& phi, const PForm& zeta, const RunConfig& cfg);

/// Global witness: omega = d eps, eps vanishes on the vertical distribution,
/// and the base components of eps equal dL/du.
ComplianceReport global_witness_check(const PForm& eps, const Expr& lagrangian,
                                      const PForm& omega, const EndField& s,
                                      const RunConfig& cfg);

}  // namespace llsp
