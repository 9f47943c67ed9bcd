#pragma once

#include <string>
#include <vector>

#include "llsp/structures.hpp"
#include "llsp/tensor.hpp"

namespace llsp {

/// Compatible almost complex structure J = S' - S built from a tangent
/// structure and a Lagrangian transversal, with the associated metric
/// g(X, Y) = omega(X, JY).  Positive definiteness of g characterizes the
/// elliptic type.
struct Calibrated {
  EndField J;
  EndField Sprime;
  MetricBlock g;  // on the coordinate frame
  PForm omega;
  std::vector<VectorField> vprime_frame;
  std::vector<VectorField> vertical_frame;  // S applied to the V' frame
  bool elliptic = false;
  ComplianceReport verification;
};

Calibrated calibrate(const EndField& s, const Splitting& split, const PForm& omega,
                     const RunConfig& cfg, bool require_positive = true);

/// Parametrized Lagrangian submanifold with an optional symbolic orthonormal
/// tangent frame.  When the frame is absent, frame-dependent quantities fall
/// back to pointwise Gram-Schmidt.
struct FramedLagrangian {
  ChartPtr params;
  ChartPtr ambient;
  std::vector<Expr> immersion;          // ambient coordinates over the params
  std::vector<std::vector<Expr>> frame;  // optional: orthonormal tangent frame

  static FramedLagrangian from_immersion(ChartPtr params, ChartPtr ambient,
                                         std::vector<Expr> immersion);
  static FramedLagrangian with_frame(ChartPtr params, ChartPtr ambient,
                                     std::vector<Expr> immersion,
                                     std::vector<std::vector<Expr>> frame);

  bool has_symbolic_frame() const { return !frame.empty(); }
  /// Coordinate velocities d immersion / d t_k.
  std::vector<std::vector<Expr>> raw_frame() const;
};

/// Immersion rank, the Lagrangian condition (vanishing pullback of omega) and
/// frame orthonormality at parameter samples.
ComplianceReport validate_framed(const FramedLagrangian& l, const Calibrated& c,
                                 const RunConfig& cfg);

/// Square matrix of complex-valued forms, stored as (real, imaginary) parts.
struct FormMatrix {
  ChartPtr chart;
  int n = 0;
  int degree = 0;
  std::vector<PForm> re, im;

  static FormMatrix zero(ChartPtr chart, int n, int degree);
  PForm& re_at(int i, int j) { return re[i * n + j]; }
  PForm& im_at(int i, int j) { return im[i * n + j]; }
  const PForm& re_at(int i, int j) const { return re[i * n + j]; }
  const PForm& im_at(int i, int j) const { return im[i * n + j]; }
};

FormMatrix fm_add(const FormMatrix& a, const FormMatrix& b);
FormMatrix fm_sub(const FormMatrix& a, const FormMatrix& b);
FormMatrix fm_scale(double re, double im, const FormMatrix& a);
/// Matrix product with entrywise wedge; entry degrees add.
FormMatrix fm_mul(const FormMatrix& a, const FormMatrix& b);
FormMatrix fm_d(const FormMatrix& a);
FormMatrix fm_transpose(const FormMatrix& a);
FormMatrix fm_conj(const FormMatrix& a);
/// Max residual of theta + theta^dagger at the sample points.
CheckReport skew_hermitian_check(const std::string& name, const FormMatrix& theta,
                                 const std::vector<Point>& pts, double tol);

enum class ConnectionMode { Flat, FrameParallel };

struct GaussWeingarten {
  FormMatrix lambda;  // induced connection forms (real)
  FormMatrix b;       // second fundamental form (real)
  ComplianceReport verification;
};

/// Expands the covariant derivative of the tangent frame in (e_j, J e_j):
/// lambda antisymmetric, b symmetric.  Flat mode requires a constant ambient
/// metric; frame-parallel mode declares a g-orthonormal vertical frame
/// parallel and extends it through S'.
GaussWeingarten gauss_weingarten(const FramedLagrangian& l, const Calibrated& c,
                                 ConnectionMode mode, const RunConfig& cfg,
                                 const std::vector<VectorField>* parallel_frame = nullptr);

/// Curvature matrix d theta + theta ^ theta.
FormMatrix connection_curvature(const FormMatrix& theta);

/// (1-t) Theta0 + t Theta1 + t(1-t) alpha ^ alpha.
FormMatrix curvature_variation(const FormMatrix& theta0, const FormMatrix& theta1,
                               const FormMatrix& alpha, double t);

struct CwbResult {
  PForm form;            // the real transgression form of degree 4h-3
  double imag_residual;  // max sampled magnitude of the imaginary part
  std::string notice;    // set when the parameter dimension truncates the form
};

/// Transgression form of the (2h-1)-st Chern polynomial between two unitary
/// connections, via the generalized Kronecker-delta contraction and an exact
/// Gauss-Legendre integral in the interpolation parameter.
CwbResult cwb_form(int h, const FormMatrix& theta0_curvature,
                   const FormMatrix& theta1_curvature, const FormMatrix& alpha,
                   const RunConfig& cfg);

/// Loop integral of the first Maslov representative (1/2pi) tr b over one
/// period, by adaptive Simpson quadrature.
double first_maslov_loop(const FramedLagrangian& l, const Calibrated& c, double period,
                         const RunConfig& cfg);

struct WindingResult {
  double winding = 0.0;  // phase winding of det U on the Chern scale
  std::vector<double> degeneracies;  // parameters where the tangent meets the vertical
};

/// Independent oracle: the unitary matrix U(t) carries the orthonormalized
/// vertical frame to the tangent frame inside the complexified chart; the
/// returned number is the continuous phase winding of det U over the loop
/// (half the classical det^2 phase), which matches the transgression
/// normalization of the loop integral.
WindingResult winding_oracle(const FramedLagrangian& l, const Calibrated& c,
                             double period, int steps, const RunConfig& cfg);

}  // namespace llsp
