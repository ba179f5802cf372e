#pragma once
#include <memory>

#include "ssqg/radial_grid.hpp"

namespace ssqg {

// Normalization constant of the modal stream-function kernel:
// 2^alpha / (2 pi) * Gamma(1 + alpha/2) / Gamma(1 - alpha/2).
double c_alpha(double alpha);

// Angular kernel (sigma/n) * int_{-pi}^{pi} sin(b) sin(nb) / |sigma - e^{ib}|^{2+alpha} db,
// by adaptive quadrature to abs+rel 1e-10. Finite for sigma != 1; at sigma = 1
// the integral converges for alpha < 1 (endpoint-singular quadrature) and
// diverges at alpha = 1 (domain_error). err_est reports the achieved estimate.
double kernel_I(int n, double alpha, double sigma, double* err_est = nullptr);

// Sampled kernel on a log-spaced sigma grid straddling sigma = 1, cubic
// interpolation between samples. The cusp zone |sigma - 1| < cusp_halfwidth
// is excluded from the table and always evaluated by direct quadrature, as is
// anything outside the sampled range. Tables are built once per (n, alpha),
// cached in memory and on disk (SSQG_CACHE_DIR, default ./.ssqg-cache).
class KernelTable {
 public:
  static std::shared_ptr<const KernelTable> get(int n, double alpha);

  double eval(double sigma) const;
  int order() const { return n_; }
  double alpha() const { return alpha_; }
  static constexpr double kSigmaMin = 1e-5;
  static constexpr double kSigmaMax = 1e5;
  static constexpr double kCuspHalfwidth = 0.05;
  static constexpr int kSamples = 2048;

 private:
  KernelTable(int n, double alpha);
  int n_;
  double alpha_;
  std::vector<double> logs_;  // log sigma, uniform
  std::vector<double> vals_;
  double dlog_ = 0;
};

// Stream function of W e^{in phi} through the angular kernel:
// psi(R) = C_alpha int I(R/S) W(S) S^{1-alpha} dS. Validation route; the
// S-quadrature splits panels at the S = R cusp and grades into it.
RadialProfile streamfunction_kernel(int n, double alpha, const RadialProfile& W,
                                    OpStatus* st = nullptr);

// Stream function through the transform pair: psi = H_n[rho^{alpha-2} H_n[W]].
// The frequency integral runs over panel-refined quadrature between the
// grid's frequency nodes; a plain double DHT sum would pin psi to zero at
// Rmax and miss the R^{-n} far field. Production route.
RadialProfile streamfunction_hankel(int n, double alpha, const RadialProfile& W,
                                    OpStatus* st = nullptr);

// Polar velocity components of the modal field: V_R = (i n / R) psi and
// V_phi = -d psi/dR, with the derivative taken on psi's integral
// representation (exact for the algebraic tail).
struct ModalVelocity {
  RadialProfile VR;
  RadialProfile Vphi;
  RadialProfile psi;
};
ModalVelocity velocity(int n, double alpha, const RadialProfile& W, OpStatus* st = nullptr);

// Azimuthal velocity of a vortex: H_1[rho^{alpha-1} H_0[Theta]]. Requires
// zero mean (integrability at rho = 0 for alpha < 1).
RadialProfile vortex_velocity(double alpha, const Vortex& vx);

// Fills vx.vphi if absent or computed for a different alpha.
void ensure_vortex_velocity(Vortex& vx, double alpha);

// Vortex fields sampled at the nodes of an arbitrary target grid, computed
// through the frequency-side panel quadrature. V_phi and d Theta/dR are odd
// in R and sit outside the order-0 band-limited class, so transplanting them
// by J_0 interpolation loses ~4 digits; these read them off the integral
// representation instead (one shared J_1 table per source/target pair).
Vec vortex_velocity_at(const Vortex& vx, double alpha, const GridPtr& target);
Vec vortex_dtheta_at(const Vortex& vx, const GridPtr& target);

// Dense matrices taking W samples on g to psi / dpsi/dR samples on g, for
// operator assembly. Cached per (grid, alpha).
struct StreamMatrices {
  Mat psi;
  Mat dpsi;
};
std::shared_ptr<const StreamMatrices> stream_matrices(const GridPtr& g, double alpha);

// Matrix taking order-0 samples to the azimuthal vortex velocity (same grid).
std::shared_ptr<const Mat> vortex_velocity_matrix(const GridPtr& g0, double alpha);

// Worker cap for the parallel parts of this library (matrix assembly and the
// per-row kernel quadrature). Results are independent of the cap.
void set_max_threads(int t);
int max_threads();

}  // namespace ssqg
