#pragma once
#include <string>

#include "ssqg/biot_savart.hpp"
#include "ssqg/radial_grid.hpp"

namespace ssqg {

// Self-similar drift: Lambda^beta p + (alpha/beta - 1) p - (1/beta) R dp/dR.
RadialProfile drift_J(double alpha, double beta, const RadialProfile& p, OpStatus* st = nullptr);

// Transport part on the harmonic n: (nu/beta) R dW/dR - i n (Vphi/R) W.
// The vortex must carry its velocity cache (ensure_vortex_velocity).
RadialProfile apply_T(double nu, double beta, const Vortex& vx, int n, const RadialProfile& W,
                      OpStatus* st = nullptr);

// Nonlocal coupling: -i n (psi_n[W]/R) dTheta/dR, psi_n through the
// double-Hankel stream function.
RadialProfile apply_K(double alpha, const Vortex& vx, int n, const RadialProfile& W,
                      OpStatus* st = nullptr);

namespace parts {
inline constexpr unsigned transport = 1u << 0;
inline constexpr unsigned coupling_K = 1u << 1;
inline constexpr unsigned diffusion = 1u << 2;
inline constexpr unsigned identity_shift = 1u << 3;
inline constexpr unsigned all = transport | coupling_K | diffusion | identity_shift;
}  // namespace parts

// Everything needed to assemble the dense linearization; kept with the matrix
// so a spectrum can be re-assembled on a refined grid.
struct AssemblySpec {
  double alpha = 0;
  double beta = 2;
  double nu = 0;
  int n = 1;               // harmonic (signed; |n| fixes the grid order)
  GridPtr grid;            // order-|n| grid carrying W
  Vortex vortex;           // order-0 grid, same (N, Rmax)
  unsigned parts = parts::all;
  // Identity-shift sign convention: false applies -nu(alpha/beta-1) (the
  // expanded definition), true applies +nu(alpha/beta-1) (the grouping the
  // contraction estimate is stated for). Pure spectral translation.
  bool flip_shift_sign = false;
};

struct OperatorMatrix {
  AssemblySpec spec;
  CMat L;
};

// Dense matrix of T + K - nu Lambda^beta -/+ nu(alpha/beta-1) I restricted to
// the selected parts. Matrix action agrees with the composed part
// applications to round-off.
OperatorMatrix assemble_L(const AssemblySpec& spec, OpStatus* st = nullptr);

// Row-major complex binary dump with a small header (n, alpha, beta, nu, N,
// Rmax), for external cross-checks.
void save_matrix(const std::string& path, const OperatorMatrix& M);
OperatorMatrix load_matrix(const std::string& path);

// The identity-shift coefficient under the spec's convention flag.
double shift_coefficient(double alpha, double beta, double nu, bool flip_shift_sign);

// Vortex fields sampled on the harmonic grid (band-limited interpolation from
// the order-0 grid): Vphi/R and dTheta/dR. Cached per (vortex data, grid).
struct VortexOnGrid {
  Vec vphi_over_R;
  Vec dtheta;
};
VortexOnGrid vortex_on_grid(const Vortex& vx, const GridPtr& g);

}  // namespace ssqg
