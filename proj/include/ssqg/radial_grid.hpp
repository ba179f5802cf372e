#pragma once
#include <functional>
#include <memory>
#include <mutex>

#include "ssqg/common.hpp"

namespace ssqg {

class RadialGrid;
using GridPtr = std::shared_ptr<const RadialGrid>;

// Collocation grid on (0, R_max) built from the zeros of the Bessel function
// J_n. Carries both sides of the discrete Hankel pair: space nodes R_k and
// frequency nodes rho_j, each with quadrature weights for  integral f R dR.
//
// The public weights w / wrho are interpolatory: they integrate the grid's
// own band-limited interpolant exactly, so the Gaussian-moment checks hold to
// round-off. The raw transform normalization weights (w_dht / wr_dht) are
// kept separate; as quadrature weights they are only ~1e-5 accurate for
// n >= 1 and must not be used for integrals.
class RadialGrid {
 public:
  int n = 0;          // harmonic order of the Bessel family
  int N = 0;          // node count
  double Rmax = 0;    // truncation radius
  double S = 0;       // j_{n,N+1}, the duality constant of the scheme
  double rho_max = 0; // S / Rmax

  Vec zeros;          // j_{n,k}, k = 1..N
  Vec R;              // space nodes, j_k / rho_max
  Vec rho;            // frequency nodes, j_k / Rmax
  Vec w_dht, wr_dht;  // transform normalization weights (fwd / inv)
  Vec w;              // integrate weights, space side
  Vec wrho;           // integrate weights, frequency side
  Mat core;           // J_n(j_i j_k / S), symmetric

  // Discrete Hankel transform in both directions. Self-inverse on the grid's
  // band-limited class: to_space(to_freq(v)) == v to round-off.
  CVec to_freq(const CVec& v) const;
  CVec to_space(const CVec& v) const;

  // Spectral derivative matrix: d/dR of the band-limited interpolant,
  // sampled back on the nodes. Built lazily, cached.
  const Mat& deriv_matrix() const;

  // Values of the band-limited interpolant of (space-side) samples v at
  // arbitrary radii. Points beyond Rmax evaluate to 0 (decay convention).
  CVec interp(const CVec& v, const Vec& r) const;

  bool compatible(const RadialGrid& other) const {
    return n == other.n && N == other.N && Rmax == other.Rmax;
  }

 private:
  mutable Mat deriv_;
  mutable std::once_flag deriv_once_;
};

// Deterministic in (n, N, Rmax); cached, so equal parameters usually yield
// the same object. Throws std::invalid_argument on N < 8, n < 0 or a
// non-finite/non-positive Rmax.
GridPtr build_grid(int n, int N, double Rmax);

enum class Side { space, frequency };

// Complex samples of a radial function on one side of a RadialGrid.
struct RadialProfile {
  GridPtr grid;
  Side side = Side::space;
  CVec v;

  RadialProfile() = default;
  RadialProfile(GridPtr g, CVec values, Side s = Side::space)
      : grid(std::move(g)), side(s), v(std::move(values)) {}

  int size() const { return static_cast<int>(v.size()); }
  const Vec& nodes() const { return side == Side::space ? grid->R : grid->rho; }
  const Vec& weights() const { return side == Side::space ? grid->w : grid->wrho; }

  // true when the imaginary part is negligible against the real part
  bool is_real(double tol = kRealTol) const;
};

RadialProfile zeros_like(const RadialProfile& p);
RadialProfile make_profile(const GridPtr& g, const std::function<Complex(double)>& f,
                           Side side = Side::space);
RadialProfile make_real_profile(const GridPtr& g, const std::function<double(double)>& f,
                                Side side = Side::space);

void require_same_layout(const RadialProfile& a, const RadialProfile& b);

RadialProfile operator+(const RadialProfile& a, const RadialProfile& b);
RadialProfile operator-(const RadialProfile& a, const RadialProfile& b);
RadialProfile operator*(Complex c, const RadialProfile& p);
RadialProfile operator*(double c, const RadialProfile& p);
// pointwise product (same grid, same side)
RadialProfile hadamard(const RadialProfile& a, const RadialProfile& b);
RadialProfile conjugate(const RadialProfile& p);

// Sum of w_k p_k: the discrete  integral p(R) R dR  (or rho drho on the
// frequency side). Linear in p.
Complex integrate(const RadialProfile& p);

// L2 norm in the grid measure: sqrt(sum w_k |p_k|^2).
double norm(const RadialProfile& p);
// weighted inner product <a,b> = sum w_k conj(a_k) b_k
Complex inner(const RadialProfile& a, const RadialProfile& b);

// Fraction of the largest sample sitting on the outermost node; the cheap
// decay diagnostic behind the tail warnings.
double tail_fraction(const RadialProfile& p);

// Spectral derivative. Exact (to round-off) for profiles resolved by the
// grid's band-limited class; flags accuracy loss through st when the samples
// do not decay at R_N (the interpolant then aliases globally).
RadialProfile radial_derivative(const RadialProfile& p, OpStatus* st = nullptr);

// Interpolate p onto another grid via the band-limited interpolant. Warns
// through st when the target cannot carry p's frequency content or when p
// does not decay inside the source domain.
RadialProfile resample(const RadialProfile& p, const GridPtr& target, OpStatus* st = nullptr);

// Radially symmetric steady profile with zero mean (an admissible vortex),
// kept on an order-0 grid together with its azimuthal velocity once a
// Biot-Savart evaluation has filled it.
struct Vortex {
  RadialProfile theta;
  RadialProfile vphi;
  bool has_vphi = false;
  double vphi_alpha = -1.0;     // alpha the cached vphi was computed for
  std::string family;           // generating family id ("" when ad hoc)
  std::vector<double> params;   // family parameters
};

// Validates the vortex invariants: grid order 0, zero mean against its norm,
// decay at Rmax. Throws std::invalid_argument on violation.
Vortex make_vortex(RadialProfile theta, std::string family = "",
                   std::vector<double> params = {});

}  // namespace ssqg
