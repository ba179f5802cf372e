#include "ssqg/radial_grid.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <map>
#include <sstream>

namespace ssqg {

namespace {

double Jn(int n, double x) { return boost::math::cyl_bessel_j(n, x); }

// J_n'(x) = (J_{n-1}(x) - J_{n+1}(x)) / 2
double Jn_prime(int n, double x) { return 0.5 * (Jn(n - 1, x) - Jn(n + 1, x)); }

// Cumulative moments T_n(j_k) = integral_0^{j_k} x J_n(x) dx, accumulated
// over the panels between consecutive zeros (one half-oscillation each, so a
// fixed 24-point rule is exact to round-off). n = 0 has the closed form
// T_0(X) = X J_1(X).
Vec cumulative_Tn(int n, const Vec& zeros_all) {
  const int m = static_cast<int>(zeros_all.size());
  Vec T(m);
  if (n == 0) {
    for (int k = 0; k < m; ++k) T[k] = zeros_all[k] * Jn(1, zeros_all[k]);
    return T;
  }
  using gauss = boost::math::quadrature::gauss<double, 24>;
  auto f = [n](double x) { return x * Jn(n, x); };
  double acc = 0.0, lo = 0.0;
  for (int k = 0; k < m; ++k) {
    acc += gauss::integrate(f, lo, zeros_all[k]);
    T[k] = acc;
    lo = zeros_all[k];
  }
  return T;
}

std::map<std::tuple<int, int, double>, GridPtr>& grid_cache() {
  static std::map<std::tuple<int, int, double>, GridPtr> cache;
  return cache;
}
std::mutex& grid_cache_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

GridPtr build_grid(int n, int N, double Rmax) {
  if (n < 0) throw std::invalid_argument("build_grid: harmonic order must be >= 0");
  if (N < 8) throw std::invalid_argument("build_grid: need at least 8 nodes");
  if (!std::isfinite(Rmax) || Rmax <= 0)
    throw std::invalid_argument("build_grid: Rmax must be finite and positive");

  {
    std::lock_guard<std::mutex> lock(grid_cache_mutex());
    auto it = grid_cache().find({n, N, Rmax});
    if (it != grid_cache().end()) return it->second;
  }

  auto g = std::make_shared<RadialGrid>();
  g->n = n;
  g->N = N;
  g->Rmax = Rmax;

  Vec zeros_all(N + 1);
  for (int k = 1; k <= N + 1; ++k)
    zeros_all[k - 1] = boost::math::cyl_bessel_j_zero(static_cast<double>(n), k);
  g->S = zeros_all[N];
  g->rho_max = g->S / Rmax;
  g->zeros = zeros_all.head(N);
  g->R = g->zeros / g->rho_max;
  g->rho = g->zeros / Rmax;

  g->w_dht.resize(N);
  g->wr_dht.resize(N);
  for (int k = 0; k < N; ++k) {
    const double Jn1 = Jn(n + 1, g->zeros[k]);
    g->w_dht[k] = 2.0 / (g->rho_max * g->rho_max * Jn1 * Jn1);
    g->wr_dht[k] = 2.0 / (Rmax * Rmax * Jn1 * Jn1);
  }

  g->core.resize(N, N);
  for (int i = 0; i < N; ++i)
    for (int k = 0; k <= i; ++k) {
      const double val = Jn(n, g->zeros[i] * g->zeros[k] / g->S);
      g->core(i, k) = val;
      g->core(k, i) = val;
    }

  // Interpolatory integrate weights: exact for the transform's own
  // band-limited interpolant. Space side: w = fwd^T t with
  // t_i = wr_i (Rmax/j_i)^2 T_n(j_i); frequency side is the mirror image.
  const Vec T = cumulative_Tn(n, g->zeros);
  Vec t_space(N), t_freq(N);
  for (int i = 0; i < N; ++i) {
    const double ji = g->zeros[i];
    t_space[i] = g->wr_dht[i] * (Rmax / ji) * (Rmax / ji) * T[i];
    t_freq[i] = g->w_dht[i] * (g->rho_max / ji) * (g->rho_max / ji) * T[i];
  }
  g->w = g->w_dht.asDiagonal() * (g->core * t_space);
  g->wrho = g->wr_dht.asDiagonal() * (g->core * t_freq);

  for (int k = 0; k < N; ++k)
    if (!(g->w[k] > 0) || !(g->wrho[k] > 0)) {
      std::ostringstream os;
      os << "build_grid: nonpositive quadrature weight at node " << k
         << " (n=" << n << ", N=" << N << ", Rmax=" << Rmax << ")";
      throw std::invalid_argument(os.str());
    }

  std::lock_guard<std::mutex> lock(grid_cache_mutex());
  auto [it, inserted] = grid_cache().try_emplace({n, N, Rmax}, g);
  return it->second;
}

CVec RadialGrid::to_freq(const CVec& v) const {
  return apply_real(core, CVec(w_dht.asDiagonal() * v));
}

CVec RadialGrid::to_space(const CVec& v) const {
  return apply_real(core, CVec(wr_dht.asDiagonal() * v));
}

const Mat& RadialGrid::deriv_matrix() const {
  std::call_once(deriv_once_, [this] {
    // d/dR sum_j wr_j c_j J_n(rho_j R) with c = fwd v; same Bessel arguments
    // as the core matrix.
    Mat Jp(N, N);
    for (int k = 0; k < N; ++k)
      for (int j = 0; j < N; ++j)
        Jp(k, j) = Jn_prime(n, zeros[k] * zeros[j] / S);
    deriv_ = Jp * (wr_dht.cwiseProduct(rho)).asDiagonal() * core * w_dht.asDiagonal();
  });
  return deriv_;
}

CVec RadialGrid::interp(const CVec& v, const Vec& r) const {
  const CVec spec = to_freq(v);
  const CVec coef = wr_dht.asDiagonal() * spec;
  CVec out(r.size());
  for (Eigen::Index t = 0; t < r.size(); ++t) {
    if (r[t] > Rmax) {
      out[t] = 0.0;
      continue;
    }
    Complex acc = 0.0;
    for (int j = 0; j < N; ++j) acc += coef[j] * Jn(n, rho[j] * r[t]);
    out[t] = acc;
  }
  return out;
}

bool RadialProfile::is_real(double tol) const {
  const double re = v.real().cwiseAbs().maxCoeff();
  const double im = v.imag().cwiseAbs().maxCoeff();
  return im <= tol * std::max(re, 1e-300);
}

RadialProfile zeros_like(const RadialProfile& p) {
  return {p.grid, CVec::Zero(p.size()), p.side};
}

RadialProfile make_profile(const GridPtr& g, const std::function<Complex(double)>& f, Side side) {
  const Vec& x = side == Side::space ? g->R : g->rho;
  CVec v(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) v[k] = f(x[k]);
  return {g, std::move(v), side};
}

RadialProfile make_real_profile(const GridPtr& g, const std::function<double(double)>& f,
                                Side side) {
  return make_profile(g, [&f](double r) { return Complex(f(r), 0.0); }, side);
}

void require_same_layout(const RadialProfile& a, const RadialProfile& b) {
  if (!a.grid || !b.grid) throw std::invalid_argument("profile without a grid");
  if (a.side != b.side) throw std::invalid_argument("profile side mismatch");
  if (a.grid != b.grid && !a.grid->compatible(*b.grid))
    throw std::invalid_argument("profile grid mismatch");
}

RadialProfile operator+(const RadialProfile& a, const RadialProfile& b) {
  require_same_layout(a, b);
  return {a.grid, a.v + b.v, a.side};
}

RadialProfile operator-(const RadialProfile& a, const RadialProfile& b) {
  require_same_layout(a, b);
  return {a.grid, a.v - b.v, a.side};
}

RadialProfile operator*(Complex c, const RadialProfile& p) { return {p.grid, c * p.v, p.side}; }
RadialProfile operator*(double c, const RadialProfile& p) { return {p.grid, c * p.v, p.side}; }

RadialProfile hadamard(const RadialProfile& a, const RadialProfile& b) {
  require_same_layout(a, b);
  return {a.grid, a.v.cwiseProduct(b.v), a.side};
}

RadialProfile conjugate(const RadialProfile& p) { return {p.grid, p.v.conjugate(), p.side}; }

Complex integrate(const RadialProfile& p) {
  const Vec& wt = p.weights();
  Complex acc = 0.0;
  for (int k = 0; k < p.size(); ++k) acc += wt[k] * p.v[k];
  return acc;
}

double norm(const RadialProfile& p) {
  const Vec& wt = p.weights();
  double acc = 0.0;
  for (int k = 0; k < p.size(); ++k) acc += wt[k] * std::norm(p.v[k]);
  return std::sqrt(acc);
}

Complex inner(const RadialProfile& a, const RadialProfile& b) {
  require_same_layout(a, b);
  const Vec& wt = a.weights();
  Complex acc = 0.0;
  for (int k = 0; k < a.size(); ++k) acc += wt[k] * std::conj(a.v[k]) * b.v[k];
  return acc;
}

double tail_fraction(const RadialProfile& p) {
  const double top = p.v.cwiseAbs().maxCoeff();
  if (top == 0.0) return 0.0;
  return std::abs(p.v[p.size() - 1]) / top;
}

RadialProfile radial_derivative(const RadialProfile& p, OpStatus* st) {
  if (p.side != Side::space)
    throw std::invalid_argument("radial_derivative: expected a space-side profile");
  if (st && tail_fraction(p) > kTailTol)
    st->warn("radial_derivative: samples do not decay at Rmax; spectral accuracy degraded");
  return {p.grid, apply_real(p.grid->deriv_matrix(), p.v), p.side};
}

RadialProfile resample(const RadialProfile& p, const GridPtr& target, OpStatus* st) {
  if (p.side != Side::space)
    throw std::invalid_argument("resample: expected a space-side profile");
  if (target == p.grid || (target->compatible(*p.grid) && target->n == p.grid->n))
    return {target, p.v, p.side};
  if (st) {
    if (tail_fraction(p) > kTailTol)
      st->warn("resample: source samples do not decay at Rmax");
    if (target->rho_max < p.grid->rho_max) {
      // frequency content the target cannot carry
      const CVec spec = p.grid->to_freq(p.v);
      double total = 0.0, beyond = 0.0;
      for (int j = 0; j < p.size(); ++j) {
        const double e = p.grid->wrho[j] * std::norm(spec[j]);
        total += e;
        if (p.grid->rho[j] > target->rho_max) beyond += e;
      }
      if (total > 0 && beyond > 1e-20 * total)
        st->warn("resample: target grid does not resolve the source profile");
    }
  }
  return {target, p.grid->interp(p.v, target->R), Side::space};
}

Vortex make_vortex(RadialProfile theta, std::string family, std::vector<double> params) {
  if (theta.grid->n != 0)
    throw std::invalid_argument("make_vortex: vortices live on an order-0 grid");
  if (theta.side != Side::space)
    throw std::invalid_argument("make_vortex: expected a space-side profile");
  if (!theta.is_real())
    throw std::invalid_argument("make_vortex: vortex profile must be real");
  const double nrm = norm(theta);
  if (nrm == 0.0) throw std::invalid_argument("make_vortex: zero profile");
  if (std::abs(integrate(theta)) > kRealTol * nrm)
    throw std::invalid_argument("make_vortex: vortex must have zero mean");
  if (tail_fraction(theta) > kTailTol)
    throw std::invalid_argument("make_vortex: profile does not decay at Rmax");
  Vortex vx;
  vx.theta = std::move(theta);
  vx.family = std::move(family);
  vx.params = std::move(params);
  return vx;
}

}  // namespace ssqg
