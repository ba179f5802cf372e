#include "ssqg/linearized_operator.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

#include "ssqg/transforms.hpp"

namespace ssqg {

namespace {

// Lambda^beta as a dense real matrix on the grid's space side; cached.
const Mat& laplacian_matrix(const GridPtr& g, double beta) {
  static std::map<std::pair<const RadialGrid*, double>, Mat> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(g.get(), beta);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const Vec mult = g->rho.array().pow(beta);
  Mat M = g->core * (g->wr_dht.cwiseProduct(mult)).asDiagonal() * g->core *
          g->w_dht.asDiagonal();
  return cache.emplace(key, std::move(M)).first->second;
}

std::uint64_t vortex_hash(const Vortex& vx) {
  std::uint64_t h = fnv1a(vx.theta.v.data(), sizeof(Complex) * vx.theta.v.size());
  h = fnv1a(&vx.vphi_alpha, sizeof(vx.vphi_alpha), h);
  return h;
}

void require_operator_inputs(const Vortex& vx, int n, const RadialProfile& W) {
  if (n == 0) throw std::invalid_argument("operator parts are defined on harmonics n != 0");
  if (W.grid->n != std::abs(n))
    throw std::invalid_argument("harmonic does not match the profile's grid order");
  if (vx.theta.grid->n != 0 || vx.theta.grid->N != W.grid->N ||
      vx.theta.grid->Rmax != W.grid->Rmax)
    throw std::invalid_argument("vortex grid must be order 0 with matching (N, Rmax)");
}

}  // namespace

double shift_coefficient(double alpha, double beta, double nu, bool flip_shift_sign) {
  const double c = nu * (alpha / beta - 1.0);
  return flip_shift_sign ? c : -c;
}

VortexOnGrid vortex_on_grid(const Vortex& vx, const GridPtr& g) {
  if (!vx.has_vphi)
    throw std::invalid_argument("vortex_on_grid: velocity cache missing (ensure_vortex_velocity)");
  struct Key {
    const RadialGrid* tgt;
    std::uint64_t h;
    bool operator<(const Key& o) const { return tgt != o.tgt ? tgt < o.tgt : h < o.h; }
  };
  static std::map<Key, VortexOnGrid> cache;
  static std::mutex mu;
  const Key key{g.get(), vortex_hash(vx)};
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  // V_phi and dTheta/dR are odd in R; J_0 interpolation onto foreign nodes
  // loses ~4 digits, so both come straight from the integral representation.
  VortexOnGrid out;
  out.vphi_over_R = vortex_velocity_at(vx, vx.vphi_alpha, g).cwiseQuotient(g->R);
  out.dtheta = vortex_dtheta_at(vx, g);
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(key, std::move(out)).first->second;
}

RadialProfile drift_J(double alpha, double beta, const RadialProfile& p, OpStatus* st) {
  RadialProfile ps = p;
  if (ps.side == Side::frequency) {
    ps.v = p.grid->to_space(p.v);
    ps.side = Side::space;
  }
  HankelPlan plan{ps.grid};
  RadialProfile lam = fractional_laplacian(plan, beta, ps, st);
  RadialProfile rd = radial_derivative(ps, st);
  RadialProfile out = zeros_like(ps);
  out.v = lam.v + (alpha / beta - 1.0) * ps.v -
          (1.0 / beta) * ps.grid->R.cast<Complex>().cwiseProduct(rd.v);
  return out;
}

RadialProfile apply_T(double nu, double beta, const Vortex& vx, int n, const RadialProfile& W,
                      OpStatus* st) {
  require_operator_inputs(vx, n, W);
  RadialProfile ws = W;
  if (ws.side == Side::frequency) {
    ws.v = W.grid->to_space(W.v);
    ws.side = Side::space;
  }
  const VortexOnGrid vog = vortex_on_grid(vx, ws.grid);
  RadialProfile out = zeros_like(ws);
  const Complex in_f(0.0, static_cast<double>(n));
  out.v = -in_f * vog.vphi_over_R.cast<Complex>().cwiseProduct(ws.v);
  if (nu != 0.0) {
    RadialProfile rd = radial_derivative(ws, st);
    out.v += (nu / beta) * ws.grid->R.cast<Complex>().cwiseProduct(rd.v);
  }
  return out;
}

RadialProfile apply_K(double alpha, const Vortex& vx, int n, const RadialProfile& W,
                      OpStatus* st) {
  require_operator_inputs(vx, n, W);
  RadialProfile psi = streamfunction_hankel(std::abs(n), alpha, W, st);
  const VortexOnGrid vog = vortex_on_grid(vx, psi.grid);
  RadialProfile out = zeros_like(psi);
  const Complex in_f(0.0, static_cast<double>(n));
  out.v = -in_f * vog.dtheta.cwiseQuotient(psi.grid->R)
                      .cast<Complex>()
                      .cwiseProduct(psi.v);
  return out;
}

OperatorMatrix assemble_L(const AssemblySpec& spec, OpStatus* st) {
  if (spec.nu < 0.0) throw std::invalid_argument("assemble_L: nu must be >= 0");
  if ((spec.parts & ~parts::all) != 0)
    throw std::invalid_argument("assemble_L: unknown part in selection");
  if (!spec.grid) throw std::invalid_argument("assemble_L: missing grid");
  RadialProfile probe{spec.grid, CVec::Zero(spec.grid->N)};
  require_operator_inputs(spec.vortex, spec.n, probe);
  if (!spec.vortex.has_vphi)
    throw std::invalid_argument("assemble_L: vortex velocity cache missing");

  const auto& g = *spec.grid;
  const int N = g.N;
  CMat L = CMat::Zero(N, N);
  const Complex in_f(0.0, static_cast<double>(spec.n));

  if (spec.parts & parts::transport) {
    const VortexOnGrid vog = vortex_on_grid(spec.vortex, spec.grid);
    L.diagonal() -= in_f * vog.vphi_over_R.cast<Complex>();
    if (spec.nu != 0.0) {
      const Mat RD = g.R.asDiagonal() * g.deriv_matrix();
      L += (spec.nu / spec.beta) * RD.cast<Complex>();
    }
  }
  if (spec.parts & parts::coupling_K) {
    const VortexOnGrid vog = vortex_on_grid(spec.vortex, spec.grid);
    const Vec coupl = vog.dtheta.cwiseQuotient(g.R);
    L -= in_f * (coupl.asDiagonal() * stream_matrices(spec.grid, spec.alpha)->psi)
                    .cast<Complex>();
  }
  if ((spec.parts & parts::diffusion) && spec.nu != 0.0)
    L -= spec.nu * laplacian_matrix(spec.grid, spec.beta).cast<Complex>();
  if (spec.parts & parts::identity_shift) {
    const double c = shift_coefficient(spec.alpha, spec.beta, spec.nu, spec.flip_shift_sign);
    L.diagonal().array() += c;
  }
  (void)st;
  return OperatorMatrix{spec, std::move(L)};
}

void save_matrix(const std::string& path, const OperatorMatrix& M) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_matrix: cannot open " + path);
  const char magic[8] = {'S', 'S', 'Q', 'G', 'O', 'P', '0', '1'};
  const std::int32_t n = M.spec.n, N = static_cast<std::int32_t>(M.L.rows());
  const std::uint32_t parts = M.spec.parts;
  const std::uint8_t flip = M.spec.flip_shift_sign ? 1 : 0;
  out.write(magic, 8);
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(&N), 4);
  out.write(reinterpret_cast<const char*>(&M.spec.alpha), 8);
  out.write(reinterpret_cast<const char*>(&M.spec.beta), 8);
  out.write(reinterpret_cast<const char*>(&M.spec.nu), 8);
  const double rmax = M.spec.grid ? M.spec.grid->Rmax : 0.0;
  out.write(reinterpret_cast<const char*>(&rmax), 8);
  out.write(reinterpret_cast<const char*>(&parts), 4);
  out.write(reinterpret_cast<const char*>(&flip), 1);
  const char pad[3] = {0, 0, 0};
  out.write(pad, 3);
  // row-major complex pairs
  for (Eigen::Index i = 0; i < M.L.rows(); ++i)
    for (Eigen::Index j = 0; j < M.L.cols(); ++j) {
      const double re = M.L(i, j).real(), im = M.L(i, j).imag();
      out.write(reinterpret_cast<const char*>(&re), 8);
      out.write(reinterpret_cast<const char*>(&im), 8);
    }
  if (!out) throw std::runtime_error("save_matrix: write failed on " + path);
}

OperatorMatrix load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_matrix: cannot open " + path);
  char magic[8];
  std::int32_t n = 0, N = 0;
  std::uint32_t parts = 0;
  std::uint8_t flip = 0;
  char pad[3];
  OperatorMatrix M;
  double rmax = 0;
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "SSQGOP01", 8) != 0)
    throw std::runtime_error("load_matrix: bad header in " + path);
  in.read(reinterpret_cast<char*>(&n), 4);
  in.read(reinterpret_cast<char*>(&N), 4);
  in.read(reinterpret_cast<char*>(&M.spec.alpha), 8);
  in.read(reinterpret_cast<char*>(&M.spec.beta), 8);
  in.read(reinterpret_cast<char*>(&M.spec.nu), 8);
  in.read(reinterpret_cast<char*>(&rmax), 8);
  in.read(reinterpret_cast<char*>(&parts), 4);
  in.read(reinterpret_cast<char*>(&flip), 1);
  in.read(pad, 3);
  if (!in || N <= 0) throw std::runtime_error("load_matrix: truncated header in " + path);
  M.spec.n = n;
  M.spec.parts = parts;
  M.spec.flip_shift_sign = flip != 0;
  if (rmax > 0.0) M.spec.grid = build_grid(std::abs(n), N, rmax);
  M.L.resize(N, N);
  for (std::int32_t i = 0; i < N; ++i)
    for (std::int32_t j = 0; j < N; ++j) {
      double re, im;
      in.read(reinterpret_cast<char*>(&re), 8);
      in.read(reinterpret_cast<char*>(&im), 8);
      M.L(i, j) = Complex(re, im);
    }
  if (!in) throw std::runtime_error("load_matrix: truncated payload in " + path);
  return M;
}

}  // namespace ssqg
