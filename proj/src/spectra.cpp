#include "ssqg/spectra.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace ssqg {

namespace {

// Guarded back-substitution of (T - lambda I) y = rhs for upper-triangular T,
// in place. Near-singular diagonal entries are floored at smin, the standard
// inverse-iteration device: the solve then blows up along the eigenvector,
// which is exactly what the caller wants after normalization.
void solve_shifted_upper(const CMat& T, Complex lambda, CVec& y, double smin, int upto = -1) {
  const int k = upto < 0 ? static_cast<int>(T.rows()) - 1 : upto;
  for (int j = k; j >= 0; --j) {
    Complex acc = y[j];
    for (int l = j + 1; l <= k; ++l) acc -= T(j, l) * y[l];
    Complex d = T(j, j) - lambda;
    if (std::abs(d) < smin) d = Complex(smin, 0.0);
    y[j] = acc / d;
    if (std::abs(y[j]) > 1e120) y.head(k + 1) *= 1e-120;  // overflow guard
  }
}

struct SchurWork {
  CMat T, U;
  double tnorm = 0;
  double smin = 0;
};

EigenPair polish(const OperatorMatrix& M, const SchurWork& sw, Complex lambda, CVec x) {
  x.normalize();
  // one inverse-iteration pass through the Schur factorization
  CVec rhs = sw.U.adjoint() * x;
  solve_shifted_upper(sw.T, lambda, rhs, sw.smin);
  CVec xp = sw.U * rhs;
  xp.normalize();
  RadialProfile W{M.spec.grid, xp};
  RadialProfile LW{M.spec.grid, CVec(M.L * xp)};
  const Complex lam = inner(W, LW) / inner(W, W);
  // weighted normalization and deterministic phase
  W.v /= norm(W);
  Eigen::Index imax;
  W.v.cwiseAbs().maxCoeff(&imax);
  const Complex ph = W.v[imax] / std::abs(W.v[imax]);
  W.v *= std::conj(ph);
  EigenPair out;
  out.lambda = lam;
  out.W = W;
  RadialProfile diff{M.spec.grid, CVec(M.L * W.v - lam * W.v)};
  out.residual = norm(diff);
  return out;
}

}  // namespace

double mode_overlap(const RadialProfile& a, const RadialProfile& b) {
  const double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::abs(inner(a, b)) / (na * nb);
}

std::vector<EigenPair> full_spectrum(const OperatorMatrix& M) {
  if (!M.spec.grid) throw std::invalid_argument("full_spectrum: matrix has no grid");
  const int N = static_cast<int>(M.L.rows());
  Eigen::ComplexSchur<CMat> schur(M.L, true);
  if (schur.info() != Eigen::Success)
    throw std::runtime_error("full_spectrum: Schur iteration failed to converge");
  SchurWork sw;
  sw.T = schur.matrixT();
  sw.U = schur.matrixU();
  sw.tnorm = sw.T.cwiseAbs().maxCoeff();
  sw.smin = std::max(1e-300, 1e-16 * sw.tnorm);

  std::vector<EigenPair> pairs;
  pairs.reserve(N);
  for (int k = 0; k < N; ++k) {
    const Complex lambda = sw.T(k, k);
    // triangular eigenvector: back-substitute (T - lambda) y = 0, y_k = 1
    CVec y = CVec::Zero(N);
    y[k] = 1.0;
    if (k > 0) {
      CVec head = CVec::Zero(k);
      for (int j = 0; j < k; ++j) head[j] = -sw.T(j, k);
      solve_shifted_upper(sw.T, lambda, head, sw.smin, k - 1);
      y.head(k) = head;
    }
    CVec x = sw.U.leftCols(k + 1) * y.head(k + 1);
    EigenPair p = polish(M, sw, lambda, std::move(x));
    if (p.residual > kEigenTol) {
      EigenPair again = polish(M, sw, p.lambda, CVec(p.W.v));
      if (again.residual < p.residual) p = again;
    }
    if (p.residual > kEigenTol) {
      double cond = 0;
      for (int j = 0; j < N; ++j)
        cond = std::max(cond, 1.0 / std::max(std::abs(sw.T(j, j) - p.lambda), sw.smin));
      throw std::runtime_error("full_spectrum: residual " + std::to_string(p.residual) +
                               " above tolerance; local condition estimate " +
                               std::to_string(cond));
    }
    pairs.push_back(std::move(p));
  }
  std::sort(pairs.begin(), pairs.end(), [](const EigenPair& a, const EigenPair& b) {
    if (a.lambda.real() != b.lambda.real()) return a.lambda.real() > b.lambda.real();
    return a.lambda.imag() > b.lambda.imag();
  });
  return pairs;
}

Vortex vortex_on_refined_grid(const Vortex& vx, const GridPtr& g0) {
  if (!vx.family.empty()) {
    VortexFamily fam = family_by_id(vx.family);
    return fam.make(vx.params, g0);
  }
  RadialProfile th = resample(vx.theta, g0);
  return make_vortex(std::move(th));
}

std::vector<EigenPair> unstable_modes(const OperatorMatrix& M, double w, OpStatus* st) {
  if (!(w > 0.0)) throw std::invalid_argument("unstable_modes: threshold must be positive");
  std::vector<EigenPair> all = full_spectrum(M);
  std::vector<EigenPair> cand;
  for (auto& p : all)
    if (p.lambda.real() > w) cand.push_back(std::move(p));
  if (cand.empty()) return cand;

  const bool can_double = M.spec.grid && M.spec.vortex.theta.v.size() > 0;
  if (!can_double) return cand;

  const auto& g = *M.spec.grid;
  AssemblySpec s2 = M.spec;
  s2.grid = build_grid(g.n, 2 * g.N, g.Rmax);
  const GridPtr g0_2 = build_grid(0, 2 * g.N, g.Rmax);
  s2.vortex = vortex_on_refined_grid(M.spec.vortex, g0_2);
  ensure_vortex_velocity(s2.vortex, s2.alpha);
  const OperatorMatrix M2 = assemble_L(s2);
  const std::vector<EigenPair> spec2 = full_spectrum(M2);

  std::vector<EigenPair> out;
  for (auto& p : cand) {
    double best = std::numeric_limits<double>::infinity();
    const EigenPair* match = nullptr;
    for (const auto& q : spec2) {
      const double d = std::abs(q.lambda - p.lambda);
      if (d < best) {
        best = d;
        match = &q;
      }
    }
    if (match && best < 1e-3) {
      p.persistent = true;
      p.delta_lambda = best;
      out.push_back(std::move(p));
    } else if (st) {
      st->warn("unstable_modes: dropped non-persistent mode at Re " +
               std::to_string(p.lambda.real()) + ", |dlambda| " + std::to_string(best));
    }
  }
  return out;
}

ContinuationPath continue_in_nu(const Vortex& vx_in, int n, double alpha, double beta,
                                double nu_start, double nu_end, const EigenPair& seed,
                                bool flip_shift_sign, OpStatus* st, unsigned assembly_parts) {
  if (nu_end < nu_start) throw std::invalid_argument("continue_in_nu: nu_end < nu_start");
  if (!seed.W.grid || seed.W.grid->n != std::abs(n))
    throw std::invalid_argument("continue_in_nu: seed grid does not match harmonic");
  Vortex vx = vx_in;
  ensure_vortex_velocity(vx, alpha);

  AssemblySpec base;
  base.alpha = alpha;
  base.beta = beta;
  base.n = n;
  base.grid = seed.W.grid;
  base.vortex = vx;
  base.parts = assembly_parts;
  base.flip_shift_sign = flip_shift_sign;

  // verify the seed against the assembled operator at nu_start
  base.nu = nu_start;
  {
    const OperatorMatrix M0 = assemble_L(base);
    const CVec r = M0.L * seed.W.v - seed.lambda * seed.W.v;
    RadialProfile rp{base.grid, r};
    RadialProfile wp = seed.W;
    const double res = norm(rp) / norm(wp);
    if (res > 2 * kEigenTol)
      throw std::invalid_argument("continue_in_nu: seed residual " + std::to_string(res) +
                                  " not verified at nu_start");
  }

  ContinuationPath path;
  path.re_lambda0 = seed.lambda.real();
  path.entries.push_back({nu_start, seed, 0.0, 0.0});
  path.termination = "nu-end";
  if (nu_end == nu_start) return path;

  double dnu = 1e-3;
  const double dnu_cap = 1e-1, dnu_floor = 1e-9;
  int clean = 0;
  double nu = nu_start;
  double prev_step = 0, prev_jump = 0;

  while (nu < nu_end) {
    const double step = std::min(dnu, nu_end - nu);
    const double nu_try = nu + step;
    base.nu = nu_try;
    const OperatorMatrix M = assemble_L(base);
    const std::vector<EigenPair> spec = full_spectrum(M);
    const EigenPair& prev = path.entries.back().pair;

    // nearest-lambda candidates, overlap-gated
    std::vector<const EigenPair*> near;
    near.reserve(spec.size());
    for (const auto& q : spec) near.push_back(&q);
    std::sort(near.begin(), near.end(), [&](const EigenPair* a, const EigenPair* b) {
      return std::abs(a->lambda - prev.lambda) < std::abs(b->lambda - prev.lambda);
    });
    const int scan = std::min<int>(8, static_cast<int>(near.size()));
    double ov0 = mode_overlap(prev.W, near[0]->W);
    bool ambiguous = false;
    for (int k = 1; k < scan; ++k) {
      const double ov = mode_overlap(prev.W, near[k]->W);
      if (ov > 0.5 && ov > ov0 - 0.2) ambiguous = true;
    }
    const bool slope_known = prev_step > 0;
    const double bound = slope_known ? 10.0 * step * (prev_jump / prev_step) : 0.0;
    const double jump = std::abs(near[0]->lambda - prev.lambda);
    const bool continuity_ok = !slope_known || jump <= bound || jump < 1e-12;

    if (ov0 <= 0.5 || ambiguous || !continuity_ok) {
      dnu *= 0.5;
      clean = 0;
      if (dnu < dnu_floor) {
        path.termination = "branch-lost";
        if (st)
          st->warn("continue_in_nu: branch lost at nu " + std::to_string(nu) + " (overlap " +
                   std::to_string(ov0) + (ambiguous ? ", ambiguous candidates)" : ")"));
        return path;
      }
      continue;
    }

    path.entries.push_back({nu_try, *near[0], step, bound});
    prev_jump = jump;
    prev_step = step;
    nu = nu_try;
    if (near[0]->lambda.real() <= 0.5 * path.re_lambda0) {
      path.termination = "threshold";
      return path;
    }
    if (++clean >= 3) {
      dnu = std::min(2.0 * dnu, dnu_cap);
      clean = 0;
    }
  }
  return path;
}

namespace {

double bspline3(double t) {
  const double a = std::abs(t);
  if (a >= 2.0) return 0.0;
  if (a >= 1.0) {
    const double u = 2.0 - a;
    return u * u * u / 6.0;
  }
  return (4.0 - 6.0 * a * a + 3.0 * a * a * a) / 6.0;
}

Vortex make_gauss_ring(const std::vector<double>& p, const GridPtr& g0) {
  if (p.size() != 1) throw std::invalid_argument("gauss-ring: expects 1 parameter");
  const double b = p[0];
  if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument("gauss-ring: b must be > 0");
  RadialProfile th = make_real_profile(
      g0, [b](double R) { return (1.0 - b * R * R) * std::exp(-b * R * R); });
  return make_vortex(std::move(th), "gauss-ring", p);
}

Vortex make_gauss_sum(const std::vector<double>& p, const GridPtr& g0) {
  if (p.size() != 3) throw std::invalid_argument("gauss-sum: expects 3 parameters");
  const double b1 = p[0], b2 = p[1], a2 = p[2];
  if (!(b1 > 0.0) || !(b2 > 0.0) || !std::isfinite(a2) || a2 == 0.0)
    throw std::invalid_argument("gauss-sum: requires b1, b2 > 0 and a2 != 0");
  const double a1 = -a2 * b1 / b2;  // zero mean: a1/(2 b1) + a2/(2 b2) = 0
  RadialProfile th = make_real_profile(g0, [=](double R) {
    return a1 * std::exp(-b1 * R * R) + a2 * std::exp(-b2 * R * R);
  });
  return make_vortex(std::move(th), "gauss-sum", p);
}

Vortex make_spline_bump(const std::vector<double>& p, const GridPtr& g0) {
  if (p.size() != 5) throw std::invalid_argument("spline-bump: expects 5 parameters");
  for (double c : p)
    if (!std::isfinite(c)) throw std::invalid_argument("spline-bump: non-finite control value");
  const double Rs = 6.0, h = 0.35;
  RadialProfile bum = make_real_profile(g0, [&](double R) {
    const double u = (R / Rs) * (R / Rs);
    double acc = 0;
    for (int i = 0; i < 5; ++i) acc += p[i] * bspline3((u - h * (i + 1)) / h);
    return acc;
  });
  // zero-mean projection against the unit Gaussian (mass 1/2 in R dR)
  const double m = integrate(bum).real();
  RadialProfile th = make_real_profile(g0, [&](double R) { return std::exp(-R * R); });
  th.v = bum.v - 2.0 * m * th.v;
  return make_vortex(std::move(th), "spline-bump", p);
}

}  // namespace

std::vector<std::string> family_ids() { return {"gauss-ring", "gauss-sum", "spline-bump"}; }

VortexFamily family_by_id(const std::string& id) {
  VortexFamily f;
  f.id = id;
  if (id == "gauss-ring") {
    f.dim = 1;
    f.make = make_gauss_ring;
    f.seeds = {{1.0}, {0.6}, {1.8}};
  } else if (id == "gauss-sum") {
    f.dim = 3;
    f.make = make_gauss_sum;
    f.seeds = {{1.0, 2.0, 1.0}, {0.8, 3.0, -1.0}};
  } else if (id == "spline-bump") {
    f.dim = 5;
    f.make = make_spline_bump;
    f.seeds = {{1.0, 0.6, 0.2, 0.0, 0.0}, {0.0, 1.0, -0.5, 0.2, 0.0}};
  } else {
    throw std::invalid_argument("unknown vortex family: " + id);
  }
  return f;
}

namespace {

struct Evaluation {
  double re = -std::numeric_limits<double>::infinity();
  EigenPair pair;
  Vortex vortex;
  bool valid = false;
};

}  // namespace

SearchResult vortex_search(const VortexFamily& family, int n, double alpha, int budget,
                           const GridPtr& grid, OpStatus* st) {
  if (n < 2) throw std::invalid_argument("vortex_search: instability search requires n >= 2");
  if (budget < 1) throw std::invalid_argument("vortex_search: budget must be >= 1");
  if (grid->n != n) throw std::invalid_argument("vortex_search: grid order must equal n");
  const GridPtr g0 = build_grid(0, grid->N, grid->Rmax);

  std::map<std::vector<double>, Evaluation> memo;
  int evals = 0;

  const auto objective = [&](const std::vector<double>& p) -> const Evaluation& {
    auto it = memo.find(p);
    if (it != memo.end()) return it->second;
    Evaluation ev;
    if (evals < budget) {
      ++evals;
      try {
        Vortex vx = family.make(p, g0);
        ensure_vortex_velocity(vx, alpha);
        AssemblySpec spec;
        spec.alpha = alpha;
        spec.beta = 2.0;  // irrelevant at nu = 0; diffusion and shift vanish
        spec.nu = 0.0;
        spec.n = n;
        spec.grid = grid;
        spec.vortex = vx;
        const OperatorMatrix M = assemble_L(spec);
        std::vector<EigenPair> sp = full_spectrum(M);
        ev.re = sp.front().lambda.real();
        ev.pair = std::move(sp.front());
        ev.vortex = std::move(vx);
        ev.valid = true;
      } catch (const std::exception& e) {
        if (st) st->warn(std::string("vortex_search: rejected point (") + e.what() + ")");
      }
    }
    return memo.emplace(p, std::move(ev)).first->second;
  };

  const int d = family.dim;
  for (const auto& seed : family.seeds) {
    if (evals >= budget) break;
    if (static_cast<int>(seed.size()) != d)
      throw std::invalid_argument("vortex_search: seed dimension mismatch");
    // Nelder-Mead, maximizing
    std::vector<std::vector<double>> xs;
    xs.push_back(seed);
    for (int i = 0; i < d && evals < budget; ++i) {
      auto pt = seed;
      pt[i] += 0.15 * std::max(std::abs(pt[i]), 0.5);
      xs.push_back(pt);
    }
    objective(seed);
    for (std::size_t i = 1; i < xs.size(); ++i) objective(xs[i]);
    if (static_cast<int>(xs.size()) < d + 1) break;  // budget ran out mid-simplex

    for (int iter = 0; iter < 200 && evals < budget; ++iter) {
      std::sort(xs.begin(), xs.end(), [&](const auto& a, const auto& b) {
        const double fa = memo.at(a).re, fb = memo.at(b).re;
        if (fa != fb) return fa > fb;
        return a < b;  // deterministic tie-break
      });
      double spread = 0;
      for (int i = 0; i < d; ++i)
        spread = std::max(spread, std::abs(xs.front()[i] - xs.back()[i]));
      if (spread < 1e-5) break;
      std::vector<double> c(d, 0.0);
      for (int k = 0; k < d + 1 - 1; ++k)
        for (int i = 0; i < d; ++i) c[i] += xs[k][i] / d;
      const auto& worst = xs.back();
      auto combine = [&](double t) {
        std::vector<double> p(d);
        for (int i = 0; i < d; ++i) p[i] = c[i] + t * (c[i] - worst[i]);
        return p;
      };
      const auto xr = combine(1.0);
      const double fr = objective(xr).re;
      const double fbest = memo.at(xs.front()).re;
      const double fsecond = memo.at(xs[d - 1]).re;
      const double fworst = memo.at(worst).re;
      if (fr > fbest && evals < budget) {
        const auto xe = combine(2.0);
        xs.back() = objective(xe).re > fr ? xe : xr;
      } else if (fr > fsecond) {
        xs.back() = xr;
      } else {
        const auto xc = combine(fr > fworst ? 0.5 : -0.5);
        if (evals < budget && objective(xc).re > std::max(fr, fworst)) {
          xs.back() = xc;
        } else {
          for (std::size_t k = 1; k < xs.size() && evals < budget; ++k) {
            for (int i = 0; i < d; ++i) xs[k][i] = 0.5 * (xs[k][i] + xs.front()[i]);
            objective(xs[k]);
          }
        }
      }
    }
  }

  // aggregate: best Re lambda, ties by lexicographic parameters
  const std::vector<double>* bestp = nullptr;
  for (const auto& [p, ev] : memo) {
    if (!ev.valid) continue;
    if (!bestp) {
      bestp = &p;
      continue;
    }
    const Evaluation& cur = memo.at(*bestp);
    if (ev.re > cur.re || (ev.re == cur.re && p < *bestp)) bestp = &p;
  }
  if (!bestp) throw std::runtime_error("vortex_search: no valid evaluation within budget");
  const Evaluation& best = memo.at(*bestp);
  SearchResult out;
  out.params = *bestp;
  out.vortex = best.vortex;
  out.pair = best.pair;
  out.unstable_found = best.re > 0.0;
  out.evaluations = evals;
  if (!out.unstable_found && st)
    st->warn("vortex_search: no instability found; returning the least-stable candidate");
  return out;
}

}  // namespace ssqg
