#pragma once
// Shared oracles for the test binaries: finite-difference stencils, adaptive
// quadrature of defining integrals, closed-form profiles, and small utility
// integrators. Test-harness code only — nothing here is a runtime dependency
// of the library.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "ssqg/radial_grid.hpp"

namespace ssqg::testing {

// Fornberg weights for the m-th derivative at x0 from arbitrary nodes xs.
inline std::vector<double> fd_weights(double x0, const std::vector<double>& xs, int m) {
  const int n = static_cast<int>(xs.size());
  std::vector<std::vector<double>> d(m + 1, std::vector<double>(n, 0.0));
  d[0][0] = 1.0;
  double c1 = 1.0;
  for (int i = 1; i < n; ++i) {
    double c2 = 1.0;
    for (int j = 0; j < i; ++j) {
      const double c3 = xs[i] - xs[j];
      c2 *= c3;
      for (int k = std::min(i, m); k >= 0; --k)
        d[k][j] = ((xs[i] - x0) * d[k][j] - (k ? d[k - 1][j] : 0.0)) / c3;
    }
    for (int k = std::min(i, m); k >= 0; --k)
      d[k][i] = c1 * ((k ? d[k - 1][i - 1] : 0.0) - (xs[i - 1] - x0) * d[k][i - 1]) / c2;
    c1 = c2;
  }
  return d[m];
}

// Independent evaluation of the defining transform integral
// int_0^Rcut f(R) J_n(rho R) R dR by adaptive Gauss-Kronrod.
inline double hankel_oracle(int n, const std::function<double(double)>& f, double rho,
                            double Rcut) {
  auto integrand = [&](double R) { return f(R) * boost::math::cyl_bessel_j(n, rho * R) * R; };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, Rcut, 15,
                                                                       1e-12);
}

// Plateau window: ~1 on [0, 5], dead well inside R = 30, with Gaussian tails
// in both domains (so the band-limited derivative stays accurate on the
// plateau; power-law plateaus stall near 1e-8).
inline double plateau(double R) { return 0.5 * boost::math::erfc((R - 12.0) / 1.5); }
inline double plateau_deriv(double R) {
  const double t = (R - 12.0) / 1.5;
  return -std::exp(-t * t) / (1.5 * std::sqrt(M_PI));
}

// Random mixtures of R^{n+2k} e^{-b R^2}: smooth, decaying in both domains,
// and closed under the order-n transform — safe quadrature/Parseval fodder.
inline RadialProfile gauss_mixture(const GridPtr& g, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::uniform_real_distribution<double> width(0.4, 1.6);
  std::uniform_int_distribution<int> power(0, 2);
  struct Term {
    double cr, ci, b;
    int p;
  };
  std::vector<Term> terms(4);
  for (auto& t : terms) t = {coef(rng), coef(rng), width(rng), power(rng)};
  const int n = g->n;
  return make_profile(g, [&](double R) {
    Complex acc(0.0, 0.0);
    for (const auto& t : terms)
      acc += Complex(t.cr, t.ci) * std::pow(R, n + 2 * t.p) * std::exp(-t.b * R * R);
    return acc;
  });
}

// Band-limited by construction: random frequency-side coefficients with a
// strong exponential roll-off, synthesized to the space side.
inline RadialProfile band_limited(const GridPtr& g, std::uint32_t seed, double decay = 18.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  CVec c(g->N);
  for (int j = 0; j < g->N; ++j)
    c[j] = Complex(coef(rng), coef(rng)) * std::exp(-decay * j / g->N);
  return RadialProfile(g, g->to_space(c), Side::space);
}

// Classical RK4 for dW/dtau = A W.
inline CVec rk4_propagate(const CMat& A, CVec v, double T, int steps) {
  const double dt = T / steps;
  for (int s = 0; s < steps; ++s) {
    const CVec k1 = A * v;
    const CVec k2 = A * (v + 0.5 * dt * k1);
    const CVec k3 = A * (v + 0.5 * dt * k2);
    const CVec k4 = A * (v + dt * k3);
    v += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return v;
}

inline double max_abs(const CVec& v) { return v.cwiseAbs().maxCoeff(); }

inline double rel_linf(const CVec& got, const CVec& want) {
  const double scale = want.cwiseAbs().maxCoeff();
  return (got - want).cwiseAbs().maxCoeff() / (scale > 0 ? scale : 1.0);
}

}  // namespace ssqg::testing
