#include "ssqg/transforms.hpp"

#include <cmath>

namespace ssqg {

namespace {
constexpr double kRieszMeanMargin = 0.1;

void require_plan_grid(const HankelPlan& plan, const RadialProfile& p) {
  if (!p.grid) throw std::invalid_argument("profile without a grid");
  if (p.grid != plan.grid && !p.grid->compatible(*plan.grid))
    throw std::invalid_argument("hankel: profile grid does not match the plan");
}

RadialProfile multiplier(const HankelPlan& plan, double expo, const RadialProfile& p,
                         OpStatus* st, const char* who) {
  require_plan_grid(plan, p);
  if (p.side != Side::space)
    throw std::invalid_argument(std::string(who) + ": expected a space-side profile");
  const RadialGrid& g = *plan.grid;
  CVec spec = g.to_freq(p.v);
  if (st && expo > 0) {
    // rho^expo amplifies any unresolved tail; report when the top decade of
    // the spectrum carries weight after multiplication
    double total = 0.0, tail = 0.0;
    for (int j = 0; j < g.N; ++j) {
      const double e = g.wrho[j] * std::norm(spec[j]) * std::pow(g.rho[j], 2 * expo);
      total += e;
      if (g.rho[j] > 0.9 * g.rho_max) tail += e;
    }
    if (total > 0 && tail > kTailTol * kTailTol * total)
      st->warn(std::string(who) + ": multiplier amplifies unresolved spectral tail");
  }
  for (int j = 0; j < g.N; ++j) spec[j] *= std::pow(g.rho[j], expo);
  return {p.grid, g.to_space(spec), Side::space};
}
}  // namespace

RadialProfile hankel(const HankelPlan& plan, const RadialProfile& p) {
  require_plan_grid(plan, p);
  if (p.side == Side::space) return {p.grid, plan.grid->to_freq(p.v), Side::frequency};
  return {p.grid, plan.grid->to_space(p.v), Side::space};
}

RadialProfile fractional_laplacian(const HankelPlan& plan, double beta, const RadialProfile& p,
                                   OpStatus* st) {
  if (!(beta > 0.0) || !(beta < 4.0))
    throw std::invalid_argument("fractional_laplacian: beta must lie in (0,4)");
  return multiplier(plan, beta, p, st, "fractional_laplacian");
}

RadialProfile riesz(const HankelPlan& plan, double s, const RadialProfile& p, OpStatus* st) {
  if (!(s < 0.0)) throw std::invalid_argument("riesz: exponent must be negative");
  if (plan.grid->n == 0 && s <= -2.0 + kRieszMeanMargin) {
    const double nrm = norm(p);
    if (nrm > 0 && std::abs(integrate(p)) > kRealTol * nrm)
      throw std::invalid_argument(
          "riesz: order-0 profile with s <= -2 must have zero mean");
  }
  return multiplier(plan, s, p, st, "riesz");
}

RadialProfile scale_profile(const RadialProfile& p, double lambda_scale, OpStatus* st) {
  if (!(lambda_scale > 0) || !std::isfinite(lambda_scale))
    throw std::invalid_argument("scale_profile: scale must be positive and finite");
  if (p.side != Side::space)
    throw std::invalid_argument("scale_profile: expected a space-side profile");
  if (lambda_scale == 1.0) return p;
  const RadialGrid& g = *p.grid;
  if (st) {
    const double top = p.v.cwiseAbs().maxCoeff();
    if (top > 0 && std::abs(p.v[g.N - 1]) > kTailTol * top)
      st->warn("scale_profile: source does not decay at Rmax; dilation clips its tail");
    if (lambda_scale < 1.0) {
      // compression pushes content to higher frequencies
      const CVec spec = g.to_freq(p.v);
      double total = 0.0, tail = 0.0;
      for (int j = 0; j < g.N; ++j) {
        const double e = g.wrho[j] * std::norm(spec[j]);
        total += e;
        if (g.rho[j] > lambda_scale * 0.9 * g.rho_max) tail += e;
      }
      if (total > 0 && tail > kTailTol * kTailTol * total)
        st->warn("scale_profile: grid does not resolve the dilated profile");
    }
  }
  return {p.grid, g.interp(p.v, Vec(lambda_scale * g.R)), Side::space};
}

}  // namespace ssqg
