#pragma once
#include "ssqg/radial_grid.hpp"

namespace ssqg {

// Dense discrete Hankel transform of the grid's order. The plan is a view
// over the grid's precomputed matrices; construction is free and the plan is
// immutable and shareable.
struct HankelPlan {
  GridPtr grid;
  explicit HankelPlan(GridPtr g) : grid(std::move(g)) {}
};

// Applies the order-n Hankel transform. A space-side profile comes back on
// the frequency side and vice versa; the transform is its own inverse on the
// grid's band-limited class.
RadialProfile hankel(const HankelPlan& plan, const RadialProfile& p);

// Lambda^beta on harmonic-n fields: the diagonal multiplier rho^beta between
// a transform pair. Positive semidefinite as a quadratic form.
RadialProfile fractional_laplacian(const HankelPlan& plan, double beta, const RadialProfile& p,
                                   OpStatus* st = nullptr);

// Negative-power multiplier rho^s (s < 0). For order 0 and s <= -2 + margin
// the profile must have zero mean, otherwise rho^s is not integrable against
// its transform near rho = 0.
RadialProfile riesz(const HankelPlan& plan, double s, const RadialProfile& p,
                    OpStatus* st = nullptr);

// R -> p(lambda R) by band-limited resampling on the same grid.
RadialProfile scale_profile(const RadialProfile& p, double lambda_scale, OpStatus* st = nullptr);

}  // namespace ssqg
