#pragma once
#include <functional>
#include <string>
#include <vector>

#include "ssqg/linearized_operator.hpp"

namespace ssqg {

// One eigenpair of the dense linearization. W has unit weighted norm and the
// phase convention that its largest-modulus entry is real positive.
struct EigenPair {
  Complex lambda;
  RadialProfile W;
  double residual = 0;      // ||L W - lambda W|| / ||W||, grid measure
  bool persistent = false;  // survived grid doubling (set by unstable_modes)
  double delta_lambda = 0;  // |lambda_N - lambda_2N| when doubling ran
};

// All N eigenpairs, descending Re lambda, each polished by one
// inverse-iteration pass through the Schur factorization. Throws
// std::runtime_error (with a condition estimate) if any residual stays above
// kEigenTol after polishing.
std::vector<EigenPair> full_spectrum(const OperatorMatrix& M);

// The subset with Re lambda > w. When M carries a complete assembly
// (grid + vortex), every candidate is re-solved on a once-refined grid
// (N -> 2N); modes moving more than 1e-3 are dropped and logged through st.
// Matrix-only inputs (no vortex) skip the persistence pass.
std::vector<EigenPair> unstable_modes(const OperatorMatrix& M, double w, OpStatus* st = nullptr);

struct PathEntry {
  double nu = 0;
  EigenPair pair;
  double step = 0;   // step that reached this entry (0 for the seed)
  double bound = 0;  // declared continuity bound, 0 when no slope estimate yet
};

struct ContinuationPath {
  std::vector<PathEntry> entries;
  std::string termination;  // "nu-end" | "threshold" | "branch-lost"
  double re_lambda0 = 0;    // Re lambda at the seed, the threshold reference
};

// Tracks the seed's eigenvalue branch from nu_start to nu_end with adaptive
// steps (start 1e-3, halve on ambiguity, double after 3 clean steps, cap
// 0.1). Matching is nearest-lambda with eigenvector overlap > 0.5 required;
// ambiguous continuations halve the step rather than guess, and the path
// halts when Re lambda drops to half its seed value. assembly_parts narrows
// the operator to a sub-assembly (e.g. the contraction part alone).
ContinuationPath continue_in_nu(const Vortex& vx, int n, double alpha, double beta,
                                double nu_start, double nu_end, const EigenPair& seed,
                                bool flip_shift_sign = false, OpStatus* st = nullptr,
                                unsigned assembly_parts = parts::all);

// Parametric zero-mean vortex family. Generators throw std::invalid_argument
// on parameters outside their domain.
struct VortexFamily {
  std::string id;
  int dim = 0;
  std::function<Vortex(const std::vector<double>&, const GridPtr&)> make;
  std::vector<std::vector<double>> seeds;  // deterministic multi-start points
};

// Shipped families: "gauss-ring" (1 param), "gauss-sum" (3 params),
// "spline-bump" (5 params). Throws on unknown id.
VortexFamily family_by_id(const std::string& id);
std::vector<std::string> family_ids();

struct SearchResult {
  std::vector<double> params;
  Vortex vortex;
  EigenPair pair;             // top mode at nu = 0
  bool unstable_found = false;
  int evaluations = 0;
};

// Derivative-free maximization of Re lambda_max at nu = 0 over the family's
// parameters (Nelder-Mead from each seed, deterministic, budget-capped total
// evaluations). Never fabricates: when everything is stable the least-stable
// candidate is returned with unstable_found = false.
SearchResult vortex_search(const VortexFamily& family, int n, double alpha, int budget,
                           const GridPtr& grid, OpStatus* st = nullptr);

// Weighted-inner-product overlap |<a, b>| of two unit profiles; the branch
// matching criterion.
double mode_overlap(const RadialProfile& a, const RadialProfile& b);

// Regenerate (family known) or resample a vortex onto another order-0 grid.
Vortex vortex_on_refined_grid(const Vortex& vx, const GridPtr& g0);

}  // namespace ssqg
