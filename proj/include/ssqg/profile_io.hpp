#pragma once
#include <filesystem>

#include "ssqg/radial_grid.hpp"

namespace ssqg {

// Profile files: one comment line `# grid n=<n> N=<N> Rmax=<val>`, a header
// `R,re,im`, then one node per row. Floats are written in the shortest
// decimal form that round-trips, so save/load is bit-exact.
void save_profile(const std::filesystem::path& path, const RadialProfile& p);
RadialProfile load_profile(const std::filesystem::path& path);

std::string format_double(double x);
double parse_double(const std::string& s);

}  // namespace ssqg
