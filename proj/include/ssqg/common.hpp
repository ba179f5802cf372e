#pragma once
#include <Eigen/Dense>
// lapacke.h (pulled in under EIGEN_USE_LAPACKE) leaks C99's complex-unit
// macro I, which breaks any later template parameter named I.
#ifdef I
#undef I
#endif
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace ssqg {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kGridTol = 1e-10;   // grid/quadrature invariants
inline constexpr double kRealTol = 1e-8;    // "real profile" flag
inline constexpr double kTailTol = 1e-8;    // effective-compact-support guard
inline constexpr double kEigenTol = 1e-8;   // eigenpair residual gate
inline constexpr const char* kVersion = "1.0.0";

// Non-fatal condition sink. Callers that pass nullptr opt out; strict mode
// (CLI) escalates anything collected here to a hard error.
struct OpStatus {
  std::vector<std::string> warnings;
  void warn(std::string msg) { warnings.push_back(std::move(msg)); }
  bool clean() const { return warnings.empty(); }
};

// y = M x for real M and complex x, done as two real products.
inline CVec apply_real(const Mat& M, const CVec& x) {
  Vec re = M * x.real().matrix();
  Vec im = M * x.imag().matrix();
  CVec y(re.size());
  y.real() = re;
  y.imag() = im;
  return y;
}

// FNV-1a over raw bytes; the project's stable content hash.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t seed = 14695981039346656037ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace ssqg
