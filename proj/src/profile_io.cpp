#include "ssqg/profile_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace ssqg {

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
  double x = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::runtime_error("parse_double: bad float '" + s + "'");
  return x;
}

void save_profile(const std::filesystem::path& path, const RadialProfile& p) {
  if (p.side != Side::space)
    throw std::invalid_argument("save_profile: only space-side profiles are serialized");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_profile: cannot open " + path.string());
  out << "# grid n=" << p.grid->n << " N=" << p.grid->N
      << " Rmax=" << format_double(p.grid->Rmax) << "\n";
  out << "R,re,im\n";
  for (int k = 0; k < p.size(); ++k)
    out << format_double(p.grid->R[k]) << ',' << format_double(p.v[k].real()) << ','
        << format_double(p.v[k].imag()) << "\n";
  if (!out) throw std::runtime_error("save_profile: write failed for " + path.string());
}

RadialProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_profile: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("# grid ", 0) != 0)
    throw std::runtime_error("load_profile: missing grid header in " + path.string());

  int n = -1, N = -1;
  double Rmax = 0;
  {
    std::istringstream hs(line.substr(7));
    std::string tok;
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "n") n = std::stoi(val);
      else if (key == "N") N = std::stoi(val);
      else if (key == "Rmax") Rmax = parse_double(val);
    }
  }
  if (n < 0 || N < 8) throw std::runtime_error("load_profile: bad grid header");

  if (!std::getline(in, line) || line != "R,re,im")
    throw std::runtime_error("load_profile: missing column header");

  GridPtr g = build_grid(n, N, Rmax);
  CVec v(N);
  for (int k = 0; k < N; ++k) {
    if (!std::getline(in, line))
      throw std::runtime_error("load_profile: truncated file " + path.string());
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw std::runtime_error("load_profile: bad row '" + line + "'");
    const double R = parse_double(line.substr(0, c1));
    const double re = parse_double(line.substr(c1 + 1, c2 - c1 - 1));
    const double im = parse_double(line.substr(c2 + 1));
    if (std::abs(R - g->R[k]) > 1e-12 * g->Rmax)
      throw std::runtime_error("load_profile: node mismatch against rebuilt grid");
    v[k] = Complex(re, im);
  }
  return {g, std::move(v), Side::space};
}

}  // namespace ssqg
