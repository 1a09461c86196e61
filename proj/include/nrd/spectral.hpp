#pragma once

#include <optional>
#include <span>
#include <vector>

namespace nrd {

// Interval (0, l*pi) with N cells; samples live at cell centers x_j = (j + 1/2) l pi / N.
struct Domain1D {
  double l = 1.0;
  int N = 256;

  Domain1D() = default;
  Domain1D(double l_, int N_);
  double length() const;
  double h() const { return length() / N; }
  double x(int j) const { return (j + 0.5) * h(); }
  std::vector<double> grid() const;
};

// Neumann eigenvalue i^2 / l^2 with eigenfunction cos(i x / l).
double eigenvalue(const Domain1D& dom, int i);
double eigenvalue(double l, int i);
// Symbol of the three-point Neumann Laplacian on the cell-centered grid for mode i.
double discrete_eigenvalue(const Domain1D& dom, int i);

double spatial_average(std::span<const double> field, const Domain1D& dom);

// cos(i (j + 1/2) pi / N) with the angle reduced in exact integer arithmetic, so that mirrored
// samples agree bit for bit (up to the sign (-1)^i).
double cos_mode(int i, int j, int N);

struct ModeSpectrum {
  std::vector<double> c;  // coefficients of cos(i x / l), i = 0..N-1
};

ModeSpectrum decompose(std::span<const double> field, const Domain1D& dom);
std::vector<double> reconstruct(const ModeSpectrum& s, const Domain1D& dom);

// argmax_{i>=1} |c_i| when it exceeds threshold * max(1, |c_0|); nullopt for a flat profile.
std::optional<int> dominant_mode(const ModeSpectrum& s, double threshold = 0.02);

// Samples c0 + c1 cos(q x). When q l is an integer the mode is sampled parity-exactly.
std::vector<double> sample_cosine(const Domain1D& dom, double c0, double c1, double q);

}  // namespace nrd
