#pragma once

#include <cstddef>

#include "bohmscat/fft.hpp"
#include "bohmscat/vec3.hpp"

namespace bohmscat {

struct GridSpec {
  int n = 0;
  double extent = 0.0;
  double dx = 0.0;
  double dk = 0.0;
  double k_max = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(n) * n * n; }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n + j) * n + k;
  }
  // Site coordinate along one axis; the lattice is centered on the origin.
  double coord(int i) const { return (i - n / 2) * dx; }
  Vec3 site(int i, int j, int k) const { return {coord(i), coord(j), coord(k)}; }
  // Wavenumber of DFT index i in FFT order.
  double wavenumber(int i) const { return (i < n / 2 ? i : i - n) * dk; }
  double cell_volume() const { return dx * dx * dx; }
  double k_cell_volume() const { return dk * dk * dk; }
  double half_extent() const { return 0.5 * extent; }
};

GridSpec build_grid(int n, double extent);

enum class Space { position, momentum };

// In momentum space, values[index(i,j,k)] is the transform at
// (wavenumber(i), wavenumber(j), wavenumber(k)).
struct ComplexField {
  GridSpec grid;
  cvec values;
  double time = 0.0;
  Space space = Space::position;

  ComplexField() = default;
  explicit ComplexField(const GridSpec& g, double t = 0.0, Space s = Space::position)
      : grid(g), values(g.size(), cplx(0.0, 0.0)), time(t), space(s) {}

  double norm2() const;
  double norm() const;
  void normalize();
};

struct PacketSpec {
  double sigma = 1.0;
  Vec3 k0{0.0, 0.0, 2.0};
  double epsilon = 1.0;
  Vec3 center{};

  // Envelope width in x after scaling.
  double width() const { return sigma / epsilon; }
  // Per-axis standard deviation of |psi|^2.
  double position_std() const { return width() / std::sqrt(2.0); }
  double momentum_std() const { return 1.0 / (std::sqrt(2.0) * width()); }
};

void validate_packet(const PacketSpec& spec);
void validate_packet_on_grid(const PacketSpec& spec, const GridSpec& grid);

// Closed form of the scaled, boosted, translated packet
//   eps^{3/2} exp(i k0.(x-y)) (pi sigma^2)^{-3/4} exp(-eps^2 |x-y|^2 / (2 sigma^2)).
cplx packet_value(const PacketSpec& spec, const Vec3& x);
// Its transform under (2 pi)^{-3/2} int exp(-i k.x) f(x) d^3x.
cplx packet_momentum_value(const PacketSpec& spec, const Vec3& k);

// Samples the closed form at lattice sites and normalizes the discrete sum.
ComplexField gaussian_packet(const PacketSpec& spec, const GridSpec& grid);

// Unitary lattice transform approximating (2 pi)^{-3/2} int exp(-i k.x) f d^3x.
ComplexField to_momentum(const ComplexField& field);
ComplexField to_momentum(const ComplexField& field, const Fft3& fft);
ComplexField to_position(const ComplexField& field);
ComplexField to_position(const ComplexField& field, const Fft3& fft);

}  // namespace bohmscat
