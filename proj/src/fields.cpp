#include "bohmscat/fields.hpp"

#include <cmath>
#include <sstream>

#include "bohmscat/error.hpp"

namespace bohmscat {

GridSpec build_grid(int n, double extent) {
  if (n < 16 || n % 2 != 0) {
    std::ostringstream msg;
    msg << "grid: n_per_axis must be even and >= 16, got " << n;
    fail(ErrorKind::invalid_argument, msg.str());
  }
  if (!(extent > 0.0) || !std::isfinite(extent)) {
    fail(ErrorKind::invalid_argument, "grid: box_extent must be positive");
  }
  GridSpec g;
  g.n = n;
  g.extent = extent;
  g.dx = extent / n;
  g.dk = 2.0 * M_PI / extent;
  g.k_max = M_PI / g.dx;
  return g;
}

double ComplexField::norm2() const {
  double s = 0.0;
  for (const cplx& v : values) s += std::norm(v);
  return s * (space == Space::position ? grid.cell_volume() : grid.k_cell_volume());
}

double ComplexField::norm() const { return std::sqrt(norm2()); }

void ComplexField::normalize() {
  double nn = norm();
  require(nn > 0.0, "normalize: zero field");
  for (cplx& v : values) v /= nn;
}

void validate_packet(const PacketSpec& spec) {
  require(spec.sigma > 0.0 && std::isfinite(spec.sigma), "packet: sigma must be positive");
  require(spec.epsilon > 0.0 && spec.epsilon <= 1.0, "packet: epsilon must lie in (0, 1]");
  require(spec.k0.x == 0.0 && spec.k0.y == 0.0 && spec.k0.z > 0.0,
          "packet: k0 must point along +e3");
}

void validate_packet_on_grid(const PacketSpec& spec, const GridSpec& grid) {
  validate_packet(spec);
  if (spec.width() > grid.extent / 8.0) {
    fail(ErrorKind::invalid_argument, "packet too wide for grid: sigma/epsilon > extent/8");
  }
  if (norm(spec.k0) > grid.k_max / 2.0) {
    fail(ErrorKind::invalid_argument, "packet boost beyond Nyquist: |k0| > k_max/2");
  }
}

cplx packet_value(const PacketSpec& spec, const Vec3& x) {
  const double w = spec.width();
  const double amp = std::pow(M_PI * w * w, -0.75);
  const Vec3 u = x - spec.center;
  return amp * std::exp(cplx(-norm2(u) / (2.0 * w * w), dot(spec.k0, u)));
}

cplx packet_momentum_value(const PacketSpec& spec, const Vec3& k) {
  const double w = spec.width();
  const double amp = std::pow(M_PI * w * w, -0.75) * w * w * w;
  const Vec3 dk = k - spec.k0;
  return amp * std::exp(cplx(-0.5 * w * w * norm2(dk), -dot(k, spec.center)));
}

ComplexField gaussian_packet(const PacketSpec& spec, const GridSpec& grid) {
  validate_packet_on_grid(spec, grid);
  ComplexField f(grid);
  const int n = grid.n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) f.values[grid.index(i, j, k)] = packet_value(spec, grid.site(i, j, k));
  f.normalize();
  return f;
}

namespace {

// (-1)^(i+j+k) centers the lattice on the origin; the prefactor makes the
// transform unitary.
void apply_checkerboard(cvec& v, int n, double scale) {
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k, ++idx) v[idx] *= ((i + j + k) & 1) ? -scale : scale;
}

}  // namespace

ComplexField to_momentum(const ComplexField& field, const Fft3& fft) {
  require(field.space == Space::position, "to_momentum: field already in momentum space");
  require(fft.n() == field.grid.n, "to_momentum: transform size mismatch");
  ComplexField out(field.grid, field.time, Space::momentum);
  fft.forward(field.values.data(), out.values.data());
  apply_checkerboard(out.values, field.grid.n, field.grid.cell_volume() * std::pow(2.0 * M_PI, -1.5));
  return out;
}

ComplexField to_momentum(const ComplexField& field) {
  Fft3 fft(field.grid.n);
  return to_momentum(field, fft);
}

ComplexField to_position(const ComplexField& field, const Fft3& fft) {
  require(field.space == Space::momentum, "to_position: field already in position space");
  require(fft.n() == field.grid.n, "to_position: transform size mismatch");
  ComplexField out(field.grid, field.time, Space::position);
  cvec tmp = field.values;
  const double c = field.grid.cell_volume() * std::pow(2.0 * M_PI, -1.5);
  apply_checkerboard(tmp, field.grid.n, 1.0 / (c * static_cast<double>(field.grid.size())));
  fft.backward(tmp.data(), out.values.data());
  return out;
}

ComplexField to_position(const ComplexField& field) {
  Fft3 fft(field.grid.n);
  return to_position(field, fft);
}

}  // namespace bohmscat
