#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bohmscat/error.hpp"
#include "bohmscat/propagator.hpp"

using namespace bohmscat;

namespace {

double max_diff(const cvec& a, const cvec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

PacketSpec packet(double w, double k0, Vec3 c = {}) {
  PacketSpec s;
  s.sigma = w;
  s.epsilon = 1.0;
  s.k0 = {0.0, 0.0, k0};
  s.center = c;
  return s;
}

}  // namespace

TEST(FreeGaussian, VelocityIsPhaseGradient) {
  const FreeGaussian g = free_evolve_analytic(packet(1.5, 1.0, {0.3, 0.0, -1.0}), 2.7);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int s = 0; s < 50; ++s) {
    const Vec3 x{n(rng), n(rng), n(rng)};
    const cplx psi = g.value(x);
    const auto grad = g.gradient(x);
    const Vec3 v = g.velocity(x);
    for (int a = 0; a < 3; ++a) EXPECT_NEAR(v[a], (grad[a] / psi).imag(), 1e-10 * (1.0 + std::abs(v[a])));
  }
}

TEST(FreeGaussian, GradientMatchesFiniteDifference) {
  const FreeGaussian g = free_evolve_analytic(packet(1.2, 2.0), 1.3);
  const Vec3 x{0.4, -0.7, 2.1};
  const double h = 1e-5;
  const auto grad = g.gradient(x);
  for (int a = 0; a < 3; ++a) {
    Vec3 xp = x, xm = x;
    xp[a] += h;
    xm[a] -= h;
    const cplx fd = (g.value(xp) - g.value(xm)) / (2.0 * h);
    EXPECT_NEAR(std::abs(fd - grad[a]), 0.0, 1e-8);
  }
}

TEST(FreeGaussian, FlowSolvesVelocityEquation) {
  const PacketSpec s = packet(1.0, 2.0, {0.0, 0.0, -3.0});
  const Vec3 x0{0.6, -0.2, -2.5};
  const double t = 2.0, h = 1e-5;
  const Vec3 dx = (free_evolve_analytic(s, t + h).flow(x0) - free_evolve_analytic(s, t - h).flow(x0)) * (0.5 / h);
  const Vec3 v = free_evolve_analytic(s, t).velocity(free_evolve_analytic(s, t).flow(x0));
  for (int a = 0; a < 3; ++a) EXPECT_NEAR(dx[a], v[a], 1e-7);
}

TEST(Strang, FreeEvolutionMatchesClosedForm) {
  // With V = 0 the split step is the exact lattice free propagator, so only
  // spatial discretization error is left.
  const GridSpec g = build_grid(64, 40.0);
  const PacketSpec s = packet(2.0, 1.0, {0.0, 0.0, -2.0});
  ComplexField f = gaussian_packet(s, g);
  Propagator p(g, PotentialModel::zero());
  for (int i = 0; i < 20; ++i) p.strang_step(f, 0.1);
  const ComplexField exact = free_evolve_analytic(s, 2.0).sample(g);
  EXPECT_LT(max_diff(f.values, exact.values), 1e-9);
}

TEST(Strang, NormConservedAndReversible) {
  const GridSpec g = build_grid(32, 16.0);
  const PotentialModel V = PotentialModel::gaussian_well(0.5, 1.0);
  ComplexField f = gaussian_packet(packet(1.0, 1.0, {0.0, 0.0, -3.0}), g);
  const ComplexField start = f;
  Propagator p(g, V);
  for (int i = 0; i < 100; ++i) p.strang_step(f, 0.05);
  EXPECT_NEAR(f.norm2(), 1.0, 1e-12);
  for (int i = 0; i < 100; ++i) p.strang_step(f, -0.05);
  EXPECT_LT(max_diff(f.values, start.values), 1e-11);
}

TEST(Strang, SecondOrderInTime) {
  const GridSpec g = build_grid(32, 16.0);
  const PotentialModel V = PotentialModel::gaussian_well(0.5, 1.0);
  const ComplexField f0 = gaussian_packet(packet(1.0, 1.0, {0.0, 0.0, -2.0}), g);
  auto run = [&](double dt) {
    ComplexField f = f0;
    Propagator p(g, V);
    const int n = static_cast<int>(std::lround(2.0 / dt));
    for (int i = 0; i < n; ++i) p.strang_step(f, dt);
    return f;
  };
  const ComplexField ref = run(0.0025);
  const double e1 = max_diff(run(0.04).values, ref.values);
  const double e2 = max_diff(run(0.02).values, ref.values);
  EXPECT_GT(e1 / e2, 3.5);
  EXPECT_LT(e1 / e2, 4.5);
}

TEST(Strang, StepWithGradientMatchesSpectralGradient) {
  const GridSpec g = build_grid(32, 16.0);
  const PotentialModel V = PotentialModel::gaussian_well(0.5, 1.0);
  Propagator p(g, V);
  const ComplexField f0 = gaussian_packet(packet(1.0, 1.0, {0.0, 0.0, -1.0}), g);
  Snapshot a, b, c;
  p.snapshot(f0.values, 0.0, a);
  p.step(a, 0.05, b);
  std::array<cvec, 3> grad;
  p.gradient(b.psi, grad);
  // step() applies the product rule with the analytic grad V; the spectral
  // derivative of the product differs only by its aliasing error.
  for (int k = 0; k < 3; ++k) {
    double scale = 0.0;
    for (const cplx& v : grad[k]) scale = std::max(scale, std::abs(v));
    EXPECT_LT(max_diff(grad[k], b.grad[k]), 1e-4 * scale);
  }
  ComplexField f = f0;
  p.strang_step(f, 0.05);
  EXPECT_LT(max_diff(f.values, b.psi), 1e-14);
}

TEST(Strang, RejectsUnstablePlans) {
  const GridSpec g = build_grid(32, 16.0);
  const PotentialModel V = PotentialModel::gaussian_well(0.5, 1.0);
  const double dmax = max_stable_dt(g, V);
  EXPECT_DOUBLE_EQ(dmax, 0.5 * std::min(1.0 / 0.5, 2.0 / (g.k_max * g.k_max)));
  EXPECT_THROW(validate_plan({2.0 * dmax, 1.0, 1}, g, V), Error);
  EXPECT_THROW(validate_plan({0.03, 1.0, 1}, g, V), Error);  // 1/0.03 is not integral
  EXPECT_NO_THROW(validate_plan({0.025, 1.0, 1}, g, V));
}

TEST(WaveOperator, FreeCaseReproducesPacket) {
  const GridSpec g = build_grid(64, 40.0);
  const PacketSpec s = packet(2.0, 1.0, {0.0, 0.0, -2.0});
  const ComplexField f = apply_wave_operator_minus(s, PotentialModel::zero(), 3.0, g);
  EXPECT_LT(max_diff(f.values, gaussian_packet(s, g).values), 1e-9);
}

TEST(WaveOperator, ConvergesInPreparationTime) {
  // As the backward-evolved packet clears the potential, further preparation
  // time changes less and less.
  const GridSpec g = build_grid(64, 40.0);
  const PotentialModel V = PotentialModel::gaussian_well(0.5, 1.0);
  const PacketSpec s = packet(2.0, 2.0, {0.0, 0.0, -1.0});
  WaveOperatorOptions o;
  o.overlap_tol = 1e-1;
  o.boundary_tol = 1e-4;
  const ComplexField a = apply_wave_operator_minus(s, V, 2.0, g, o);
  const ComplexField b = apply_wave_operator_minus(s, V, 3.0, g, o);
  const ComplexField c = apply_wave_operator_minus(s, V, 4.0, g, o);
  const double d1 = max_diff(a.values, b.values), d2 = max_diff(b.values, c.values);
  EXPECT_LT(d2, 2e-4);
  EXPECT_GT(d1 / d2, 4.0);
  // ... while the potential did act on it.
  EXPECT_GT(max_diff(c.values, gaussian_packet(s, g).values), 1e-2);
}

TEST(WaveOperator, Preconditions) {
  const GridSpec g = build_grid(32, 16.0);
  const PotentialModel V = PotentialModel::gaussian_well(0.5, 1.0);
  try {
    apply_wave_operator_minus(packet(1.0, 1.0), V, 0.1, g);
    FAIL() << "overlap not detected";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::physics_precondition);
  }
  try {
    apply_wave_operator_minus(packet(1.0, 1.0, {6.5, 0.0, 0.0}), PotentialModel::zero(), 0.1, g);
    FAIL() << "leakage not detected";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::physics_precondition);
  }
}

TEST(OutAsymptote, FreeCaseGivesInitialTransform) {
  const GridSpec g = build_grid(64, 40.0);
  const PacketSpec s = packet(2.0, 1.0, {0.0, 0.0, -3.0});
  const double T = 4.0;
  const ComplexField psi_T = free_evolve_analytic(s, T).sample(g);
  const ComplexField out = extract_out_asymptote(psi_T, PotentialModel::zero(), T);
  double err = 0.0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      for (int k = 0; k < g.n; ++k) {
        const cplx exact = packet_momentum_value(s, {g.wavenumber(i), g.wavenumber(j), g.wavenumber(k)});
        err = std::max(err, std::abs(out.values[g.index(i, j, k)] - exact));
      }
  EXPECT_LT(err, 1e-8);
}

TEST(OutAsymptote, RefusesFieldOnPotential) {
  const GridSpec g = build_grid(32, 16.0);
  const ComplexField f = gaussian_packet(packet(1.0, 1.0), g);
  try {
    extract_out_asymptote(f, PotentialModel::gaussian_well(0.5, 1.0), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::physics_precondition);
  }
}

TEST(Potential, RangeAndGradient) {
  const PotentialModel V = PotentialModel::gaussian_well(0.5, 1.2);
  EXPECT_NEAR(V.at_radius(V.range(1e-9)), 1e-9, 1e-12);
  const Vec3 x{0.3, -0.8, 1.1};
  const double h = 1e-6;
  const Vec3 g = V.gradient(x);
  for (int a = 0; a < 3; ++a) {
    Vec3 xp = x, xm = x;
    xp[a] += h;
    xm[a] -= h;
    EXPECT_NEAR(g[a], (V(xp) - V(xm)) / (2.0 * h), 1e-8);
  }
}
