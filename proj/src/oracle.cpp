#include "parex/oracle.hpp"

#include <cmath>
#include <iostream>
#include <numbers>

namespace parex::oracle {

namespace {

using CLD = std::complex<long double>;
constexpr long double kPiL = std::numbers::pi_v<long double>;

// ber + i bei = I_0(q e^{i pi/4}); ber' + i bei' = e^{i pi/4} I_1(q e^{i pi/4}).
CLD rot45() { return {std::cos(kPiL / 4), std::sin(kPiL / 4)}; }

CLD bessel_i0_series(CLD z) {
  const CLD z24 = z * z / 4.0L;
  CLD term = 1.0L, sum = 1.0L;
  for (int k = 1; k < 200; ++k) {
    term *= z24 / static_cast<long double>(k * k);
    sum += term;
    if (std::abs(term) < 1e-25L * std::abs(sum)) break;
  }
  return sum;
}

CLD bessel_i1_series(CLD z) {
  const CLD z24 = z * z / 4.0L;
  CLD term = z / 2.0L, sum = term;
  for (int k = 1; k < 200; ++k) {
    term *= z24 / static_cast<long double>(k * (k + 1));
    sum += term;
    if (std::abs(term) < 1e-25L * std::abs(sum)) break;
  }
  return sum;
}

// I_nu(z) ~ e^z / sqrt(2 pi z) * sum_k t_k, valid for Re z >> 1; the e^{-z}
// companion series is exponentially negligible there.
CLD bessel_i_asymptotic(int nu, CLD z) {
  const long double mu = 4.0L * nu * nu;
  CLD term = 1.0L, sum = 1.0L;
  long double prev = std::abs(term);
  for (int k = 0; k < 40; ++k) {
    const long double odd = 2.0L * k + 1.0L;
    term *= -(mu - odd * odd) / (8.0L * z * static_cast<long double>(k + 1));
    if (std::abs(term) > prev) break;  // truncate at the smallest term
    prev = std::abs(term);
    sum += term;
    if (std::abs(term) < 1e-22L * std::abs(sum)) break;
  }
  return std::exp(z) / std::sqrt(2.0L * kPiL * z) * sum;
}

struct KelvinLD {
  CLD b;   // ber + i bei
  CLD bp;  // ber' + i bei'
};

KelvinLD kelvin_series(long double q) {
  const CLD z = q * rot45();
  return {bessel_i0_series(z), rot45() * bessel_i1_series(z)};
}

KelvinLD kelvin_asymptotic(long double q) {
  const CLD z = q * rot45();
  return {bessel_i_asymptotic(0, z), rot45() * bessel_i_asymptotic(1, z)};
}

}  // namespace

KelvinValues kelvin(double q) {
  if (q < 0.0) throw OracleError("kelvin functions require q >= 0");
  KelvinLD v;
  if (q <= 18.0) {
    v = kelvin_series(q);
  } else if (q >= 22.0) {
    v = kelvin_asymptotic(q);
  } else {
    const long double w = 0.5L * (1.0L - std::cos(kPiL * (static_cast<long double>(q) - 18.0L) / 4.0L));
    const KelvinLD a = kelvin_series(q), b = kelvin_asymptotic(q);
    v.b = (1.0L - w) * a.b + w * b.b;
    v.bp = (1.0L - w) * a.bp + w * b.bp;
  }
  return {static_cast<double>(v.b.real()), static_cast<double>(v.b.imag()),
          static_cast<double>(v.bp.real()), static_cast<double>(v.bp.imag())};
}

std::complex<double> z_internal(const WireModel& m, double f) {
  if (f < 0.0) throw OracleError("frequency must be non-negative");
  if (!(m.length > 0.0 && m.radius > 0.0 && m.sigma > 0.0 && m.mu > 0.0))
    throw OracleError("wire model parameters must be positive");
  if (m.length / m.radius < 10.0)
    std::cerr << "warning: wire aspect ratio l/r < 10; external-inductance formula degrades\n";
  if (f == 0.0)
    return {m.length / (m.sigma * std::numbers::pi * m.radius * m.radius), 0.0};
  const double omega = 2.0 * std::numbers::pi * f;
  const double q = m.radius * std::sqrt(omega * m.mu * m.sigma);
  const KelvinValues k = kelvin(q);
  const std::complex<double> num(k.ber, k.bei), den(k.berp, k.beip);
  return std::complex<double>(0.0, 1.0) * m.length / (2.0 * std::numbers::pi * m.radius) *
         std::sqrt(omega * m.mu / m.sigma) * num / den;
}

double l_external(const WireModel& m) {
  const double lr = m.length / m.radius;
  const double rl = m.radius / m.length;
  if (lr < 10.0)
    std::cerr << "warning: wire aspect ratio l/r < 10; external-inductance formula degrades\n";
  constexpr double mu0 = 4.0e-7 * std::numbers::pi;
  return mu0 * m.length / (2.0 * std::numbers::pi) *
         (std::asinh(lr) - std::sqrt(1.0 + rl * rl) + rl);
}

std::complex<double> z_ana(const WireModel& m, double f) {
  const double omega = 2.0 * std::numbers::pi * f;
  return z_internal(m, f) + std::complex<double>(0.0, omega * l_external(m));
}

double parallel_plate_c(double area, double gap, double eps_r) {
  if (!(area > 0.0 && gap > 0.0 && eps_r > 0.0))
    throw OracleError("parallel-plate parameters must be positive");
  constexpr double mu0 = 4.0e-7 * std::numbers::pi;
  constexpr double c0 = 299792458.0;
  constexpr double eps0 = 1.0 / (mu0 * c0 * c0);
  return eps0 * eps_r * area / gap;
}

}  // namespace parex::oracle
