#pragma once

#include <complex>
#include <stdexcept>

namespace parex::oracle {

struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Round straight wire: length l, radius r, conductivity sigma, permeability mu.
struct WireModel {
  double length = 0.05;
  double radius = 0.001;
  double sigma = 5.8e7;
  double mu = 4.0e-7 * 3.14159265358979323846;
};

struct KelvinValues {
  double ber, bei, berp, beip;
};

/// Kelvin functions Ber, Bei and derivatives at q >= 0. Power series for
/// small q, asymptotic expansion for large q, blended over q in [18, 22].
KelvinValues kelvin(double q);

/// Internal per-wire impedance from the Kelvin-function formula; f = 0
/// returns the analytic DC limit (R_DC = l/(sigma pi r^2), X = 0).
std::complex<double> z_internal(const WireModel& model, double f);

/// External partial self-inductance of a straight round wire.
double l_external(const WireModel& model);

/// Analytic MQS wire impedance z_internal + i omega L_ext.
std::complex<double> z_ana(const WireModel& model, double f);

/// Ideal parallel-plate capacitance eps0 eps_r A / d.
double parallel_plate_c(double area, double gap, double eps_r);

}  // namespace parex::oracle
