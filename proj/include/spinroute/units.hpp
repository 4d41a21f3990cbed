#pragma once
// Unit conventions and physical constants.
//
// Internal energy unit: angular frequency in rad/us. All user-facing
// frequency values are "2pi x MHz" (ordinary MHz); distances are um,
// magnetic fields Gauss, times us. The conversion between the two energy
// conventions is a single factor of 2pi, applied at the API boundary.

#include <cmath>
#include <complex>

namespace spinroute {

inline constexpr double PI = 3.141592653589793238462643383279502884;
inline constexpr double TWO_PI = 2.0 * PI;

using cplx = std::complex<double>;
inline constexpr cplx I{0.0, 1.0};

// Bohr magneton as an ordinary frequency per Gauss: mu_B/h = 1.399624 MHz/G.
inline constexpr double MU_B_MHZ_PER_G = 1.39962449;

// e^2 a0^2 / (4 pi eps0) / h expressed in MHz um^3: converts a squared
// dipole matrix element in atomic units divided by r^3 in um into an
// ordinary-frequency coupling.
inline constexpr double DIPOLE_CONV_MHZ_UM3 = 9.750085633e-4;

// Rydberg frequency R_inf * c in MHz and isotope masses in u, used for the
// default reduced-mass-corrected Rydberg constants.
inline constexpr double RY_INF_MHZ = 3.2898419602500e9;
inline constexpr double ELECTRON_MASS_U = 5.48579909065e-4;
inline constexpr double MASS_RB87_U = 86.909180531;
inline constexpr double MASS_CS133_U = 132.905451961;

// ordinary MHz ("2pi x MHz" user value) -> internal rad/us
inline double from_2pi_mhz(double f_mhz) { return TWO_PI * f_mhz; }
// internal rad/us -> ordinary MHz
inline double to_2pi_mhz(double w_rad_per_us) { return w_rad_per_us / TWO_PI; }

}  // namespace spinroute
