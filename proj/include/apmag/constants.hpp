#pragma once
/*
================================================================================
 constants.hpp — shared physical constants for the magnetometry model
--------------------------------------------------------------------------------
 All quantities are SI. The electron gyromagnetic ratio is stored once as
 gamma_e = g_e*mu_B/hbar and every other place that needs g_e*mu_B derives it
 from gamma_e and hbar, so the whole library agrees on a single value.

 gamma_e corresponds to ~28.0 GHz/T (2.80 MHz/G) for the NV ground-state spin.
================================================================================
*/
#include <numbers>

namespace apmag::constants {

/// Vacuum permeability mu_0 [T m / A].
inline constexpr double mu0 = 4e-7 * std::numbers::pi;

/// Planck constant h [J s] (exact, SI 2019).
inline constexpr double h_planck = 6.62607015e-34;

/// Reduced Planck constant hbar [J s].
inline constexpr double hbar = 1.054571817e-34;

/// Elementary charge q [C] (exact, SI 2019).
inline constexpr double q_e = 1.602176634e-19;

/// Electron-spin gyromagnetic ratio gamma_e = g_e*mu_B/hbar [rad s^-1 T^-1].
inline constexpr double gamma_e = 1.761e11;

/// g_e * mu_B [J/T], derived so gamma_e stays the single source of truth.
inline constexpr double ge_mu_b = gamma_e * hbar;

/// NV ground-state zero-field splitting D/(2*pi) [Hz].
inline constexpr double nv_zero_field_hz = 2.87e9;

/// 14N hyperfine splitting of the NV resonance, Delta_f_HF [Hz].
inline constexpr double nv_hyperfine_hz = 2.16e6;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

} // namespace apmag::constants
