#pragma once
/*
================================================================================
 odmr.hpp — Lorentzian ODMR lineshapes and the lock-in dispersion signal
--------------------------------------------------------------------------------
 MODEL
   A magnetic-resonance fluorescence dip is modeled as a Lorentzian of FWHM
   Gamma and fractional contrast C on a unit baseline:

     F(w)/F0 = 1 - C * (G/2)^2 / ((G/2)^2 + (w - w0)^2),      G = Gamma.

   The 14N hyperfine interaction splits the resonance into a triplet spaced
   by Delta_w_HF (2*pi*2.16 MHz); driving with three microwave tones spaced by
   the same Delta_w_HF addresses all three sublevels at once, which multiplies
   the on-resonance contrast by three at the cost of extra side features
   (5 local minima for well-resolved lines).

   Square-wave frequency modulation toggles the drive between wc - wdev and
   wc + wdev; lock-in demodulation yields the two-point dispersion

     V_LIA(wc) = (V0/2) * [ F(wc + wdev) - F(wc - wdev) ] / F0,

   which crosses zero at wc = w0 with positive slope (negative lobe below the
   resonance, positive lobe above). The same two-point difference is applied
   to the three-tone lineshape for DispersionMode::three_tone, keeping one
   sign convention for both modes.

   The zero-crossing slope is maximal at wdev = Gamma/(2*sqrt(3)), where the
   small-signal response to a resonance shift dw = gamma_e*B is

     V_LIA ~= -(3*sqrt(3)/4) * (V0*C*gamma_e/Gamma) * B.

 UNITS: angular frequencies [rad/s], voltages [V], fields [T].
================================================================================
*/
#include <cmath>
#include <stdexcept>

#include "apmag/constants.hpp"

namespace apmag {

/// Parameters of one ODMR feature as seen by the lock-in.
struct OdmrParams {
    double f0_rad = constants::two_pi * constants::nv_zero_field_hz; ///< resonance w0 [rad/s]
    double linewidth_rad = constants::two_pi * 1.0e6;                ///< FWHM Gamma [rad/s]
    double contrast = 0.0265; ///< single-axis fractional dip C (0..1); the
                              ///< overlapped two-axis pair reads 2C = 5.3%
    double v0 = 2.0;                                                 ///< full-scale voltage V0 [V]
    double hf_splitting_rad = constants::two_pi * constants::nv_hyperfine_hz; ///< Delta_w_HF [rad/s]

    void validate() const {
        if (!std::isfinite(f0_rad) || !std::isfinite(linewidth_rad) || !std::isfinite(contrast) ||
            !std::isfinite(v0) || !std::isfinite(hf_splitting_rad))
            throw std::invalid_argument("OdmrParams: non-finite parameter");
        if (!(linewidth_rad > 0.0)) throw std::invalid_argument("OdmrParams: linewidth must be > 0");
        if (!(contrast > 0.0 && contrast < 1.0))
            throw std::invalid_argument("OdmrParams: contrast must lie in (0,1)");
        if (!(v0 > 0.0)) throw std::invalid_argument("OdmrParams: v0 must be > 0");
        if (!(hf_splitting_rad > 0.0))
            throw std::invalid_argument("OdmrParams: hyperfine splitting must be > 0");
    }
};

/// Which lineshape feeds the dispersion difference.
enum class DispersionMode { single_feature, three_tone };

namespace detail {
/// Unit Lorentzian dip profile L(x) = (G/2)^2/((G/2)^2 + x^2).
inline double lorentz_unit(double x, double linewidth_rad) {
    const double hw = 0.5 * linewidth_rad;
    return hw * hw / (hw * hw + x * x);
}

inline void require_finite_omega(double w, const char* where) {
    if (!std::isfinite(w)) throw std::domain_error(std::string(where) + ": non-finite frequency");
}
} // namespace detail

/// Single-feature fluorescence, normalized to the off-resonant baseline F0.
inline double lorentzian_fluorescence(const OdmrParams& p, double omega_rad) {
    p.validate();
    detail::require_finite_omega(omega_rad, "lorentzian_fluorescence");
    return 1.0 - p.contrast * detail::lorentz_unit(omega_rad - p.f0_rad, p.linewidth_rad);
}

/// Hyperfine triplet: three dips of equal contrast spaced by hf_splitting_rad.
inline double hyperfine_fluorescence(const OdmrParams& p, double omega_rad) {
    p.validate();
    detail::require_finite_omega(omega_rad, "hyperfine_fluorescence");
    double dip = 0.0;
    for (int q = -1; q <= 1; ++q)
        dip += p.contrast *
               detail::lorentz_unit(omega_rad - (p.f0_rad + q * p.hf_splitting_rad), p.linewidth_rad);
    return 1.0 - dip;
}

/// Three drive tones spaced by the hyperfine splitting probing the triplet:
/// the double sum produces a central dip of ~3x single-tone contrast and
/// four side dips (5 local minima for Gamma << Delta_w_HF).
inline double three_tone_fluorescence(const OdmrParams& p, double omega_rad) {
    p.validate();
    detail::require_finite_omega(omega_rad, "three_tone_fluorescence");
    double dip = 0.0;
    for (int pp = -1; pp <= 1; ++pp)
        for (int q = -1; q <= 1; ++q)
            dip += p.contrast * detail::lorentz_unit((omega_rad + pp * p.hf_splitting_rad) -
                                                         (p.f0_rad + q * p.hf_splitting_rad),
                                                     p.linewidth_rad);
    return 1.0 - dip;
}

/// Lock-in dispersion: two-point difference of the selected lineshape.
/// Zero at wc = w0, odd about w0, positive slope at the crossing.
inline double lia_dispersion(const OdmrParams& p, double omega_c_rad, double omega_dev_rad,
                             DispersionMode mode = DispersionMode::single_feature) {
    p.validate();
    detail::require_finite_omega(omega_c_rad, "lia_dispersion");
    if (!(omega_dev_rad > 0.0) || !std::isfinite(omega_dev_rad))
        throw std::invalid_argument("lia_dispersion: omega_dev must be positive and finite");
    const auto f = (mode == DispersionMode::single_feature) ? &lorentzian_fluorescence
                                                            : &three_tone_fluorescence;
    return 0.5 * p.v0 * (f(p, omega_c_rad + omega_dev_rad) - f(p, omega_c_rad - omega_dev_rad));
}

/// Deviation that maximizes the zero-crossing slope: Gamma/(2*sqrt(3)).
inline double optimal_deviation(double linewidth_rad) {
    if (!(linewidth_rad > 0.0) || !std::isfinite(linewidth_rad))
        throw std::invalid_argument("optimal_deviation: linewidth must be positive");
    return linewidth_rad / (2.0 * std::sqrt(3.0));
}

/// Small-signal field-to-voltage gain dV/dB [V/T] at wc = w0 with
/// wdev = Gamma/(2*sqrt(3)): -(3*sqrt(3)/4) * V0*C*gamma_e/Gamma.
/// Negative: a field that raises the resonance frequency drives the
/// dispersion toward its negative lobe when the carrier stays put.
inline double small_signal_gain(const OdmrParams& p) {
    p.validate();
    return -(3.0 * std::sqrt(3.0) / 4.0) * p.v0 * p.contrast * constants::gamma_e /
           p.linewidth_rad;
}

/// Numeric zero-crossing slope dV/dwc at wc = w0 [V/(rad/s)] for any mode.
inline double dispersion_slope(const OdmrParams& p, double omega_dev_rad,
                               DispersionMode mode = DispersionMode::single_feature) {
    const double eps = 1e-6 * p.linewidth_rad;
    return (lia_dispersion(p, p.f0_rad + eps, omega_dev_rad, mode) -
            lia_dispersion(p, p.f0_rad - eps, omega_dev_rad, mode)) /
           (2.0 * eps);
}

} // namespace apmag
