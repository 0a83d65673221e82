#pragma once
/*
================================================================================
 noise_budget.hpp — analytic sensitivity budget of the CW lock-in magnetometer
--------------------------------------------------------------------------------
 PHOTON BUDGET
   The detected fluorescence produces v_sig across r_load; the equivalent
   detected-photon rate used by the shot-noise formulas is

     R = v_sig / (r_load * q)        [1/s]  (one "photon" per electron charge,
                                             the voltage-referred rate).

 CW-ESR SHOT-NOISE SENSITIVITY
   For a Lorentzian of FWHM linewidth_hz and contrast probed at the optimum
   deviation, the photon-shot-noise-limited sensitivity is

     eta = (4/(3*sqrt(3))) * h * linewidth_hz / (ge_mu_b * C * sqrt(R)).

   Three reporting levels build the budget:
     shot      : x 1/sqrt(2) quadrature rejection, two-axis contrast with the
                 projection factor cos(pi/2 - theta_tet/2)   -> ~2.9 pT/rtHz
     optimized : x p_ref (reference-arm shot noise, sqrt(2))
                 x p_slope (slope loss from hyperfine sidelobes) -> ~4.9
     full      : x p_mw * p_amp * p_mod (microwave noise, preamp noise
                 figure, modulation contrast loss)            -> ~17

 OTHER LIMITS
     spin projection : eta_q = (1/gamma_e)/sqrt(N * T2*)
     pulsed (Ramsey) : eta   = (1/gamma_e) * sqrt(t_i+tau+t_r)/tau
                               * 1/(C*sqrt(R*t_r))

 PHOTODIODE NOISE
   Voltage noise over a bandwidth f_ENBW: sqrt(2*q*v_sig*r_load*f_ENBW), plus
   an optional amplifier floor fixed so that at the anchor operating point the
   total is p_amp times shot. Measured noise-vs-power curves are fit with
   y = (a + b*x)^(1/c); shot-noise-limited data returns c ~= 2.
================================================================================
*/
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "apmag/constants.hpp"
#include "apmag/nv_geometry.hpp"

namespace apmag {

/// Measured noise/penalty inputs of the sensitivity budget.
struct NoiseBudget {
    double v_sig = 0.4;             ///< detected signal voltage [V]
    double r_load = 50.0;           ///< load resistance [ohm]
    double contrast2 = 0.053;       ///< two-axis overlapped contrast C2
    double linewidth_hz = 1.5e6;    ///< FWHM linewidth [Hz]
    double p_ref = std::sqrt(2.0);  ///< reference-photodiode shot noise
    double p_slope = 1.19;          ///< slope reduction from side features
    double p_mw = 1.76;             ///< microwave source noise
    double p_amp = 1.23;            ///< preamp noise figure (1.8 dB)
    double p_mod = 1.6;             ///< modulation contrast loss
    double field_noise_asd = 15e-12; ///< anchored sensitivity [T/rtHz]

    void validate() const {
        if (!(v_sig > 0.0) || !(r_load > 0.0) || !(linewidth_hz > 0.0))
            throw std::invalid_argument("NoiseBudget: v_sig, r_load, linewidth must be > 0");
        if (!(contrast2 > 0.0 && contrast2 < 1.0))
            throw std::invalid_argument("NoiseBudget: contrast2 must lie in (0,1)");
        for (double p : {p_ref, p_slope, p_mw, p_amp, p_mod})
            if (!(p >= 1.0)) throw std::invalid_argument("NoiseBudget: penalties must be >= 1");
        if (!(field_noise_asd > 0.0))
            throw std::invalid_argument("NoiseBudget: field_noise_asd must be > 0");
    }

    /// Detected-photon rate R = v_sig/(r_load*q) [1/s].
    double photon_rate() const {
        validate();
        return v_sig / (r_load * constants::q_e);
    }
};

/// Which penalty factors are applied to the CW-ESR shot-noise formula.
enum class PenaltyLevel { shot, optimized, full };

/// Photon-shot-noise-limited CW-ESR sensitivity [T/rtHz] for a single
/// Lorentzian of FWHM delta_f_hz probed with two-axis contrast `contrast`
/// at detected-photon rate photon_rate. Includes the 1/sqrt(2) quadrature
/// rejection and the two-axis projection factor (see banner).
inline double shot_noise_sensitivity_cwesr(double delta_f_hz, double contrast,
                                           double photon_rate) {
    if (!(delta_f_hz > 0.0) || !(photon_rate > 0.0))
        throw std::invalid_argument("shot_noise_sensitivity_cwesr: need positive linewidth/rate");
    if (!(contrast > 0.0 && contrast < 1.0))
        throw std::invalid_argument("shot_noise_sensitivity_cwesr: contrast must lie in (0,1)");
    const double base = (4.0 / (3.0 * std::sqrt(3.0))) * constants::h_planck * delta_f_hz /
                        (constants::ge_mu_b * contrast * two_axis_angle_factor() *
                         std::sqrt(photon_rate));
    return base / std::sqrt(2.0); // only in-phase noise competes with the signal
}

/// Budget-level sensitivity [T/rtHz]: the bare shot value, or with the
/// penalty factors of NoiseBudget stacked per the reporting level.
inline double budget_sensitivity(const NoiseBudget& b, PenaltyLevel level = PenaltyLevel::shot) {
    b.validate();
    double eta = shot_noise_sensitivity_cwesr(b.linewidth_hz, b.contrast2, b.photon_rate());
    if (level == PenaltyLevel::shot) return eta;
    eta *= b.p_ref * b.p_slope;
    if (level == PenaltyLevel::optimized) return eta;
    return eta * b.p_mw * b.p_amp * b.p_mod;
}

/// Spin-projection-limited sensitivity [T/rtHz] for n_spins with coherence
/// time t2_star: (1/gamma_e)/sqrt(N*T2*).
inline double spin_projection_limit(double n_spins, double t2_star_s) {
    if (!(n_spins > 0.0) || !(t2_star_s > 0.0))
        throw std::invalid_argument("spin_projection_limit: N and T2* must be > 0");
    return 1.0 / (constants::gamma_e * std::sqrt(n_spins * t2_star_s));
}

/// Projected pulsed (Ramsey) sensitivity [T/rtHz]:
///   (1/gamma_e) * sqrt(t_init + tau + t_read)/tau * 1/(contrast*sqrt(R*t_read)).
inline double ramsey_sensitivity(double t_init_s, double tau_s, double t_read_s, double contrast,
                                 double photon_rate) {
    if (!(t_init_s > 0.0) || !(tau_s > 0.0) || !(t_read_s > 0.0))
        throw std::invalid_argument("ramsey_sensitivity: times must be > 0");
    if (!(contrast > 0.0 && contrast < 1.0))
        throw std::invalid_argument("ramsey_sensitivity: contrast must lie in (0,1)");
    if (!(photon_rate > 0.0))
        throw std::invalid_argument("ramsey_sensitivity: photon rate must be > 0");
    const double beta = photon_rate * t_read_s; // photons per readout
    return (1.0 / constants::gamma_e) * std::sqrt(t_init_s + tau_s + t_read_s) /
           (tau_s * contrast * std::sqrt(beta));
}

/// Photodiode voltage-noise RMS [V] over f_enbw_hz at signal level v_sig.
/// With include_amp the amplifier floor (fixed at the anchor point so the
/// total there equals p_amp * shot) is added in quadrature; it persists at
/// v_sig = 0, which is the measurable dark floor.
inline double photodiode_noise_model(double v_sig, double f_enbw_hz, bool include_amp = false,
                                     double r_load = 50.0, double v_anchor = 0.4,
                                     double p_amp = 1.23) {
    if (v_sig < 0.0 || !(f_enbw_hz > 0.0) || !(r_load > 0.0) || !(v_anchor > 0.0))
        throw std::invalid_argument("photodiode_noise_model: invalid arguments");
    const double shot2 = 2.0 * constants::q_e * v_sig * r_load * f_enbw_hz;
    if (!include_amp) return std::sqrt(shot2);
    const double shot2_anchor = 2.0 * constants::q_e * v_anchor * r_load * f_enbw_hz;
    const double amp2 = (p_amp * p_amp - 1.0) * shot2_anchor;
    return std::sqrt(shot2 + amp2);
}

/// Result of fitting y = (a + b*x)^(1/c) to a noise-vs-power curve.
struct NoiseCurveFit {
    double a; ///< floor term [y-units^c]
    double b; ///< slope term [y-units^c per x-unit]
    double c; ///< exponent; ~2 for shot-noise-limited data
};

/// Least-squares fit of y = (a + b*x)^(1/c): for each candidate exponent c
/// the (a, b) pair is a linear least-squares solve on y^c, and c itself is
/// bracketed by a coarse scan and refined by golden-section search.
inline NoiseCurveFit fit_noise_curve(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3)
        throw std::invalid_argument("fit_noise_curve: need >= 3 points, equal sizes");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!(x[i] >= 0.0) || !(y[i] > 0.0))
            throw std::invalid_argument("fit_noise_curve: x must be >= 0 and y > 0");

    const auto n = static_cast<double>(x.size());
    // For fixed c, y^c = a + b*x is linear: solve by least squares, then score.
    auto solve_ab = [&](double c, double& a, double& b) {
        double sx = 0, sxx = 0, sz = 0, sxz = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double z = std::pow(y[i], c);
            sx += x[i];
            sxx += x[i] * x[i];
            sz += z;
            sxz += x[i] * z;
        }
        const double det = n * sxx - sx * sx;
        if (std::fabs(det) < 1e-300) throw std::runtime_error("fit_noise_curve: singular system");
        b = (n * sxz - sx * sz) / det;
        a = (sz - b * sx) / n;
    };
    auto score = [&](double c) {
        double a, b;
        solve_ab(c, a, b);
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double model = a + b * x[i];
            if (model <= 0.0) return 1e300;
            const double r = std::pow(model, 1.0 / c) - y[i];
            s += r * r;
        }
        return s;
    };
    // Coarse scan then golden-section refinement over c in [1, 4].
    double best_c = 2.0, best_s = score(2.0);
    for (double c = 1.0; c <= 4.0; c += 0.05) {
        const double s = score(c);
        if (s < best_s) {
            best_s = s;
            best_c = c;
        }
    }
    double lo = std::max(1.0, best_c - 0.05), hi = std::min(4.0, best_c + 0.05);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 80; ++it) {
        const double c1 = hi - gr * (hi - lo);
        const double c2 = lo + gr * (hi - lo);
        if (score(c1) < score(c2))
            hi = c2;
        else
            lo = c1;
    }
    NoiseCurveFit fit{};
    fit.c = 0.5 * (lo + hi);
    solve_ab(fit.c, fit.a, fit.b);
    return fit;
}

/// Steady-state temperature rise [K] of the sensor for absorbed power [W].
inline double diamond_temperature_rise(double power_w, double coef_k_per_w = 2.4) {
    if (!(power_w >= 0.0) || !(coef_k_per_w > 0.0))
        throw std::invalid_argument("diamond_temperature_rise: power must be >= 0, coef > 0");
    return coef_k_per_w * power_w;
}

} // namespace apmag
