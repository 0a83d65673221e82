#pragma once
/*
================================================================================
 neuro_source.hpp — action-potential magnetic fields from a conducting-wire
                    axon model
--------------------------------------------------------------------------------
 MODEL
   The axon is a straight conducting wire of radius r_a along +y carrying the
   axial action-potential current. For a waveform propagating rigidly at
   conduction velocity v_c (> 0), the intracellular potential obeys
   dPhi/dt = -v_c dPhi/dy, which reduces the Ampere-law field at radial
   distance rho >= r_a to

     B(t) = s * dPhi/dt,      s = mu0 * r_a^2 * sigma / (2 * v_c * rho),

   with sigma the axoplasm conductivity. Return currents outside the axon are
   neglected (they are small near rho ~ r_a; this remains a model limitation
   at large standoff). Anterograde/retrograde propagation flips the sign of
   dPhi/dy and therefore of B.

 CONSEQUENCES BUILT IN
   - B is bipolar with zero integral over a pulse that returns to baseline
     (integral of dPhi/dt), and peaks where |dPhi/dt| peaks, not at the
     voltage peak.
   - Amplitude scales as 1/v_c: an AP running into a taper (slowing down)
     produces a larger field than one running out, and the single-point field
     sign alone identifies the propagation direction.
   - Amplitude scales as 1/rho: standoff changes rescale the trace.

 AP TEMPLATE
   Species templates are parametric analytic pulses: a logistic rise of 10-90%
   width rise_time multiplied by a softplus-smoothed exponential fall of 90-10%
   width fall_time, minus an optional smooth after-hyperpolarization lobe
   (undershoot_fraction of the peak amplitude). The product is C1-smooth and
   is normalized on the sampled grid so the maximum equals resting_potential
   + peak_amplitude exactly.
================================================================================
*/
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "apmag/constants.hpp"
#include "apmag/trace.hpp"

namespace apmag {

/// Propagation sense along the +y axon axis.
enum class Direction { anterograde, retrograde };

/// Conducting-wire axon geometry and electrophysiology.
struct AxonParams {
    double r_a = 200e-6;    ///< axon radius [m]
    double rho = 300e-6;    ///< field-point radial distance [m], rho >= r_a
    double sigma = 1.47;    ///< axoplasm conductivity [S/m]
    double v_c = 9.0;       ///< conduction velocity [m/s], > 0
    Direction direction = Direction::anterograde;

    void validate() const {
        if (!(r_a > 0.0)) throw std::domain_error("AxonParams: r_a must be > 0");
        if (!(rho >= r_a)) throw std::domain_error("AxonParams: rho must be >= r_a");
        if (!(sigma > 0.0)) throw std::domain_error("AxonParams: sigma must be > 0");
        if (!(v_c > 0.0)) throw std::domain_error("AxonParams: v_c must be > 0");
    }
};

/// Parametric action-potential voltage pulse.
struct ApTemplate {
    double resting_potential = -0.070; ///< Phi0 [V], in [-0.1, 0]
    double peak_amplitude = 0.105;     ///< peak minus resting [V], in (0, 0.2)
    double rise_time = 0.4e-3;         ///< 10-90% rise [s]
    double fall_time = 0.8e-3;         ///< 90-10% fall [s]
    double undershoot_fraction = 0.0;  ///< AHP depth / peak_amplitude, >= 0
    double duration = 6e-3;            ///< synthesized trace length [s]

    void validate() const {
        if (!(resting_potential >= -0.1 && resting_potential <= 0.0))
            throw std::domain_error("ApTemplate: resting potential must lie in [-0.1, 0] V");
        if (!(peak_amplitude > 0.0 && peak_amplitude < 0.2))
            throw std::domain_error("ApTemplate: peak amplitude must lie in (0, 0.2) V");
        if (!(rise_time > 0.0) || !(fall_time > 0.0))
            throw std::domain_error("ApTemplate: rise and fall times must be > 0");
        if (!(undershoot_fraction >= 0.0))
            throw std::domain_error("ApTemplate: undershoot fraction must be >= 0");
        if (!(duration > 4.0 * (rise_time + fall_time)))
            throw std::domain_error("ApTemplate: duration too short for the pulse to settle");
    }
};

/// Field-per-voltage-slope constant s = mu0*r_a^2*sigma/(2*v_c*rho)
/// [T per (V/s)].
inline double scaling_constant(const AxonParams& p) {
    p.validate();
    return constants::mu0 * p.r_a * p.r_a * p.sigma / (2.0 * p.v_c * p.rho);
}

namespace detail {

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// Unit-peak smooth lobe (s^2*exp(-s) scaled): zero value and slope at s = 0,
/// maximum 1 at s = 2, exponential recovery.
inline double ahp_lobe(double s) {
    if (s <= 0.0) return 0.0;
    return 0.25 * std::exp(2.0) * s * s * std::exp(-s);
}

} // namespace detail

/// Synthesize the analytic AP pulse on a uniform grid (intracellular volts).
/// Shape: logistic rise (10-90% width = rise_time, midpoint at
/// 0.15*duration + rise_time) times smoothed exponential fall (90-10% width
/// = fall_time, onset one rise_time after the midpoint), minus the optional
/// after-hyperpolarization lobe. The sampled maximum is normalized to
/// resting_potential + peak_amplitude exactly.
inline TimeTrace synth_ap_waveform(const ApTemplate& t, double sample_rate_hz) {
    t.validate();
    if (!(sample_rate_hz > 0.0))
        throw std::invalid_argument("synth_ap_waveform: sample rate must be > 0");
    const auto n = static_cast<std::size_t>(std::llround(t.duration * sample_rate_hz));
    if (n < 8) throw std::invalid_argument("synth_ap_waveform: fewer than 8 samples");

    const double tau_r = t.rise_time / std::log(81.0); // logistic 10-90% width
    const double tau_f = t.fall_time / std::log(9.0);  // exponential 90-10% width
    const double t_mid = 0.15 * t.duration + t.rise_time;  // rise midpoint
    const double t_fall = t_mid + t.rise_time;              // fall onset
    const double w = 0.5 * tau_f;                            // fall smoothing width
    const double tau_u = t.fall_time;                        // AHP lobe scale

    TimeTrace out(sample_rate_hz, TraceUnit::volt_intracellular, n);
    std::vector<double> shape(n);
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ti = static_cast<double>(i) / sample_rate_hz;
        const double rise = 1.0 / (1.0 + std::exp(-(ti - t_mid) / tau_r));
        const double fall = std::exp(-w * detail::softplus((ti - t_fall) / w) / tau_f);
        const double ahp =
            t.undershoot_fraction * detail::ahp_lobe((ti - t_fall - t.fall_time) / tau_u);
        shape[i] = rise * fall - ahp;
        peak = std::max(peak, shape[i]);
    }
    if (!(peak > 0.0)) throw std::runtime_error("synth_ap_waveform: degenerate pulse");
    for (std::size_t i = 0; i < n; ++i)
        out.samples[i] = t.resting_potential + t.peak_amplitude * shape[i] / peak;
    return out;
}

/// B(t) = +/- s * dPhi/dt (central differences; one-sided at the ends).
/// Retrograde propagation negates the trace.
inline TimeTrace ap_field_from_voltage(const TimeTrace& phi, const AxonParams& p) {
    p.validate();
    phi.require_unit(TraceUnit::volt_intracellular, "ap_field_from_voltage");
    const std::size_t n = phi.size();
    if (n < 3) throw std::invalid_argument("ap_field_from_voltage: need >= 3 samples");
    const double s = scaling_constant(p);
    const double sign = (p.direction == Direction::anterograde) ? 1.0 : -1.0;
    const double fs = phi.sample_rate_hz;
    TimeTrace out(fs, TraceUnit::tesla, n);
    out.samples[0] = sign * s * (phi.samples[1] - phi.samples[0]) * fs;
    for (std::size_t i = 1; i + 1 < n; ++i)
        out.samples[i] = sign * s * 0.5 * (phi.samples[i + 1] - phi.samples[i - 1]) * fs;
    out.samples[n - 1] = sign * s * (phi.samples[n - 1] - phi.samples[n - 2]) * fs;
    return out;
}

/// Directional stimulation pair: the same voltage pulse launched toward the
/// sensor from the posterior end (slower velocity v_post, one propagation
/// sign) and from the anterior end (faster v_ant, opposite sign). Returns
/// (B_posterior_stim, B_anterior_stim); amplitudes scale as 1/v respectively.
inline std::pair<TimeTrace, TimeTrace> taper_scenario(double v_post, double v_ant,
                                                      const AxonParams& base,
                                                      const TimeTrace& phi) {
    if (!(v_post > 0.0) || !(v_ant > 0.0))
        throw std::domain_error("taper_scenario: velocities must be > 0");
    if (!(v_post <= v_ant))
        throw std::domain_error("taper_scenario: posterior velocity must not exceed anterior");
    AxonParams post = base;
    post.v_c = v_post;
    AxonParams ant = base;
    ant.v_c = v_ant;
    ant.direction =
        (base.direction == Direction::anterograde) ? Direction::retrograde : Direction::anterograde;
    return {ap_field_from_voltage(phi, post), ap_field_from_voltage(phi, ant)};
}

/// Predicted amplitude ratio B(rho1)/B(rho2) = rho2/rho1 (B proportional
/// to 1/rho).
inline double standoff_scaling(double rho1, double rho2) {
    if (!(rho1 > 0.0) || !(rho2 > 0.0))
        throw std::domain_error("standoff_scaling: distances must be > 0");
    return rho2 / rho1;
}

/// Peak surface field of a small-caliber axon: B = mu0*r_a*sigma*dphi_dt
/// /(2*v_c), i.e. the wire model evaluated at rho = r_a. Defaults are the
/// mammalian Purkinje-axon estimate inputs.
inline double purkinje_estimate(double r_a, double sigma = 0.66, double dphi_dt_max = 339.0,
                                double v_c = 0.25) {
    if (!(r_a > 0.0)) throw std::domain_error("purkinje_estimate: r_a must be > 0");
    if (!(sigma > 0.0) || !(v_c > 0.0))
        throw std::domain_error("purkinje_estimate: sigma and v_c must be > 0");
    AxonParams p;
    p.r_a = r_a;
    p.rho = r_a;
    p.sigma = sigma;
    p.v_c = v_c;
    return scaling_constant(p) * dphi_dt_max;
}

/// Conduction velocity from two detection points: v = separation/|dt|,
/// positive when the wave reaches point 1 first.
inline double conduction_velocity_two_point(double t_peak_1, double t_peak_2, double separation) {
    if (!(separation > 0.0))
        throw std::domain_error("conduction_velocity_two_point: separation must be > 0");
    const double dt = t_peak_2 - t_peak_1;
    if (dt == 0.0)
        throw std::domain_error("conduction_velocity_two_point: coincident peaks, "
                                "velocity unresolvable");
    return (dt > 0.0 ? 1.0 : -1.0) * separation / std::fabs(dt);
}

} // namespace apmag
