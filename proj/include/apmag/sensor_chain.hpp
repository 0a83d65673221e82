#pragma once
/*
================================================================================
 sensor_chain.hpp — forward model of the lock-in ODMR magnetometer
--------------------------------------------------------------------------------
 TRANSDUCTION
   The bias field puts projections of +-b_proj on the two sensing axes, so
   their probed resonances overlap and a source field b along +x moves the
   overlapped line rigidly by gamma_e * s * b (s = the two-axis projection
   factor, 0.8165). With the carrier parked on the zero crossing the
   demodulated voltage is linear in b:

     V = K * b,
     K = slope_sign * cos(phi_demod) * bias_sign
         * 2 * s * small_signal_gain(odmr) * lia_gain        [V/T]

   where the factor 2 is the two-axis contrast doubling and small_signal_gain
   is the per-axis linearized dispersion coefficient (negative: the resonance
   moves up in frequency for positive projection).

 CALIBRATION
   The zero-crossing slope quoted in volts per hertz of line shift is
   K / (gamma_e/2pi * s); the voltage-to-field constant

     C_LIA = h / (slope * ge_mu_b * s)

   then equals 1/K identically, so volts_to_field() undoes the chain exactly.
   Flipping slope_sign, adding 180 degrees of demodulation phase, or
   reversing the bias after calibration each negate the recovered field;
   these are the reversal assertions of the systematic-check suite.

 NOISE
   A sensitivity of eta T/rtHz means a field b applied in phase equals the
   in-phase noise quadrature in 1 Hz; the demodulated trace carries both
   quadratures, so its white amplitude spectral density in field units is
   sqrt(2)*eta. Noise is injected per sample before the output filter with

     sigma_0 = sqrt(2) * eta * noise_scale * |K| * sqrt(fs/2),

   giving a filtered trace of RMS eta*sqrt(2*f_ENBW) — the quantity the
   direct-RMS sensitivity estimator divides by sqrt(2*f_ENBW) to recover eta.

 DIGITIZATION
   The filtered voltage is scaled by the LIA expand factor, quantized by a
   16-bit +-10 V converter (round half away from zero, so negating the input
   negates the output exactly), and divided back down.
================================================================================
*/
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "apmag/constants.hpp"
#include "apmag/lockin.hpp"
#include "apmag/noise_budget.hpp"
#include "apmag/nv_geometry.hpp"
#include "apmag/odmr.hpp"
#include "apmag/rng.hpp"
#include "apmag/trace.hpp"

namespace apmag {

/// Digitizer model (default: 16-bit, +-10 V input range).
struct AdcConfig {
    int bits = 16;
    double range_v = 10.0;
    bool enabled = true;

    void validate() const {
        if (bits < 2 || bits > 32) throw std::invalid_argument("AdcConfig: bits must be 2..32");
        if (!(range_v > 0.0)) throw std::invalid_argument("AdcConfig: range must be > 0");
    }
};

/// Operating-point switches: the signal/noise enables and the three signed
/// reversals of the systematic-check suite. electrode_position_mm locates
/// the extracellular recording electrode; the magnetometer chain must not
/// depend on it (that independence is itself one of the checks).
struct ChainSettings {
    bool source_on = true;
    bool noise_on = true;
    double noise_scale = 1.0;        ///< multiplies the anchored sensitivity
    double slope_sign = 1.0;         ///< +-1: which zero crossing is used
    double demod_phase_deg = 0.0;    ///< LIA reference phase offset
    double bias_sign = 1.0;          ///< +-1: bias field orientation
    double electrode_position_mm = 5.0;

    void validate() const {
        if (slope_sign != 1.0 && slope_sign != -1.0)
            throw std::invalid_argument("ChainSettings: slope_sign must be +1 or -1");
        if (bias_sign != 1.0 && bias_sign != -1.0)
            throw std::invalid_argument("ChainSettings: bias_sign must be +1 or -1");
        if (!(noise_scale >= 0.0))
            throw std::invalid_argument("ChainSettings: noise_scale must be >= 0");
        if (!std::isfinite(demod_phase_deg))
            throw std::invalid_argument("ChainSettings: non-finite demod phase");
    }
};

/// Complete measurement-chain configuration.
struct SensorChain {
    OdmrParams odmr{};
    LockInConfig lockin{};
    NoiseBudget noise{};
    AdcConfig adc{};
    ChainSettings settings{};
    double sample_rate_hz = 250e3;

    void validate() const {
        odmr.validate();
        lockin.validate();
        noise.validate();
        adc.validate();
        settings.validate();
        if (!(sample_rate_hz > 0.0))
            throw std::invalid_argument("SensorChain: sample rate must be > 0");
    }
};

namespace detail {

/// cos of an angle in degrees, exact at multiples of 90 so that the
/// 180-degree reversal is an exact sign flip.
inline double cos_degrees(double deg) {
    const double r = std::fmod(std::fmod(deg, 360.0) + 360.0, 360.0);
    if (r == 0.0) return 1.0;
    if (r == 180.0) return -1.0;
    if (r == 90.0 || r == 270.0) return 0.0;
    return std::cos(deg * constants::pi / 180.0);
}

} // namespace detail

/// Signed end-to-end voltage-per-field gain K [V/T] (see banner).
inline double chain_gain(const SensorChain& chain) {
    chain.validate();
    return chain.settings.slope_sign * detail::cos_degrees(chain.settings.demod_phase_deg) *
           chain.settings.bias_sign * 2.0 * two_axis_angle_factor() *
           small_signal_gain(chain.odmr) * chain.lockin.gain_v_per_v;
}

/// Magnitude of the gain seen by detector noise (reversal switches only
/// move signs; they do not attenuate the noise floor).
inline double noise_gain(const SensorChain& chain) {
    chain.validate();
    return std::fabs(2.0 * two_axis_angle_factor() * small_signal_gain(chain.odmr) *
                     chain.lockin.gain_v_per_v);
}

/// Zero-crossing slope in volts per hertz of probed-line shift: the number
/// a frequency calibration of the operating point quotes.
inline double zero_crossing_slope(const SensorChain& chain) {
    return chain_gain(chain) * constants::two_pi /
           (constants::gamma_e * two_axis_angle_factor());
}

/// Voltage-to-field conversion C_LIA = h/(slope * ge_mu_b * cos factor)
/// [T/V]; equals 1/chain_gain for the slope quoted by zero_crossing_slope.
inline double calibration_constant(double slope_v_per_hz) {
    if (slope_v_per_hz == 0.0 || !std::isfinite(slope_v_per_hz))
        throw std::invalid_argument("calibration_constant: singular zero-crossing slope");
    return constants::h_planck /
           (slope_v_per_hz * constants::ge_mu_b * two_axis_angle_factor());
}

/// On-axis field of an n-turn circular loop at axial distance z [T]:
/// mu0*N*I*r^2 / (2*(z^2+r^2)^(3/2)).
inline double coil_field(double n_turns, double i_coil_a, double r_coil_m, double z_coil_m) {
    if (!(r_coil_m > 0.0)) throw std::domain_error("coil_field: radius must be > 0");
    if (!(z_coil_m >= 0.0)) throw std::domain_error("coil_field: distance must be >= 0");
    if (!(n_turns > 0.0)) throw std::domain_error("coil_field: turn count must be > 0");
    const double d2 = z_coil_m * z_coil_m + r_coil_m * r_coil_m;
    return constants::mu0 * n_turns * i_coil_a * r_coil_m * r_coil_m /
           (2.0 * d2 * std::sqrt(d2));
}

/// Measured-equivalent fractional fluorescence change for a static field b:
/// the overlapped-pair on-slope dip shift (3*sqrt(3)/4)*(2C)*(gamma*b*s/Gamma)
/// divided by the modulation and slope penalty factors that the realized
/// operating point pays.
inline double fractional_lif_change(const SensorChain& chain, double b_tesla) {
    chain.validate();
    if (!std::isfinite(b_tesla))
        throw std::invalid_argument("fractional_lif_change: non-finite field");
    const double raw = (3.0 * std::sqrt(3.0) / 4.0) * (2.0 * chain.odmr.contrast) *
                       constants::gamma_e * std::fabs(b_tesla) * two_axis_angle_factor() /
                       chain.odmr.linewidth_rad;
    return raw / (chain.noise.p_mod * chain.noise.p_slope);
}

/// Quantize one voltage through the expand-then-digitize path.
inline double adc_quantize(double v, const AdcConfig& adc, double expand) {
    const double expanded = v * expand;
    const double limited = std::clamp(expanded, -adc.range_v, adc.range_v);
    const double step = 2.0 * adc.range_v / std::pow(2.0, adc.bits);
    return std::round(limited / step) * step / expand;
}

/// Forward model: true field trace in, digitized lock-in voltage trace out.
/// Deterministic for a fixed seed. The steps are gain, per-sample noise,
/// RC cascade at the effective time constant, optional brick-wall output
/// low-pass, digitization.
inline TimeTrace synthesize_measurement(const SensorChain& chain, const TimeTrace& true_field,
                                        std::uint64_t seed) {
    chain.validate();
    true_field.require_unit(TraceUnit::tesla, "synthesize_measurement");
    if (std::fabs(true_field.sample_rate_hz - chain.sample_rate_hz) >
        1e-9 * chain.sample_rate_hz)
        throw std::invalid_argument("synthesize_measurement: trace rate != chain rate");
    const std::size_t n = true_field.size();
    if (n == 0) throw std::invalid_argument("synthesize_measurement: empty trace");

    const double k_signal = chain.settings.source_on ? chain_gain(chain) : 0.0;
    TimeTrace out(chain.sample_rate_hz, TraceUnit::volt, n);
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = k_signal * true_field.samples[i];

    if (chain.settings.noise_on && chain.settings.noise_scale > 0.0) {
        const double sigma0 = std::sqrt(2.0) * chain.noise.field_noise_asd *
                              chain.settings.noise_scale * noise_gain(chain) *
                              std::sqrt(chain.sample_rate_hz / 2.0);
        GaussianRng rng(seed);
        for (double& v : out.samples) v += sigma0 * rng();
    }

    const FilterSummary summary = filter_summary(chain.lockin);
    filter_cascade(out.samples, chain.sample_rate_hz, summary.tau_eff_s,
                   chain.lockin.rolloff_stages);
    if (chain.lockin.output_lowpass_hz > 0.0)
        brickwall_lowpass(out.samples, chain.sample_rate_hz, chain.lockin.output_lowpass_hz);

    if (chain.adc.enabled)
        for (double& v : out.samples) v = adc_quantize(v, chain.adc, chain.lockin.expand);
    return out;
}

/// Convenience overload with the default digitizer and nominal switches.
inline TimeTrace synthesize_measurement(const TimeTrace& true_field, const OdmrParams& odmr,
                                        const LockInConfig& cfg, const NoiseBudget& noise,
                                        std::uint64_t seed) {
    SensorChain chain;
    chain.odmr = odmr;
    chain.lockin = cfg;
    chain.noise = noise;
    chain.sample_rate_hz = true_field.sample_rate_hz;
    return synthesize_measurement(chain, true_field, seed);
}

/// Apply the calibration constant: volts trace -> tesla trace.
inline TimeTrace volts_to_field(const TimeTrace& v, double c_lia_t_per_v) {
    v.require_unit(TraceUnit::volt, "volts_to_field");
    if (!std::isfinite(c_lia_t_per_v) || c_lia_t_per_v == 0.0)
        throw std::invalid_argument("volts_to_field: bad calibration constant");
    TimeTrace out(v.sample_rate_hz, TraceUnit::tesla, v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out.samples[i] = c_lia_t_per_v * v.samples[i];
    return out;
}

/// One reversal assertion of the systematic-check suite.
struct ReversalCheck {
    std::string name;        ///< which knob was reversed
    std::string expected;    ///< expected transformation of the recovered field
    bool passed = false;
    double max_abs_error_t = 0.0; ///< worst sample deviation from expectation [T]
};

/// Run the five reversal assertions with the source noise disabled and the
/// calibration frozen at the baseline operating point: source off zeroes the
/// recovered field; moving the recording electrode changes nothing; flipping
/// the slope sign, adding 180 degrees of demodulation phase, or reversing
/// the bias each negate it exactly.
inline std::vector<ReversalCheck> systematic_checks(const SensorChain& configured) {
    SensorChain base = configured;
    base.settings.noise_on = false;
    base.settings.source_on = true;
    base.validate();

    // Probe field: a few cycles of a mid-band sinusoid, well inside the
    // filter passband.
    const double f_probe = 250.0;
    const std::size_t n = static_cast<std::size_t>(base.sample_rate_hz * 0.02);
    TimeTrace probe(base.sample_rate_hz, TraceUnit::tesla, n);
    for (std::size_t i = 0; i < n; ++i)
        probe.samples[i] =
            1e-9 * std::sin(constants::two_pi * f_probe * static_cast<double>(i) /
                            base.sample_rate_hz);

    const double c_lia = calibration_constant(zero_crossing_slope(base));
    const TimeTrace b0 = volts_to_field(synthesize_measurement(base, probe, 1), c_lia);

    auto run = [&](const SensorChain& variant) {
        return volts_to_field(synthesize_measurement(variant, probe, 1), c_lia);
    };
    auto max_abs_diff = [](const TimeTrace& a, const TimeTrace& b, double b_scale) {
        double worst = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            worst = std::max(worst, std::fabs(a.samples[i] - b_scale * b.samples[i]));
        return worst;
    };

    std::vector<ReversalCheck> checks;

    SensorChain off = base;
    off.settings.source_on = false;
    double err = max_abs_diff(run(off), b0, 0.0);
    checks.push_back({"source_off", "recovered field -> 0", err == 0.0, err});

    SensorChain moved = base;
    moved.settings.electrode_position_mm += 5.0;
    err = max_abs_diff(run(moved), b0, 1.0);
    checks.push_back({"electrode_moved", "recovered field unchanged", err == 0.0, err});

    SensorChain slope = base;
    slope.settings.slope_sign = -slope.settings.slope_sign;
    err = max_abs_diff(run(slope), b0, -1.0);
    checks.push_back({"slope_sign_flip", "recovered field negated", err == 0.0, err});

    SensorChain phase = base;
    phase.settings.demod_phase_deg += 180.0;
    err = max_abs_diff(run(phase), b0, -1.0);
    checks.push_back({"demod_phase_plus_180", "recovered field negated", err == 0.0, err});

    SensorChain bias = base;
    bias.settings.bias_sign = -bias.settings.bias_sign;
    err = max_abs_diff(run(bias), b0, -1.0);
    checks.push_back({"bias_field_reversed", "recovered field negated", err == 0.0, err});

    return checks;
}

} // namespace apmag
