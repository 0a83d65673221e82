#pragma once
/*
================================================================================
 lockin.hpp — lock-in output filtering, bandwidth bookkeeping, drift servo
--------------------------------------------------------------------------------
 FILTER MODEL
   The lock-in output stage is n identical one-pole RC low-passes in series
   (n = rolloff_stages; 6 dB/oct per stage, so 24 dB/oct = 4 stages). For a
   cascade of n identical poles with time constant tau:

     |H(f)|^2 = (1 + (2*pi*f*tau)^2)^-n
     f_c      = sqrt(2^(1/n) - 1) / (2*pi*tau)          (-3 dB overall)
     f_ENBW   = coef(n)/tau, coef = {1/4, 1/8, 3/32, 5/64} for n = 1..4.

   Instruments report a *measured* equivalent noise bandwidth that folds in
   everything after the demodulator; when f_enbw_measured_hz is set, the
   effective tau is rescaled so the analytic ENBW matches the measurement,
   and all derived quantities (f_c, noise RMS) follow from that tau.

 STEP RESPONSE
   Temporal resolution is measured on the full pipeline: a demodulator cannot
   resolve faster than one modulation period, so the step passes through a
   boxcar of width 1/f_mod, then the RC cascade (nominal tau), then an
   optional brick-wall output low-pass (FFT bin zeroing above the cutoff).
   The 10-90 rise time is measured on a dense internal grid.

 DRIFT SERVO
   Slow thermal drift of the resonance is tracked by re-centering the carrier
   at a fixed update rate (zero-order hold): the residual w0 - wc is a
   sawtooth of peak drift_rate * update_period.
================================================================================
*/
#include <cmath>
#include <stdexcept>
#include <vector>

#include "apmag/constants.hpp"
#include "apmag/fft.hpp"
#include "apmag/trace.hpp"

namespace apmag {

/// Lock-in amplifier configuration.
struct LockInConfig {
    double f_mod_hz = 18e3;          ///< square-wave FM modulation rate
    double tau_s = 30e-6;            ///< per-stage RC time constant
    int rolloff_stages = 4;          ///< 1..4 (6..24 dB/oct)
    double f_enbw_measured_hz = 0.0; ///< 0 = use the analytic cascade ENBW
    double gain_v_per_v = 1e5;       ///< demodulated-signal voltage gain
    double expand = 5.0;             ///< output expand before digitization
    double output_lowpass_hz = 0.0;  ///< 0 = off; brick-wall FFT low-pass

    void validate() const {
        if (!(f_mod_hz > 0.0) || !(tau_s > 0.0) || !(gain_v_per_v > 0.0) || !(expand >= 1.0))
            throw std::invalid_argument("LockInConfig: rates, tau, gain, expand must be positive");
        if (rolloff_stages < 1 || rolloff_stages > 4)
            throw std::invalid_argument("LockInConfig: rolloff_stages must be 1..4");
        if (f_enbw_measured_hz < 0.0 || output_lowpass_hz < 0.0)
            throw std::invalid_argument("LockInConfig: bandwidths must be >= 0");
    }
};

/// ENBW coefficient for n identical poles: f_ENBW = coef/tau.
inline double enbw_coefficient(int stages) {
    switch (stages) {
        case 1: return 1.0 / 4.0;
        case 2: return 1.0 / 8.0;
        case 3: return 3.0 / 32.0;
        case 4: return 5.0 / 64.0;
        default: throw std::invalid_argument("enbw_coefficient: stages must be 1..4");
    }
}

/// Derived filter figures after applying the measured-ENBW override.
struct FilterSummary {
    double tau_eff_s;   ///< effective per-stage time constant
    double f_c_hz;      ///< overall -3 dB frequency
    double f_enbw_hz;   ///< equivalent noise bandwidth
};

inline FilterSummary filter_summary(const LockInConfig& cfg) {
    cfg.validate();
    const double coef = enbw_coefficient(cfg.rolloff_stages);
    const double tau_eff =
        (cfg.f_enbw_measured_hz > 0.0) ? coef / cfg.f_enbw_measured_hz : cfg.tau_s;
    const double fc = std::sqrt(std::pow(2.0, 1.0 / cfg.rolloff_stages) - 1.0) /
                      (constants::two_pi * tau_eff);
    return FilterSummary{tau_eff, fc, coef / tau_eff};
}

/// Apply n identical one-pole low-passes in place (zero initial state).
inline void filter_cascade(std::vector<double>& samples, double sample_rate_hz, double tau_s,
                           int stages) {
    if (!(sample_rate_hz > 0.0) || !(tau_s > 0.0))
        throw std::invalid_argument("filter_cascade: rate and tau must be positive");
    if (stages < 1) throw std::invalid_argument("filter_cascade: stages must be >= 1");
    const double a = std::exp(-1.0 / (sample_rate_hz * tau_s));
    const double b = 1.0 - a;
    for (int s = 0; s < stages; ++s) {
        double acc = 0.0;
        for (double& x : samples) {
            acc = a * acc + b * x;
            x = acc;
        }
    }
}

/// Trace-level cascade using the configuration's effective time constant
/// (measured-ENBW override applied when set).
inline TimeTrace filter_cascade(const TimeTrace& trace, const LockInConfig& cfg) {
    const FilterSummary summary = filter_summary(cfg);
    TimeTrace out = trace;
    filter_cascade(out.samples, out.sample_rate_hz, summary.tau_eff_s, cfg.rolloff_stages);
    return out;
}

/// Brick-wall low-pass by zeroing FFT bins above cutoff_hz (in place).
inline void brickwall_lowpass(std::vector<double>& samples, double sample_rate_hz,
                              double cutoff_hz) {
    if (!(cutoff_hz > 0.0)) throw std::invalid_argument("brickwall_lowpass: cutoff must be > 0");
    const std::size_t n = samples.size();
    if (n < 2) return;
    FourierPlan plan(n);
    auto spec = fft_real(samples, plan);
    for (std::size_t k = 0; k < n; ++k) {
        const double f = (k <= n / 2) ? static_cast<double>(k) * sample_rate_hz / n
                                      : (static_cast<double>(k) - static_cast<double>(n)) *
                                            sample_rate_hz / n;
        if (std::fabs(f) > cutoff_hz) spec[k] = cplx(0.0, 0.0);
    }
    auto back = plan.inverse(spec);
    for (std::size_t i = 0; i < n; ++i) samples[i] = back[i].real();
}

/// 10-90 rise time [s] of the full pipeline (demod boxcar -> RC cascade ->
/// optional brick-wall output low-pass) measured on a dense internal grid.
inline double step_response_10_90(const LockInConfig& cfg, double internal_rate_hz = 4e6) {
    cfg.validate();
    if (!(internal_rate_hz > 10.0 * cfg.f_mod_hz))
        throw std::invalid_argument("step_response_10_90: internal rate too low");
    const double dt = 1.0 / internal_rate_hz;
    // Long enough for full settling plus room for the FFT filter's edges.
    const std::size_t n = detail::next_pow2(
        static_cast<std::size_t>((40.0 * cfg.tau_s + 64.0 / cfg.f_mod_hz) / dt) + 1);
    std::vector<double> y(n, 1.0);
    // Demodulation boxcar: moving average over one modulation period.
    const auto m = static_cast<std::size_t>(std::llround(internal_rate_hz / cfg.f_mod_hz));
    if (m > 1) {
        // Moving average over the last m samples with zero-filled history
        // (the input was zero before the step at t = 0).
        std::vector<double> box(n, 0.0);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += y[i];
            if (i >= m) acc -= y[i - m];
            box[i] = acc / static_cast<double>(m);
        }
        y = std::move(box);
    }
    filter_cascade(y, internal_rate_hz, cfg.tau_s, cfg.rolloff_stages);
    if (cfg.output_lowpass_hz > 0.0) brickwall_lowpass(y, internal_rate_hz, cfg.output_lowpass_hz);
    // Final value away from both edges; first crossings define the rise.
    const double fin = y[n / 2];
    double t10 = -1.0, t90 = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (t10 < 0.0 && y[i] >= 0.1 * fin) t10 = static_cast<double>(i) * dt;
        if (t90 < 0.0 && y[i] >= 0.9 * fin) {
            t90 = static_cast<double>(i) * dt;
            break;
        }
    }
    if (t10 < 0.0 || t90 < 0.0) throw std::runtime_error("step_response_10_90: no settling");
    return t90 - t10;
}

/// Residual resonance-minus-carrier detuning under a zero-order-hold
/// re-centering servo. omega0_drift carries the resonance frequency (or its
/// drift from nominal) in rad/s, stored as a dimensionless trace; the carrier
/// snaps to the current value every 1/update_rate_hz seconds, starting at
/// t = 0, and holds in between. Returns omega0(t) - omega_c(t).
inline TimeTrace drift_servo(const TimeTrace& omega0_drift, double update_rate_hz) {
    if (!(update_rate_hz > 0.0))
        throw std::invalid_argument("drift_servo: update rate must be positive");
    if (omega0_drift.size() == 0) throw std::invalid_argument("drift_servo: empty trace");
    TimeTrace out(omega0_drift.sample_rate_hz, omega0_drift.unit, omega0_drift.size());
    const double samples_per_update = omega0_drift.sample_rate_hz / update_rate_hz;
    if (samples_per_update <= 1.0) return out; // servo faster than sampling: no residual
    double held = omega0_drift.samples[0];
    std::size_t k = 0; // completed updates; next one is due at sample k*samples_per_update
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (static_cast<double>(i) >= static_cast<double>(k) * samples_per_update) {
            held = omega0_drift.samples[i];
            ++k;
        }
        out.samples[i] = omega0_drift.samples[i] - held;
    }
    return out;
}

} // namespace apmag
