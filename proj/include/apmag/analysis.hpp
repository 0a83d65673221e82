#pragma once
/*
================================================================================
 analysis.hpp — recovery side: comb filtering, alignment/averaging, matched
                filtering, SNR accounting, and three sensitivity estimators
--------------------------------------------------------------------------------
 COMB FILTER
   Offline frequency-domain masking: bins below 80 Hz are zeroed (drift and
   DC), and 1-Hz-wide stop bands are zeroed at every 60 Hz harmonic through
   660 Hz plus any configured site-specific lines. Masking is symmetric in
   +-f, so real traces stay real.

 ALIGNMENT AND AVERAGING
   Trials are averaged pointwise either on the stimulus clock (every trial
   starts at the stimulation pulse) or after shifting each trial so the
   dominant extremum of its trigger trace lands on a common sample. Flat
   triggers (no extremum) reject their trials. Averaging N equal-noise trials
   reduces the noise RMS by sqrt(N).

 MATCHED FILTER
   y(t) = integral h(t - t') x(t') dt' with h the time-reversed expected
   signal, built from the averaged detection: mean -> 80 Hz high-pass ->
   zeroed outside a 1.4 ms window around the extremum pair -> time-reversed.
   On white noise of two-sided PSD S, the filter's peak SNR is
   sqrt(E/S) with E the template energy — the optimal linear filter.

 SENSITIVITY ESTIMATORS (all return tesla/rtHz)
   A sensitivity eta means: a field applied in phase with the demodulation
   equals the in-phase noise quadrature in a 1 Hz band. The demodulated
   trace carries both noise quadratures, so estimators that see total noise
   carry an explicit 1/sqrt(2):

   method 1 (test tone, time domain)
     x_i = (1/T) integral B_meas B_test dt over trial i;
     eta1 = (B_rms_test*sqrt(2)/mean(x)) * std(x) * sqrt(T).
     The projection onto B_test keeps a single noise quadrature, and the
     formula's sqrt(2) restores the total — eta1 therefore reports the
     full baseband noise density, sqrt(2) above the in-phase sensitivity;
     reports print eta1/sqrt(2) beside the other two estimators.

   method 2 (test tone, frequency domain)
     Amplitude spectrum calibrated so the f_test bin reads B_rms_test;
     eta2 = (quadrature mean of the calibrated ASD over the band)/sqrt(2).

   method 3 (no test field)
     eta3 = RMS(B_meas)/sqrt(2 f_ENBW) per trial, averaged.
================================================================================
*/
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "apmag/constants.hpp"
#include "apmag/fft.hpp"
#include "apmag/trace.hpp"

namespace apmag {

/// Detection requires the signal to beat the noise floor by this many
/// quiet-window standard deviations (see snr()).
inline constexpr double detection_threshold = 3.0;

/// Zero all bins below highpass_hz and 1-Hz-wide bands at every 60 Hz
/// harmonic through 660 Hz plus extra_notches_hz. Mask is symmetric in
/// frequency magnitude.
inline TimeTrace comb_filter(const TimeTrace& trace,
                             const std::vector<double>& extra_notches_hz = {},
                             double highpass_hz = 80.0) {
    const std::size_t n = trace.size();
    if (n < 2) throw std::invalid_argument("comb_filter: trace too short");
    std::vector<double> notches;
    for (double f = 60.0; f <= 660.0; f += 60.0) notches.push_back(f);
    notches.insert(notches.end(), extra_notches_hz.begin(), extra_notches_hz.end());

    FourierPlan plan(n);
    auto spec = fft_real(trace.samples, plan);
    for (std::size_t k = 0; k < n; ++k) {
        const double f =
            std::min(static_cast<double>(k), static_cast<double>(n - k)) *
            trace.sample_rate_hz / static_cast<double>(n);
        bool kill = f < highpass_hz;
        for (double m : notches)
            if (std::fabs(f - m) <= 0.5) kill = true;
        if (kill) spec[k] = cplx(0.0, 0.0);
    }
    auto back = plan.inverse(spec);
    TimeTrace out(trace.sample_rate_hz, trace.unit, n);
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = back[i].real();
    return out;
}

/// How align_and_average lines trials up.
enum class AlignMode {
    stimulus_onset,   ///< trials already share t = 0 at the stimulation pulse
    trigger_extremum  ///< shift so each trigger's dominant extremum coincides
};

/// Pointwise average plus the per-trace rejection report.
struct AlignResult {
    TimeTrace average;
    std::size_t used = 0;
    std::size_t rejected = 0;
};

/// Average equal-length trials (see AlignMode). In trigger mode each trace
/// is shifted by an integer sample count so its trigger extremum lands on
/// the first trace's extremum sample; shifted-in samples are zero. Flat
/// triggers (zero peak-to-peak) reject their trials.
inline AlignResult align_and_average(const std::vector<TimeTrace>& traces,
                                     const std::vector<TimeTrace>& triggers = {},
                                     AlignMode mode = AlignMode::stimulus_onset) {
    if (traces.empty()) throw std::invalid_argument("align_and_average: no traces");
    const std::size_t n = traces.front().size();
    for (const auto& t : traces)
        if (t.size() != n || t.sample_rate_hz != traces.front().sample_rate_hz)
            throw std::invalid_argument("align_and_average: traces must share shape");
    if (mode == AlignMode::trigger_extremum && triggers.size() != traces.size())
        throw std::invalid_argument("align_and_average: need one trigger per trace");

    auto extremum_index = [](const TimeTrace& trig) -> std::ptrdiff_t {
        double lo = trig.samples[0], hi = trig.samples[0];
        std::size_t arg = 0;
        double best = 0.0;
        for (std::size_t i = 0; i < trig.size(); ++i) {
            lo = std::min(lo, trig.samples[i]);
            hi = std::max(hi, trig.samples[i]);
            if (std::fabs(trig.samples[i]) > best) {
                best = std::fabs(trig.samples[i]);
                arg = i;
            }
        }
        if (hi - lo <= 0.0) return -1; // flat: no extremum to align on
        return static_cast<std::ptrdiff_t>(arg);
    };

    AlignResult result{TimeTrace(traces.front().sample_rate_hz, traces.front().unit, n), 0, 0};
    std::ptrdiff_t ref = -1;
    for (std::size_t t = 0; t < traces.size(); ++t) {
        std::ptrdiff_t shift = 0;
        if (mode == AlignMode::trigger_extremum) {
            const std::ptrdiff_t idx = extremum_index(triggers[t]);
            if (idx < 0) {
                ++result.rejected;
                continue;
            }
            if (ref < 0) ref = idx;
            shift = ref - idx;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) - shift;
            if (j >= 0 && j < static_cast<std::ptrdiff_t>(n))
                result.average.samples[i] += traces[t].samples[static_cast<std::size_t>(j)];
        }
        ++result.used;
    }
    if (result.used == 0) throw std::invalid_argument("align_and_average: all trials rejected");
    for (double& v : result.average.samples) v /= static_cast<double>(result.used);
    return result;
}

/// Time-reversed expected-signal template for the matched filter.
struct MatchedTemplate {
    std::vector<double> samples; ///< time-reversed, zero outside the window
    double sample_rate_hz = 0.0;
    double window_s = 1.4e-3;    ///< width of the retained signal window
    std::size_t source_count = 0;
    bool low_energy = false;     ///< window did not stand out above the rest

    /// Template energy integral h^2 dt [unit^2 * s].
    double energy() const {
        double e = 0.0;
        for (double v : samples) e += v * v;
        return e / sample_rate_hz;
    }
};

/// Build the matched-filter template: mean of the trials -> 80 Hz high-pass
/// -> zero outside a window_s window centered between the global extremum
/// pair -> time-reverse.
inline MatchedTemplate build_template(const std::vector<TimeTrace>& traces,
                                      double window_s = 1.4e-3) {
    if (traces.empty()) throw std::invalid_argument("build_template: no traces");
    if (!(window_s > 0.0)) throw std::invalid_argument("build_template: window must be > 0");
    const TimeTrace mean_trace = align_and_average(traces).average;
    const TimeTrace hp = comb_filter(mean_trace, {}, 80.0);

    std::size_t arg_max = 0, arg_min = 0;
    for (std::size_t i = 0; i < hp.size(); ++i) {
        if (hp.samples[i] > hp.samples[arg_max]) arg_max = i;
        if (hp.samples[i] < hp.samples[arg_min]) arg_min = i;
    }
    const double center = 0.5 * static_cast<double>(arg_max + arg_min);
    const double half = 0.5 * window_s * hp.sample_rate_hz;
    const auto lo = static_cast<std::ptrdiff_t>(std::ceil(center - half));
    const auto hi = static_cast<std::ptrdiff_t>(std::floor(center + half));

    MatchedTemplate tpl;
    tpl.sample_rate_hz = hp.sample_rate_hz;
    tpl.window_s = window_s;
    tpl.source_count = traces.size();
    std::vector<double> windowed;
    double inside = 0.0, outside = 0.0;
    std::size_t n_in = 0, n_out = 0;
    for (std::size_t i = 0; i < hp.size(); ++i) {
        const auto si = static_cast<std::ptrdiff_t>(i);
        if (si >= lo && si <= hi) {
            windowed.push_back(hp.samples[i]);
            inside += hp.samples[i] * hp.samples[i];
            ++n_in;
        } else {
            outside += hp.samples[i] * hp.samples[i];
            ++n_out;
        }
    }
    tpl.low_energy =
        n_out > 0 && n_in > 0 && inside / static_cast<double>(n_in) <
                                     4.0 * outside / static_cast<double>(n_out);
    std::reverse(windowed.begin(), windowed.end());
    tpl.samples = std::move(windowed);
    return tpl;
}

/// Causal discrete matched filter y_i = sum_j h_j x_(i-j) * dt. The output
/// trace is tagged dimensionless (units are input-unit^2 * s).
inline TimeTrace matched_filter(const TimeTrace& trace, const MatchedTemplate& h) {
    if (h.samples.empty()) throw std::invalid_argument("matched_filter: empty template");
    if (h.samples.size() > trace.size())
        throw std::invalid_argument("matched_filter: template longer than trace");
    if (std::fabs(h.sample_rate_hz - trace.sample_rate_hz) > 1e-9 * trace.sample_rate_hz)
        throw std::invalid_argument("matched_filter: sample-rate mismatch");
    const double dt = trace.dt();
    TimeTrace out(trace.sample_rate_hz, TraceUnit::dimensionless, trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
        double acc = 0.0;
        const std::size_t jmax = std::min(h.samples.size() - 1, i);
        for (std::size_t j = 0; j <= jmax; ++j) acc += h.samples[j] * trace.samples[i - j];
        out.samples[i] = acc * dt;
    }
    return out;
}

/// Peak-to-peak signal over quiet-section noise, with the single-trial
/// equivalent under sqrt(N) averaging.
struct SnrReport {
    double snr_avg = 0.0;    ///< p2p(signal window)/sigma(quiet window)
    double snr_single = 0.0; ///< snr_avg/sqrt(n_avg)
    bool detected = false;   ///< signal p2p beats quiet p2p by >= threshold sigma
};

/// The detection flag compares the signal-window peak-to-peak against the
/// quiet-window peak-to-peak rather than against sigma alone: the extremes
/// of pure noise already span several sigma over any window, and the quiet
/// window measures exactly that floor.
inline SnrReport snr(const TimeTrace& trace, std::pair<double, double> signal_window_s,
                     std::pair<double, double> quiet_window_s, std::size_t n_avg) {
    if (n_avg == 0) throw std::invalid_argument("snr: n_avg must be >= 1");
    const double p2p = peak_to_peak(trace, signal_window_s.first, signal_window_s.second);
    const double p2p_quiet =
        peak_to_peak(trace, quiet_window_s.first, quiet_window_s.second);
    const double sigma = stddev(trace, quiet_window_s.first, quiet_window_s.second);
    if (!(sigma > 0.0)) throw std::invalid_argument("snr: quiet window has zero deviation");
    SnrReport r;
    r.snr_avg = p2p / sigma;
    r.snr_single = r.snr_avg / std::sqrt(static_cast<double>(n_avg));
    r.detected = (p2p - p2p_quiet) / sigma >= detection_threshold;
    return r;
}

/// SNR of a matched-filter score trace. The detection statistic for a score
/// is its peak excursion from the quiet-section mean over the quiet-section
/// sigma: a correlation score concentrates the signal in one aligned peak,
/// and a peak-to-peak reading would add the (negative) autocorrelation
/// sidelobe of the bipolar signature on top of it.
inline SnrReport matched_filter_snr(const TimeTrace& score,
                                    std::pair<double, double> signal_window_s,
                                    std::pair<double, double> quiet_window_s,
                                    std::size_t n_avg) {
    if (n_avg == 0) throw std::invalid_argument("matched_filter_snr: n_avg must be >= 1");
    const double mu = mean(score, quiet_window_s.first, quiet_window_s.second);
    const double sigma = stddev(score, quiet_window_s.first, quiet_window_s.second);
    if (!(sigma > 0.0))
        throw std::invalid_argument("matched_filter_snr: quiet window has zero deviation");
    const auto peak_abs = [&](std::pair<double, double> win) {
        const auto w = window_indices(score, win.first, win.second);
        double peak = 0.0;
        for (std::size_t i = w.first; i < w.last; ++i)
            peak = std::max(peak, std::fabs(score.samples[i] - mu));
        return peak;
    };
    const double peak_sig = peak_abs(signal_window_s);
    const double peak_quiet = peak_abs(quiet_window_s);
    SnrReport r;
    r.snr_avg = peak_sig / sigma;
    r.snr_single = r.snr_avg / std::sqrt(static_cast<double>(n_avg));
    r.detected = (peak_sig - peak_quiet) / sigma >= detection_threshold;
    return r;
}

/// Test-tone time-domain estimator (see banner; reports the full baseband
/// density, sqrt(2) above the in-phase sensitivity).
inline double sensitivity_method1(const std::vector<TimeTrace>& traces, double b_rms_test,
                                  double f_test_hz) {
    if (traces.size() < 2) throw std::invalid_argument("sensitivity_method1: need >= 2 trials");
    if (!(b_rms_test > 0.0) || !(f_test_hz > 0.0))
        throw std::invalid_argument("sensitivity_method1: tone parameters must be > 0");
    std::vector<double> x;
    x.reserve(traces.size());
    for (const auto& tr : traces) {
        tr.require_unit(TraceUnit::tesla, "sensitivity_method1");
        const double dt = tr.dt();
        double acc = 0.0;
        for (std::size_t i = 0; i < tr.size(); ++i)
            acc += tr.samples[i] * std::sqrt(2.0) * b_rms_test *
                   std::sin(2.0 * constants::pi * f_test_hz * static_cast<double>(i) * dt);
        x.push_back(acc / tr.duration());
    }
    const double n = static_cast<double>(x.size());
    double mu = 0.0;
    for (double v : x) mu += v;
    mu /= n;
    double var = 0.0;
    for (double v : x) var += (v - mu) * (v - mu);
    var /= (n - 1.0);
    // The tone projection must be significant (and in phase) or the division
    // by its mean is meaningless.
    if (!(mu > 3.0 * std::sqrt(var / n)))
        throw std::invalid_argument("sensitivity_method1: no test tone found in the data");
    return b_rms_test * std::sqrt(2.0) / mu * std::sqrt(var) *
           std::sqrt(traces.front().duration());
}

/// Test-tone frequency-domain estimator: calibrated band-average ASD (see
/// banner for the sqrt(2)).
inline double sensitivity_method2(const std::vector<TimeTrace>& traces, double b_rms_test,
                                  double f_test_hz, std::pair<double, double> band_hz) {
    if (traces.empty()) throw std::invalid_argument("sensitivity_method2: no trials");
    if (!(b_rms_test > 0.0)) throw std::invalid_argument("sensitivity_method2: b_test must be > 0");
    const std::size_t n = traces.front().size();
    const double fs = traces.front().sample_rate_hz;
    if (!(band_hz.first < band_hz.second) || band_hz.first <= 0.0 ||
        band_hz.second >= fs / 2.0)
        throw std::invalid_argument("sensitivity_method2: band must be ordered, inside Nyquist");
    if (f_test_hz >= band_hz.first && f_test_hz <= band_hz.second)
        throw std::invalid_argument("sensitivity_method2: band must exclude the test tone");
    const double t_trial = static_cast<double>(n) / fs;
    const double df = 1.0 / t_trial;
    const auto k_test = static_cast<std::size_t>(std::llround(f_test_hz * t_trial));
    const auto k_lo = static_cast<std::size_t>(std::ceil(band_hz.first * t_trial));
    const auto k_hi = static_cast<std::size_t>(std::floor(band_hz.second * t_trial));
    if (k_test == 0 || k_test >= n / 2 || k_lo > k_hi)
        throw std::invalid_argument("sensitivity_method2: degenerate bin layout");

    FourierPlan plan(n);
    double eta2_sq = 0.0;
    for (const auto& tr : traces) {
        tr.require_unit(TraceUnit::tesla, "sensitivity_method2");
        if (tr.size() != n)
            throw std::invalid_argument("sensitivity_method2: trials must share length");
        const auto spec = fft_real(tr.samples, plan);
        const double tone = std::abs(spec[k_test]);
        if (!(tone > 0.0))
            throw std::invalid_argument("sensitivity_method2: no test tone found in the data");
        double band_sq = 0.0;
        for (std::size_t k = k_lo; k <= k_hi; ++k) {
            const double c = b_rms_test * std::abs(spec[k]) / tone; // calibrated amplitude
            band_sq += c * c;
        }
        band_sq /= static_cast<double>(k_hi - k_lo + 1);
        eta2_sq += band_sq / df / 2.0; // ASD^2, in-phase quadrature only
    }
    return std::sqrt(eta2_sq / static_cast<double>(traces.size()));
}

/// No-test-field estimator: per-trial RMS over sqrt(2 f_ENBW), averaged.
inline double sensitivity_method3(const std::vector<TimeTrace>& traces, double f_enbw_hz) {
    if (traces.empty()) throw std::invalid_argument("sensitivity_method3: no trials");
    if (!(f_enbw_hz > 0.0)) throw std::invalid_argument("sensitivity_method3: f_enbw must be > 0");
    double acc = 0.0;
    for (const auto& tr : traces) {
        tr.require_unit(TraceUnit::tesla, "sensitivity_method3");
        acc += rms(tr) / std::sqrt(2.0 * f_enbw_hz);
    }
    return acc / static_cast<double>(traces.size());
}

/// Exponent p of y = c * x^p by least squares on log-log coordinates.
inline double fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_power_law: need >= 2 points, equal sizes");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw std::invalid_argument("fit_power_law: coordinates must be > 0");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double m = static_cast<double>(x.size());
    const double det = m * sxx - sx * sx;
    if (std::fabs(det) < 1e-300) throw std::invalid_argument("fit_power_law: degenerate x values");
    return (m * sxy - sx * sy) / det;
}

/// Sensitivity estimates plus the analytic budget they are compared with.
struct SensitivityReport {
    double eta1 = 0.0;          ///< method 1 verbatim (full baseband density)
    double eta1_in_phase = 0.0; ///< eta1/sqrt(2), comparable with eta2/eta3
    double eta2 = 0.0;
    double eta3 = 0.0;
    std::size_t n_trials = 0;
    double t_trial_s = 0.0;
    std::pair<double, double> band_hz{0.0, 0.0};
    // analytic attachments
    double theory_shot = 0.0;      ///< bare shot limit
    double theory_optimized = 0.0; ///< with reference/slope penalties
    double theory_full = 0.0;      ///< all penalty factors
    double theory_quantum = 0.0;   ///< spin-projection limit
};

} // namespace apmag
