#pragma once
/*
================================================================================
 trace.hpp — uniformly sampled time series with a physical unit tag
--------------------------------------------------------------------------------
 TimeTrace is the common currency between the source model (intracellular
 volts), the sensor chain (tesla in, lock-in volts out) and the analysis layer
 (tesla after calibration). Every operation that consumes a trace checks the
 unit tag, so a volts trace cannot silently flow into a tesla-only routine.

 Windows are expressed in seconds relative to the first sample; helpers
 convert to sample indices with inclusive start / exclusive end semantics.
================================================================================
*/
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace apmag {

/// Physical unit carried by a TimeTrace.
enum class TraceUnit {
    tesla,               ///< magnetic field at the sensor
    volt,                ///< lock-in output voltage
    volt_intracellular,  ///< membrane potential of the source
    dimensionless        ///< filter outputs, matched-filter scores, ...
};

inline const char* to_string(TraceUnit u) {
    switch (u) {
        case TraceUnit::tesla: return "tesla";
        case TraceUnit::volt: return "volt";
        case TraceUnit::volt_intracellular: return "volt_intracellular";
        case TraceUnit::dimensionless: return "dimensionless";
    }
    return "unknown";
}

inline TraceUnit trace_unit_from_string(const std::string& s) {
    if (s == "tesla") return TraceUnit::tesla;
    if (s == "volt") return TraceUnit::volt;
    if (s == "volt_intracellular") return TraceUnit::volt_intracellular;
    if (s == "dimensionless") return TraceUnit::dimensionless;
    throw std::invalid_argument("unknown trace unit: " + s);
}

/// Uniformly sampled time series. First sample is at t = 0.
struct TimeTrace {
    double sample_rate_hz = 0.0;
    TraceUnit unit = TraceUnit::dimensionless;
    std::vector<double> samples;

    TimeTrace() = default;
    TimeTrace(double fs, TraceUnit u, std::size_t n = 0)
        : sample_rate_hz(fs), unit(u), samples(n, 0.0) {
        if (!(fs > 0.0) || !std::isfinite(fs))
            throw std::invalid_argument("TimeTrace: sample rate must be positive and finite");
    }

    std::size_t size() const { return samples.size(); }
    double dt() const { return 1.0 / sample_rate_hz; }
    double duration() const { return static_cast<double>(samples.size()) / sample_rate_hz; }

    /// Index of the sample at (or just after) time t [s]; throws if outside.
    std::size_t index_at(double t) const {
        if (!(t >= 0.0) || t > duration())
            throw std::invalid_argument("TimeTrace: time outside trace");
        const auto i = static_cast<std::size_t>(std::llround(t * sample_rate_hz));
        return std::min(i, samples.size());
    }

    void require_unit(TraceUnit u, const char* where) const {
        if (unit != u)
            throw std::invalid_argument(std::string(where) + ": expected trace unit " +
                                        to_string(u) + ", got " + to_string(unit));
    }
};

/// Half-open sample range [first, last) derived from a time window.
struct SampleWindow {
    std::size_t first = 0;
    std::size_t last = 0;
    std::size_t count() const { return last - first; }
};

inline SampleWindow window_indices(const TimeTrace& tr, double t0, double t1) {
    if (!(t1 > t0)) throw std::invalid_argument("window: t1 must exceed t0");
    SampleWindow w{tr.index_at(t0), tr.index_at(t1)};
    if (w.count() < 2) throw std::invalid_argument("window: fewer than two samples");
    return w;
}

inline double mean(const TimeTrace& tr, double t0, double t1) {
    const auto w = window_indices(tr, t0, t1);
    double s = std::accumulate(tr.samples.begin() + static_cast<long>(w.first),
                               tr.samples.begin() + static_cast<long>(w.last), 0.0);
    return s / static_cast<double>(w.count());
}

inline double rms(const TimeTrace& tr, double t0, double t1) {
    const auto w = window_indices(tr, t0, t1);
    double s = 0.0;
    for (std::size_t i = w.first; i < w.last; ++i) s += tr.samples[i] * tr.samples[i];
    return std::sqrt(s / static_cast<double>(w.count()));
}

inline double rms(const TimeTrace& tr) { return rms(tr, 0.0, tr.duration()); }

/// Standard deviation about the window mean.
inline double stddev(const TimeTrace& tr, double t0, double t1) {
    const auto w = window_indices(tr, t0, t1);
    const double m = mean(tr, t0, t1);
    double s = 0.0;
    for (std::size_t i = w.first; i < w.last; ++i) {
        const double d = tr.samples[i] - m;
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(w.count()));
}

inline double peak_to_peak(const TimeTrace& tr, double t0, double t1) {
    const auto w = window_indices(tr, t0, t1);
    auto first = tr.samples.begin() + static_cast<long>(w.first);
    auto last = tr.samples.begin() + static_cast<long>(w.last);
    auto [mn, mx] = std::minmax_element(first, last);
    return *mx - *mn;
}

/// Time of the extremum with the largest magnitude inside the window.
inline double argmax_abs_time(const TimeTrace& tr, double t0, double t1) {
    const auto w = window_indices(tr, t0, t1);
    std::size_t best = w.first;
    for (std::size_t i = w.first; i < w.last; ++i)
        if (std::fabs(tr.samples[i]) > std::fabs(tr.samples[best])) best = i;
    return static_cast<double>(best) / tr.sample_rate_hz;
}

} // namespace apmag
