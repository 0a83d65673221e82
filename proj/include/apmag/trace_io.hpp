#pragma once
/*
================================================================================
 trace_io.hpp — text serialization of time traces
--------------------------------------------------------------------------------
 FORMAT
   Three comment header lines followed by two whitespace-delimited columns:

     # name: <label>
     # unit: tesla|volt|volt_intracellular|dimensionless
     # sample_rate_hz: <rate>
     <time_seconds> <value>
     ...

   Values are printed with 17 significant digits so a write/read round trip
   is bit-exact for IEEE doubles.
================================================================================
*/
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "apmag/trace.hpp"

namespace apmag {

/// Serialize a trace (see banner format).
inline void write_trace(std::ostream& os, const TimeTrace& trace, const std::string& name) {
    os << "# name: " << name << '\n';
    os << "# unit: " << to_string(trace.unit) << '\n';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", trace.sample_rate_hz);
    os << "# sample_rate_hz: " << buf << '\n';
    for (std::size_t i = 0; i < trace.size(); ++i) {
        char line[160];
        std::snprintf(line, sizeof line, "%.17g %.17g\n",
                      static_cast<double>(i) / trace.sample_rate_hz, trace.samples[i]);
        os << line;
    }
}

inline void save_trace(const std::string& path, const TimeTrace& trace,
                       const std::string& name) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_trace: cannot open " + path);
    write_trace(os, trace, name);
    if (!os) throw std::runtime_error("save_trace: write failed for " + path);
}

/// Parse a trace; the stored name comes back through *name when requested.
inline TimeTrace read_trace(std::istream& is, std::string* name = nullptr) {
    std::string line;
    std::string unit_str;
    double rate = 0.0;
    for (int h = 0; h < 3; ++h) {
        if (!std::getline(is, line)) throw std::runtime_error("read_trace: truncated header");
        const auto colon = line.find(':');
        if (line.empty() || line[0] != '#' || colon == std::string::npos)
            throw std::runtime_error("read_trace: malformed header line: " + line);
        const std::string key = line.substr(1, colon - 1);
        std::string value = line.substr(colon + 1);
        const auto start = value.find_first_not_of(" \t");
        value = (start == std::string::npos) ? std::string{} : value.substr(start);
        if (key.find("name") != std::string::npos) {
            if (name != nullptr) *name = value;
        } else if (key.find("unit") != std::string::npos) {
            unit_str = value;
        } else if (key.find("sample_rate_hz") != std::string::npos) {
            rate = std::stod(value);
        } else {
            throw std::runtime_error("read_trace: unknown header key: " + key);
        }
    }
    if (!(rate > 0.0)) throw std::runtime_error("read_trace: missing sample rate");
    std::vector<double> samples;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        double t = 0.0, v = 0.0;
        if (!(ls >> t >> v)) throw std::runtime_error("read_trace: bad data line: " + line);
        samples.push_back(v);
    }
    TimeTrace trace(rate, trace_unit_from_string(unit_str), samples.size());
    trace.samples = std::move(samples);
    return trace;
}

inline TimeTrace load_trace(const std::string& path, std::string* name = nullptr) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_trace: cannot open " + path);
    return read_trace(is, name);
}

} // namespace apmag
