// Core infrastructure: traces and window statistics, deterministic RNG,
// FFT plans (radix-2 and arbitrary length), trace serialization, reports.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "apmag/fft.hpp"
#include "apmag/report.hpp"
#include "apmag/rng.hpp"
#include "apmag/trace.hpp"
#include "apmag/trace_io.hpp"

using namespace apmag;
using Catch::Approx;

TEST_CASE("TimeTrace bookkeeping and unit enforcement", "[trace]") {
    TimeTrace tr(1000.0, TraceUnit::tesla, 500);
    REQUIRE(tr.size() == 500);
    REQUIRE(tr.dt() == Approx(1e-3));
    REQUIRE(tr.duration() == Approx(0.5));
    REQUIRE(tr.index_at(0.0) == 0);
    REQUIRE(tr.index_at(0.1) == 100);
    REQUIRE_THROWS_AS(tr.index_at(-0.1), std::invalid_argument);
    REQUIRE_THROWS_AS(tr.index_at(0.6), std::invalid_argument);
    REQUIRE_NOTHROW(tr.require_unit(TraceUnit::tesla, "test"));
    REQUIRE_THROWS_AS(tr.require_unit(TraceUnit::volt, "test"), std::invalid_argument);
    REQUIRE_THROWS_AS(TimeTrace(0.0, TraceUnit::volt, 4), std::invalid_argument);
}

TEST_CASE("window statistics on a known ramp", "[trace]") {
    TimeTrace tr(100.0, TraceUnit::dimensionless, 100);
    for (std::size_t i = 0; i < tr.size(); ++i) tr.samples[i] = static_cast<double>(i);

    // Window [0.10, 0.20) s -> samples 10..19.
    REQUIRE(mean(tr, 0.10, 0.20) == Approx(14.5));
    REQUIRE(peak_to_peak(tr, 0.10, 0.20) == Approx(9.0));
    const double expected_sigma = std::sqrt(33.0 / 4.0); // variance of 10 consecutive ints
    REQUIRE(stddev(tr, 0.10, 0.20) == Approx(expected_sigma));
    REQUIRE(rms(tr, 0.10, 0.20) ==
            Approx(std::sqrt(expected_sigma * expected_sigma + 14.5 * 14.5)));
    REQUIRE_THROWS_AS(window_indices(tr, 0.2, 0.1), std::invalid_argument);

    tr.samples[42] = -1000.0;
    REQUIRE(argmax_abs_time(tr, 0.0, 1.0) == Approx(0.42));
}

TEST_CASE("GaussianRng is deterministic with correct moments", "[rng]") {
    GaussianRng a(12345), b(12345), c(54321);
    bool same = true, differ = false;
    for (int i = 0; i < 64; ++i) {
        const double va = a();
        same = same && (va == b());
        differ = differ || (va != c());
    }
    REQUIRE(same);
    REQUIRE(differ);

    GaussianRng g(987654321);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = g();
        s += v;
        s2 += v * v;
    }
    REQUIRE(s / n == Approx(0.0).margin(0.01));
    REQUIRE(s2 / n == Approx(1.0).epsilon(0.01));
}

TEST_CASE("derive_seed separates streams", "[rng]") {
    REQUIRE(derive_seed(1, 0) != derive_seed(1, 1));
    REQUIRE(derive_seed(1, 0) != derive_seed(2, 0));
    REQUIRE(derive_seed(7, 3) == derive_seed(7, 3));
}

namespace {

std::vector<cplx> naive_dft(const std::vector<cplx>& x) {
    const std::size_t n = x.size();
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc(0.0, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = -constants::two_pi * static_cast<double>(j * k) /
                               static_cast<double>(n);
            acc += x[j] * cplx(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

} // namespace

TEST_CASE("FFT matches the direct DFT and inverts exactly", "[fft]") {
    for (std::size_t n : {8u, 17u, 250u, 256u}) {
        FourierPlan plan(n);
        GaussianRng g(n);
        std::vector<cplx> x(n);
        for (auto& v : x) v = cplx(g(), g());
        const auto ref = naive_dft(x);
        const auto got = plan.forward(x);
        double worst = 0.0;
        for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, std::abs(got[k] - ref[k]));
        REQUIRE(worst < 1e-9 * static_cast<double>(n));

        const auto back = plan.inverse(got);
        worst = 0.0;
        for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, std::abs(back[k] - x[k]));
        REQUIRE(worst < 1e-12 * static_cast<double>(n));
    }
}

TEST_CASE("FFT of a pure tone concentrates in the tone bins", "[fft]") {
    const std::size_t n = 1000; // exercises the Bluestein path
    const std::size_t k0 = 37;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = std::sin(constants::two_pi * static_cast<double>(k0 * i) / static_cast<double>(n));
    const auto spec = fft_real(x);
    REQUIRE(std::abs(spec[k0]) == Approx(static_cast<double>(n) / 2.0).epsilon(1e-9));
    REQUIRE(std::abs(spec[n - k0]) == Approx(static_cast<double>(n) / 2.0).epsilon(1e-9));
    double rest = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        if (k != k0 && k != n - k0) rest = std::max(rest, std::abs(spec[k]));
    REQUIRE(rest < 1e-9 * static_cast<double>(n));
}

TEST_CASE("trace serialization round-trips bit-exactly", "[trace_io]") {
    TimeTrace tr(250e3, TraceUnit::volt, 64);
    GaussianRng g(11);
    for (auto& v : tr.samples) v = 1e-7 * g();
    tr.samples[5] = -0.0;

    std::ostringstream os;
    write_trace(os, tr, "round trip probe");
    std::istringstream is(os.str());
    std::string name;
    const TimeTrace back = read_trace(is, &name);

    REQUIRE(name == "round trip probe");
    REQUIRE(back.unit == TraceUnit::volt);
    REQUIRE(back.sample_rate_hz == tr.sample_rate_hz);
    REQUIRE(back.size() == tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) REQUIRE(back.samples[i] == tr.samples[i]);
}

TEST_CASE("trace parser rejects malformed input", "[trace_io]") {
    std::istringstream missing("# name: x\n# unit: tesla\n");
    REQUIRE_THROWS_AS(read_trace(missing), std::runtime_error);
    std::istringstream bad_unit("# name: x\n# unit: parsec\n# sample_rate_hz: 10\n0 0\n");
    REQUIRE_THROWS_AS(read_trace(bad_unit), std::invalid_argument);
    std::istringstream bad_line("# name: x\n# unit: tesla\n# sample_rate_hz: 10\n0 zero\n");
    REQUIRE_THROWS_AS(read_trace(bad_line), std::runtime_error);
}

TEST_CASE("report rendering in both formats", "[report]") {
    Report rep;
    rep["run"]["name"] = "probe";
    rep["run"]["snr"] = 3.25;
    rep["flags"] = {true, false};

    const std::string text = render_report(rep, ReportFormat::text);
    REQUIRE(text.find("run:") != std::string::npos);
    REQUIRE(text.find("  name: probe") != std::string::npos);
    REQUIRE(text.find("  snr: 3.25") != std::string::npos);
    REQUIRE(text.find("- true") != std::string::npos);

    const std::string tree = render_report(rep, ReportFormat::json_tree);
    const Report parsed = Report::parse(tree);
    REQUIRE(parsed == rep);

    REQUIRE(report_format_from_string("text") == ReportFormat::text);
    REQUIRE(report_format_from_string("json-like-tree") == ReportFormat::json_tree);
    REQUIRE_THROWS_AS(report_format_from_string("yaml"), std::invalid_argument);
}
