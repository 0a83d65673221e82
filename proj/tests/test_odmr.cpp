// Lineshapes and the lock-in dispersion: Lorentzian dip geometry, hyperfine
// triplet, three-tone contrast tripling, dispersion zero crossing and its
// optimal deviation, small-signal linearization.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "apmag/constants.hpp"
#include "apmag/odmr.hpp"

using namespace apmag;
using Catch::Approx;

namespace {

/// Count strict local minima of f on a uniform grid over [w0 - span, w0 + span].
template <typename F>
int count_local_minima(const F& f, double w0, double span, int n = 20001) {
    std::vector<double> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double w = w0 + span * (2.0 * i / (n - 1.0) - 1.0);
        y[static_cast<std::size_t>(i)] = f(w);
    }
    int minima = 0;
    for (int i = 1; i + 1 < n; ++i)
        if (y[static_cast<std::size_t>(i)] < y[static_cast<std::size_t>(i - 1)] &&
            y[static_cast<std::size_t>(i)] < y[static_cast<std::size_t>(i + 1)])
            ++minima;
    return minima;
}

} // namespace

TEST_CASE("Lorentzian dip geometry", "[odmr]") {
    OdmrParams p;
    REQUIRE(lorentzian_fluorescence(p, p.f0_rad) == Approx(1.0 - p.contrast));
    // Half depth at half width from center.
    REQUIRE(lorentzian_fluorescence(p, p.f0_rad + 0.5 * p.linewidth_rad) ==
            Approx(1.0 - 0.5 * p.contrast));
    // Far off resonance the baseline returns.
    REQUIRE(lorentzian_fluorescence(p, p.f0_rad + 100.0 * p.linewidth_rad) ==
            Approx(1.0).epsilon(1e-4));
    REQUIRE_THROWS_AS(lorentzian_fluorescence(p, std::nan("")), std::domain_error);

    OdmrParams bad = p;
    bad.contrast = 1.5;
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("hyperfine triplet has three resolved dips", "[odmr]") {
    OdmrParams p; // 1 MHz linewidth vs 2.16 MHz splitting: resolved
    const auto f = [&](double w) { return hyperfine_fluorescence(p, w); };
    REQUIRE(count_local_minima(f, p.f0_rad, 3.0 * p.hf_splitting_rad) == 3);
    // Symmetric about the center.
    const double d = 1.3 * p.hf_splitting_rad;
    REQUIRE(hyperfine_fluorescence(p, p.f0_rad + d) ==
            Approx(hyperfine_fluorescence(p, p.f0_rad - d)).epsilon(1e-12));
}

TEST_CASE("three-tone drive triples the central contrast with five minima", "[odmr]") {
    OdmrParams p;
    const double dip = 1.0 - three_tone_fluorescence(p, p.f0_rad);
    // Central dip reads ~3C: each drive tone hits its own line, and the
    // Lorentzian wings of the 4+2 cross pairs (one/two splittings away) add
    // a small overlap on top at this linewidth-to-splitting ratio.
    REQUIRE(dip > 3.0 * p.contrast);
    REQUIRE(dip < 3.3 * p.contrast);
    const auto f = [&](double w) { return three_tone_fluorescence(p, w); };
    REQUIRE(count_local_minima(f, p.f0_rad, 4.0 * p.hf_splitting_rad) == 5);
}

TEST_CASE("dispersion crosses zero at the resonance with odd symmetry", "[odmr]") {
    OdmrParams p;
    const double wdev = optimal_deviation(p.linewidth_rad);
    REQUIRE(lia_dispersion(p, p.f0_rad, wdev) == Approx(0.0).margin(1e-15));
    const double d = 0.3 * p.linewidth_rad;
    REQUIRE(lia_dispersion(p, p.f0_rad + d, wdev) ==
            Approx(-lia_dispersion(p, p.f0_rad - d, wdev)).epsilon(1e-12));
    // Positive slope through the crossing.
    REQUIRE(lia_dispersion(p, p.f0_rad + d, wdev) > 0.0);
    REQUIRE(dispersion_slope(p, wdev) > 0.0);
    // Same convention for the three-tone mode.
    REQUIRE(lia_dispersion(p, p.f0_rad + d, wdev, DispersionMode::three_tone) > 0.0);
    REQUIRE_THROWS_AS(lia_dispersion(p, p.f0_rad, 0.0), std::invalid_argument);
}

TEST_CASE("numeric slope maximum sits at linewidth/(2*sqrt(3))", "[odmr]") {
    OdmrParams p;
    // Coarse scan plus parabolic refinement around the best grid point.
    double best_w = 0.0, best_s = -1.0;
    const double lo = 0.05 * p.linewidth_rad, hi = 1.5 * p.linewidth_rad;
    const int n = 4000;
    for (int i = 0; i <= n; ++i) {
        const double w = lo + (hi - lo) * i / n;
        const double s = dispersion_slope(p, w);
        if (s > best_s) {
            best_s = s;
            best_w = w;
        }
    }
    const double h = (hi - lo) / n;
    const double sm = dispersion_slope(p, best_w - h);
    const double sp = dispersion_slope(p, best_w + h);
    const double refined = best_w + 0.5 * h * (sm - sp) / (sm - 2.0 * best_s + sp);
    REQUIRE(refined == Approx(optimal_deviation(p.linewidth_rad)).epsilon(1e-3));
}

TEST_CASE("small-signal gain linearizes the field response", "[odmr]") {
    OdmrParams p;
    const double wdev = optimal_deviation(p.linewidth_rad);
    const double b = 100e-9; // well inside the linear range
    // A field shifts the resonance up by gamma*b while the carrier stays put.
    OdmrParams shifted = p;
    shifted.f0_rad = p.f0_rad + constants::gamma_e * b;
    const double v = lia_dispersion(shifted, p.f0_rad, wdev);
    REQUIRE(v == Approx(small_signal_gain(p) * b).epsilon(1e-3));
    REQUIRE(small_signal_gain(p) < 0.0);
    // Analytic coefficient matches the numeric slope at the optimum.
    REQUIRE(small_signal_gain(p) ==
            Approx(-constants::gamma_e * dispersion_slope(p, wdev)).epsilon(1e-6));
}
