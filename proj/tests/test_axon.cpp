// Conducting-wire axon source: scaling constant, synthesized AP pulse,
// field consequences (bipolarity, direction, taper, standoff), and the
// small-caliber estimates.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "apmag/neuro_source.hpp"

using namespace apmag;
using Catch::Approx;

TEST_CASE("field-per-voltage-slope scaling constant", "[axon]") {
    AxonParams p; // 200 um radius, 300 um standoff, 1.47 S/m, 9 m/s
    REQUIRE(scaling_constant(p) == Approx(13.683381335635545e-12).epsilon(1e-12));
    AxonParams bad = p;
    bad.rho = 0.5 * p.r_a; // field point inside the wire
    REQUIRE_THROWS_AS(bad.validate(), std::domain_error);
}

TEST_CASE("synthesized AP hits its peak exactly and settles", "[axon]") {
    ApTemplate t;
    const double fs = 250e3;
    const TimeTrace phi = synth_ap_waveform(t, fs);
    REQUIRE(phi.unit == TraceUnit::volt_intracellular);
    REQUIRE(phi.size() == 1500);

    double peak = -1.0;
    for (double v : phi.samples) peak = std::max(peak, v);
    REQUIRE(peak == Approx(t.resting_potential + t.peak_amplitude).epsilon(1e-14));
    // Starts and ends at rest.
    REQUIRE(std::fabs(phi.samples.front() - t.resting_potential) < 0.01 * t.peak_amplitude);
    REQUIRE(std::fabs(phi.samples.back() - t.resting_potential) < 0.01 * t.peak_amplitude);
    // No undershoot by default.
    double low = 1.0;
    for (double v : phi.samples) low = std::min(low, v);
    REQUIRE(low >= t.resting_potential - 1e-12);

    // With an AHP lobe the trace dips below rest by the requested fraction.
    ApTemplate u = t;
    u.undershoot_fraction = 0.2;
    const TimeTrace phi_u = synth_ap_waveform(u, fs);
    double low_u = 1.0;
    for (double v : phi_u.samples) low_u = std::min(low_u, v);
    REQUIRE(low_u < u.resting_potential - 0.1 * u.undershoot_fraction * u.peak_amplitude);

    ApTemplate bad = t;
    bad.duration = 3.0 * (t.rise_time + t.fall_time);
    REQUIRE_THROWS_AS(bad.validate(), std::domain_error);
}

TEST_CASE("AP field is bipolar with zero area and peaks on the rising edge", "[axon]") {
    AxonParams p;
    ApTemplate t;
    const double fs = 250e3;
    const TimeTrace phi = synth_ap_waveform(t, fs);
    const TimeTrace b = ap_field_from_voltage(phi, p);
    REQUIRE(b.unit == TraceUnit::tesla);

    double bmax = -1e300, bmin = 1e300, area = 0.0;
    std::size_t arg_bmax = 0, arg_phimax = 0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (b.samples[i] > bmax) {
            bmax = b.samples[i];
            arg_bmax = i;
        }
        bmin = std::min(bmin, b.samples[i]);
        area += b.samples[i] / fs;
        if (phi.samples[i] > phi.samples[arg_phimax]) arg_phimax = i;
    }
    REQUIRE(bmax > 0.0);
    REQUIRE(bmin < 0.0);
    // Area = s * (phi_end - phi_start) ~ 0 for a settled pulse.
    REQUIRE(std::fabs(area) < 1e-3 * bmax * t.duration);
    // The field peaks where dPhi/dt peaks: before the voltage maximum.
    REQUIRE(arg_bmax < arg_phimax);

    // Retrograde propagation is an exact sign flip.
    AxonParams r = p;
    r.direction = Direction::retrograde;
    const TimeTrace br = ap_field_from_voltage(phi, r);
    for (std::size_t i = 0; i < b.size(); ++i) REQUIRE(br.samples[i] == -b.samples[i]);
}

TEST_CASE("taper pair: sign inversion and 1/v amplitude ratio", "[axon]") {
    AxonParams base;
    const TimeTrace phi = synth_ap_waveform(ApTemplate{}, 250e3);

    // Equal velocities: the two traces are exact negations.
    auto [same_post, same_ant] = taper_scenario(9.0, 9.0, base, phi);
    for (std::size_t i = 0; i < same_post.size(); ++i)
        REQUIRE(same_ant.samples[i] == -same_post.samples[i]);

    // Velocity ratio 0.6: amplitudes scale as 1/v.
    auto [post, ant] = taper_scenario(0.6 * 9.0, 9.0, base, phi);
    double p2p_post = 0.0, p2p_ant = 0.0, lo_post = 0.0, lo_ant = 0.0;
    for (std::size_t i = 0; i < post.size(); ++i) {
        p2p_post = std::max(p2p_post, post.samples[i]);
        lo_post = std::min(lo_post, post.samples[i]);
        p2p_ant = std::max(p2p_ant, ant.samples[i]);
        lo_ant = std::min(lo_ant, ant.samples[i]);
    }
    REQUIRE((p2p_post - lo_post) / (p2p_ant - lo_ant) == Approx(1.0 / 0.6).epsilon(1e-9));
    REQUIRE_THROWS_AS(taper_scenario(9.0, 5.0, base, phi), std::domain_error);
}

TEST_CASE("standoff rescaling and small-caliber estimates", "[axon]") {
    REQUIRE(standoff_scaling(300e-6, 1.2e-3) == Approx(4.0));
    REQUIRE(purkinje_estimate(1e-6) == Approx(0.5623199522513442e-9).epsilon(1e-12));
    REQUIRE(purkinje_estimate(2e-6) == Approx(1.1246399045026885e-9).epsilon(1e-12));
    REQUIRE(purkinje_estimate(3e-6) == Approx(1.686959856754033e-9).epsilon(1e-12));
}

TEST_CASE("two-point conduction velocity with sign", "[axon]") {
    REQUIRE(conduction_velocity_two_point(1e-3, 2e-3, 9e-3) == Approx(9.0));
    REQUIRE(conduction_velocity_two_point(2e-3, 1e-3, 9e-3) == Approx(-9.0));
    REQUIRE_THROWS_AS(conduction_velocity_two_point(1e-3, 1e-3, 9e-3), std::domain_error);
}
