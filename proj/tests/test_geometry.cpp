// Sensor-axis geometry: tetrahedral axes, projection factors, the bias
// construction that overlaps the two probed lines, and the Zeeman map.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "apmag/constants.hpp"
#include "apmag/nv_geometry.hpp"

using namespace apmag;
using Catch::Approx;

TEST_CASE("axes are unit length at the tetrahedral angle", "[geometry]") {
    const NvAxes axes = NvAxes::standard();
    for (const auto& a : axes.axis) REQUIRE(norm(a) == Approx(1.0).epsilon(1e-15));
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            REQUIRE(dot(axes.axis[i], axes.axis[j]) == Approx(-1.0 / 3.0).epsilon(1e-14));
    REQUIRE(tetrahedral_angle() * 180.0 / constants::pi == Approx(109.47122063449069));
}

TEST_CASE("two-axis projection factor", "[geometry]") {
    REQUIRE(two_axis_angle_factor() == Approx(0.816496580927726).epsilon(1e-14));
    REQUIRE(two_axis_angle_factor() == Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-14));
    REQUIRE(two_axis_angle_factor() ==
            Approx(std::cos(constants::pi / 2.0 - tetrahedral_angle() / 2.0)).epsilon(1e-14));
}

TEST_CASE("a field along +x addresses only the sensing pair", "[geometry]") {
    const NvAxes axes = NvAxes::standard();
    const double s = two_axis_angle_factor();
    const auto p = project_field(axes, Vec3{1e-6, 0.0, 0.0});
    REQUIRE(p[NvAxes::sensing_a] == Approx(s * 1e-6).epsilon(1e-14));
    REQUIRE(p[NvAxes::sensing_b] == Approx(-s * 1e-6).epsilon(1e-14));
    REQUIRE(p[1] == Approx(0.0).margin(1e-20));
    REQUIRE(p[2] == Approx(0.0).margin(1e-20));
    REQUIRE_THROWS_AS(project_field(axes, Vec3{std::nan(""), 0.0, 0.0}),
                      std::invalid_argument);
}

TEST_CASE("bias overlaps the probed lines and a source field moves them together",
          "[geometry]") {
    const NvAxes axes = NvAxes::standard();
    const double b_proj = 7e-4; // ~7 G on each sensing axis
    const Vec3 bias = make_bias_field(b_proj);
    const auto p0 = project_field(axes, bias);
    REQUIRE(p0[NvAxes::sensing_a] == Approx(b_proj).epsilon(1e-14));
    REQUIRE(p0[NvAxes::sensing_b] == Approx(-b_proj).epsilon(1e-14));

    // Equal magnitudes -> the probed resonances coincide.
    const double wa = zeeman_resonance(std::fabs(p0[NvAxes::sensing_a]));
    const double wb = zeeman_resonance(std::fabs(p0[NvAxes::sensing_b]));
    REQUIRE(wa == Approx(wb).epsilon(1e-15));

    // Add a source field along +x: both magnitudes move by the same +s*b.
    const double b_src = 5e-9;
    const Vec3 total{bias[0] + b_src, bias[1], bias[2]};
    const auto p1 = project_field(axes, total);
    const double da = std::fabs(p1[NvAxes::sensing_a]) - std::fabs(p0[NvAxes::sensing_a]);
    const double db = std::fabs(p1[NvAxes::sensing_b]) - std::fabs(p0[NvAxes::sensing_b]);
    REQUIRE(da == Approx(two_axis_angle_factor() * b_src).epsilon(1e-9));
    REQUIRE(db == Approx(two_axis_angle_factor() * b_src).epsilon(1e-9));
}

TEST_CASE("Zeeman map is linear, signed, and domain-checked", "[geometry]") {
    // 7 G projection: the operating point's resonance in the upper branch.
    REQUIRE(zeeman_resonance(7e-4) / constants::two_pi ==
            Approx(2.8896190298349382e9).epsilon(1e-12));
    REQUIRE(zeeman_resonance(0.0) == Approx(constants::two_pi * 2.87e9));
    // Signed: negative projection lowers the m_s = +1 branch.
    REQUIRE(zeeman_resonance(-7e-4) < zeeman_resonance(0.0));
    REQUIRE(zeeman_resonance(1e-4) - zeeman_resonance(0.0) ==
            Approx(constants::gamma_e * 1e-4).epsilon(1e-12));
    REQUIRE_THROWS_AS(zeeman_resonance(0.02), std::domain_error);
    REQUIRE_THROWS_AS(zeeman_resonance(-0.02), std::domain_error);
}
