#pragma once
/*
================================================================================
 nv_geometry.hpp — NV symmetry axes, field projections, Zeeman shifts
--------------------------------------------------------------------------------
 GEOMETRY
   Nitrogen-vacancy centers occur along the four <111> body diagonals of the
   diamond lattice, mutually separated by theta_tet = acos(-1/3) = 109.4712
   degrees. The lab frame used throughout:

     +z : diamond top-face normal, crystal [001]
     +y : source (axon) direction, crystal [-110]/sqrt(2)
     +x : in-plane, perpendicular to the source, crystal [110]/sqrt(2)

   In this frame the four unit axes are

     axis0 = ( s, 0,  c)      axis1 = (0, -s, -c)
     axis2 = ( 0, s, -c)      axis3 = (-s, 0,  c)

   with s = sqrt(2/3) = 0.8165 and c = sqrt(1/3). Axes 0 and 3 lie in the
   x-z plane perpendicular to the source: these are the two *sensing* axes.
   A field along +x (the direction of the source's magnetic field at the
   sensor) projects with +s and -s onto the sensing pair and with 0 onto the
   other pair.

   The bias field is applied along +x as well, giving projections +-b_proj
   on the sensing pair (and zero on the other two axes, parking their lines
   at the zero-field frequency). Because the resonance pair of each axis
   splits by +-gamma*|projection|, equal MAGNITUDES mean the two probed
   lines overlap exactly, doubling the effective contrast; and a source
   field b along +x changes both magnitudes by the same +s*b, so the
   overlapped line moves rigidly instead of splitting. The per-axis
   projection factor s = cos(pi/2 - theta_tet/2) = 0.8165 is exposed as
   two_axis_angle_factor().

 ZEEMAN SHIFT
   A static projection b along an NV axis splits the m_s = +-1 resonances
   symmetrically; the m_s = +1 branch sits at

     omega = 2*pi*f_zfs + gamma_e*b     [rad/s],  f_zfs = 2.87 GHz,

   linear in the signed projection (the m_s = -1 branch mirrors it).
================================================================================
*/
#include <array>
#include <cmath>
#include <stdexcept>

#include "apmag/constants.hpp"

namespace apmag {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// The four NV symmetry axes in the lab frame described above.
struct NvAxes {
    std::array<Vec3, 4> axis;

    /// Indices of the two axes whose bisector is the +z normal and which lie
    /// in the plane perpendicular to the source: the sensing pair.
    static constexpr int sensing_a = 0;
    static constexpr int sensing_b = 3;

    static NvAxes standard() {
        const double s = std::sqrt(2.0 / 3.0);
        const double c = std::sqrt(1.0 / 3.0);
        return NvAxes{{Vec3{s, 0.0, c}, Vec3{0.0, -s, -c}, Vec3{0.0, s, -c}, Vec3{-s, 0.0, c}}};
    }
};

/// Tetrahedral angle between any two NV axes [rad]: acos(-1/3).
inline double tetrahedral_angle() { return std::acos(-1.0 / 3.0); }

/// Projection factor between a lab field perpendicular to the source and a
/// sensing axis: cos(pi/2 - theta_tet/2) = sqrt(2/3) = 0.8165.
inline double two_axis_angle_factor() {
    return std::cos(constants::pi / 2.0 - tetrahedral_angle() / 2.0);
}

/// Signed projections of a lab-frame field onto the four axes [T].
inline std::array<double, 4> project_field(const NvAxes& axes, const Vec3& b_lab) {
    for (double v : b_lab)
        if (!std::isfinite(v)) throw std::invalid_argument("project_field: non-finite field");
    std::array<double, 4> p{};
    for (int i = 0; i < 4; ++i) p[i] = dot(axes.axis[i], b_lab);
    return p;
}

/// Bias field giving projections of equal magnitude b_proj on both sensing
/// axes (+b_proj on axis 0, -b_proj on axis 3) and zero on the other pair:
/// a field of magnitude b_proj/sqrt(2/3) along +x. Source fields along +x
/// then shift both overlapped resonances together (see banner).
inline Vec3 make_bias_field(double b_proj) {
    if (!std::isfinite(b_proj)) throw std::invalid_argument("make_bias_field: non-finite value");
    return Vec3{b_proj / two_axis_angle_factor(), 0.0, 0.0};
}

/// m_s = +1 ODMR resonance [rad/s] for a signed axis projection b [T],
/// linear Zeeman regime only (|b| < 10 mT).
inline double zeeman_resonance(double b_proj_tesla) {
    if (!std::isfinite(b_proj_tesla))
        throw std::invalid_argument("zeeman_resonance: non-finite projection");
    if (!(std::fabs(b_proj_tesla) < 0.01))
        throw std::domain_error("zeeman_resonance: outside the linear Zeeman regime");
    return constants::two_pi * constants::nv_zero_field_hz + constants::gamma_e * b_proj_tesla;
}

} // namespace apmag
