/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#include "mmwchan/antenna.hpp"

#include <gtest/gtest.h>

using namespace mmwchan;

namespace {

cplx inner(const std::vector<cplx>& a, const std::vector<cplx>& b)
{
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += std::conj(a[i]) * b[i];
    return s;
}

} // namespace

TEST(Panel, ElementLocations)
{
    const AntennaPanel p{2, 3, 0.5, 0.7};
    const double lambda = 0.01;
    EXPECT_EQ(p.size(), 6u);
    EXPECT_EQ(element_location(0, p, lambda), (Vec3{0, 0, 0}));
    const Vec3 e4 = element_location(4, p, lambda);
    EXPECT_DOUBLE_EQ(e4.x, 0.0);
    EXPECT_DOUBLE_EQ(e4.y, 0.005);
    EXPECT_DOUBLE_EQ(e4.z, 0.007);
    EXPECT_THROW(element_location(6, p, lambda), std::out_of_range);
}

TEST(Panel, Validation)
{
    EXPECT_THROW((AntennaPanel{0, 4}.validate()), ConfigError);
    EXPECT_THROW((AntennaPanel{4, 4, -0.5}.validate()), ConfigError);
    AntennaPanel p{4, 4};
    p.fov = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Panel, ArrayResponseMatchesElementPositions)
{
    AntennaPanel p{4, 4, 0.5, 0.5, deg2rad(30.0)};
    const double theta = deg2rad(70.0);
    const double phi = deg2rad(50.0);
    const double lambda = 1.0;
    const auto a = array_response(p, theta, phi);
    // Direction in the panel frame, broadside along local +x.
    const Vec3 d = spherical_unit(theta, phi - p.orientation);
    for (std::size_t k = 0; k < p.size(); ++k)
    {
        const double arg = 2.0 * kPi * dot(element_location(k, p, lambda), d) / lambda;
        EXPECT_NEAR(std::arg(a[k] * std::polar(1.0, -arg)), 0.0, 1e-9) << k;
    }
}

TEST(Steering, UnitNormAndMatched)
{
    const AntennaPanel p{8, 8};
    const auto v = steering_vector(deg2rad(20.0), deg2rad(95.0), p);
    EXPECT_NEAR(v.norm(), 1.0, 1e-12);
    const auto a = array_response(p, deg2rad(95.0), deg2rad(20.0));
    EXPECT_NEAR(std::norm(inner(v.w, a)), 64.0, 1e-9);
}

TEST(Steering, TransmitWeightsAreConjugates)
{
    const AntennaPanel p{2, 2};
    const auto s = steering_vector(0.3, 1.2, p);
    const auto t = transmit_weights(s);
    for (std::size_t i = 0; i < s.size(); ++i)
        EXPECT_EQ(t.w[i], std::conj(s.w[i]));
}

TEST(Sectors, CentresSplitTheFieldOfView)
{
    AntennaPanel p{4, 4};
    p.orientation = deg2rad(90.0);
    p.fov = deg2rad(120.0);
    ASSERT_EQ(num_sectors(p), 4);
    const double expected[] = {135.0, 105.0, 75.0, 45.0};
    for (int xi = 1; xi <= 4; ++xi)
        EXPECT_NEAR(rad2deg(sector_azimuth(xi, p)), expected[xi - 1], 1e-9);
    EXPECT_THROW(sector_azimuth(0, p), std::out_of_range);
    EXPECT_THROW(sector_azimuth(5, p), std::out_of_range);
}

TEST(Sectors, CodebookPointsAtTheHorizon)
{
    AntennaPanel p{4, 4};
    p.fov = deg2rad(120.0);
    const auto v = sector_vector(2, p);
    const auto a = array_response(p, kPi / 2.0, sector_azimuth(2, p));
    EXPECT_NEAR(std::norm(inner(v.w, a)), 16.0, 1e-9);
}

TEST(Pattern, IsotropicIsFlat)
{
    EXPECT_EQ(radiation_pattern(0.1, 2.0, PatternMode::isotropic), 1.0);
    EXPECT_EQ(radiation_pattern(kPi / 2.0, 0.0, PatternMode::isotropic), 1.0);
}

TEST(Pattern, ThreeGppElement)
{
    const auto m = PatternMode::element_3gpp;
    EXPECT_DOUBLE_EQ(radiation_pattern(kPi / 2.0, 0.0, m), 1.0);
    // 3 dB at half the beamwidth in either cut.
    const double half = deg2rad(32.5);
    EXPECT_NEAR(20.0 * std::log10(radiation_pattern(kPi / 2.0, half, m)), -3.0, 1e-9);
    EXPECT_NEAR(20.0 * std::log10(radiation_pattern(kPi / 2.0 + half, 0.0, m)), -3.0, 1e-9);
    EXPECT_NEAR(20.0 * std::log10(radiation_pattern(kPi / 2.0, kPi, m)), -30.0, 1e-9);
}

TEST(Pattern, LocalAzimuthFollowsOrientation)
{
    AntennaPanel p{1, 1};
    p.orientation = deg2rad(180.0);
    p.pattern = PatternMode::element_3gpp;
    EXPECT_NEAR(local_azimuth(kPi, p), 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(element_field(p, kPi / 2.0, kPi), 1.0);
    EXPECT_LT(element_field(p, kPi / 2.0, 0.0), 0.05);
}
