/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#include "mmwchan/beamforming.hpp"

#include <gtest/gtest.h>

using namespace mmwchan;

namespace {

/// Single specular ray from tx direction (zod, aod) to rx direction (zoa, aoa).
CMatrix single_ray(const AntennaPanel& tx, const AntennaPanel& rx, double zod, double aod, double zoa, double aoa)
{
    const auto a_tx = array_response(tx, zod, aod);
    const auto a_rx = array_response(rx, zoa, aoa);
    CMatrix h(rx.size(), tx.size());
    for (std::size_t u = 0; u < rx.size(); ++u)
        for (std::size_t s = 0; s < tx.size(); ++s)
            h(u, s) = a_rx[u] * a_tx[s];
    return h;
}

ChannelRealization small_channel(std::uint64_t seed)
{
    Rng rng(seed);
    LinkContext link{ScenarioKind::UMi, {0, 0, 10}, {60, 20, 1.5}};
    const auto lsps = generate_lsps(link, Condition::NLOS, 7.82, rng);
    return generate_channel(link, Condition::NLOS, lsps, {4, 4}, {2, 2}, rng);
}

} // namespace

TEST(Grid, BandwidthLimit)
{
    SubcarrierGrid g{28e9, 120e3, 1000};
    EXPECT_NO_THROW(g.validate());
    EXPECT_DOUBLE_EQ(g.bandwidth(), 120e6);
    g.count = 20000; // 2.4 GHz
    EXPECT_THROW(g.validate(), ConfigError);
    SubcarrierGrid low{6e9, 1e6, 700}; // 0.7 GHz > 10% of 6 GHz
    EXPECT_THROW(low.validate(), ConfigError);
}

TEST(Grid, OffsetsAreCentred)
{
    const SubcarrierGrid g{28e9, 100e3, 4};
    EXPECT_DOUBLE_EQ(g.offset(0), -150e3);
    EXPECT_DOUBLE_EQ(g.offset(3), 150e3);
    EXPECT_DOUBLE_EQ(g.offset(0) + g.offset(3), 0.0);
}

TEST(PowerMethod, RankOneChannelReachesFullGain)
{
    const AntennaPanel tx{8, 8}, rx{4, 4};
    const auto h = single_ray(tx, rx, deg2rad(95), deg2rad(10), deg2rad(85), deg2rad(190));
    const auto res = power_method(h);
    EXPECT_TRUE(res.converged);
    EXPECT_NEAR(std::norm(bilinear(h, res.w_tx, res.w_rx)), 1024.0, 1e-6);
    EXPECT_NEAR(res.w_tx.norm(), 1.0, 1e-12);
    EXPECT_NEAR(res.w_rx.norm(), 1.0, 1e-12);
}

TEST(PowerMethod, DiagonalMatrix)
{
    CMatrix h(2, 3);
    h(0, 0) = 1.0;
    h(1, 1) = cplx(0.0, 3.0);
    Rng rng(1);
    const auto res = power_method(h, 1e-12, 2000, &rng);
    EXPECT_NEAR(std::norm(bilinear(h, res.w_tx, res.w_rx)), 9.0, 1e-9);
    EXPECT_NEAR(std::abs(res.w_tx.w[1]), 1.0, 1e-6);
}

TEST(PowerMethod, RejectsDegenerateInput)
{
    EXPECT_THROW(power_method(CMatrix(2, 2)), RuntimeError);
    EXPECT_THROW(power_method(CMatrix()), ConfigError);
}

TEST(CellScan, AlignedRayFindsBothSectors)
{
    AntennaPanel tx{8, 8}, rx{4, 4};
    tx.fov = rx.fov = deg2rad(120.0);
    rx.orientation = kPi;
    // Tx sector 3 and rx sector 2 centres.
    const double aod = sector_azimuth(3, tx);
    const double aoa = sector_azimuth(2, rx);
    const auto h = single_ray(tx, rx, kPi / 2, aod, kPi / 2, aoa);
    const auto res = cell_scan(h, tx, rx);
    EXPECT_EQ(res.xi_tx, 3);
    EXPECT_EQ(res.xi_rx, 2);
    EXPECT_NEAR(res.gain, 1024.0, 1e-6);
}

TEST(CellScan, TiesKeepTheLowestPair)
{
    const AntennaPanel p{2, 2};
    const auto res = cell_scan(CMatrix(4, 4), p, p);
    EXPECT_EQ(res.xi_tx, 1);
    EXPECT_EQ(res.xi_rx, 1);
}

TEST(CellScan, NeverBeatsPowerMethod)
{
    for (std::uint64_t s = 1; s <= 10; ++s)
    {
        const auto r = small_channel(s);
        const auto h = collapse_channel(r.H);
        const auto pm = power_method(h);
        EXPECT_LE(cell_scan(r).gain, std::norm(bilinear(h, pm.w_tx, pm.w_rx)) * (1.0 + 1e-9));
    }
}

TEST(LongTerm, MatchesPerSliceBilinear)
{
    auto r = small_channel(3);
    beamform(r, BeamformingMethod::power);
    ASSERT_TRUE(r.long_term_valid);
    for (std::size_t n = 0; n < r.H.clusters(); ++n)
    {
        CMatrix slice(r.H.rx(), r.H.tx());
        for (std::size_t u = 0; u < r.H.rx(); ++u)
            for (std::size_t s = 0; s < r.H.tx(); ++s)
                slice(u, s) = r.H(u, s, n);
        EXPECT_LT(std::abs(r.long_term[n] - bilinear(slice, r.w_tx, r.w_rx)), 1e-12);
    }
}

TEST(Gain, FactorisedEqualsDirect)
{
    auto r = small_channel(4);
    beamform(r, BeamformingMethod::cell_scan);
    Rng rng(5);
    const Vec3 v{1.0, -2.0, 0.0};
    for (int i = 0; i < 50; ++i)
    {
        const double t = rng.uniform(0.0, 1.0);
        const double f = rng.uniform(-50e6, 50e6);
        const cplx a = gain(r, t, f, v, r.lambda);
        const cplx b = gain_direct(r, t, f, v, r.lambda);
        EXPECT_LE(std::abs(a - b), 1e-12 * std::abs(b));
    }
}

TEST(Gain, NeedsBeamsFirst)
{
    const auto r = small_channel(5);
    EXPECT_THROW(gain(r, 0.0, 0.0, {}, r.lambda), RuntimeError);
}

TEST(Psd, FlatSingleClusterChannel)
{
    auto r = small_channel(6);
    beamform(r, BeamformingMethod::power);
    // Keep only the long-term value of cluster 0 to get a flat response.
    for (std::size_t n = 1; n < r.long_term.size(); ++n)
        r.long_term[n] = 0.0;
    const SubcarrierGrid g{28e9, 120e3, 8};
    const std::vector<double> tx(8, 1e-3);
    const auto rx = psd_apply(tx, r, 100.0, 0.0, g, {});
    for (double x : rx)
        EXPECT_NEAR(x, 1e-3 * std::norm(r.long_term[0]) * 1e-10, 1e-25);
    EXPECT_THROW(psd_apply(std::vector<double>(3, 1.0), r, 0.0, 0.0, g, {}), ConfigError);
}

TEST(Methods, Parse)
{
    EXPECT_EQ(parse_beamforming_method("power"), BeamformingMethod::power);
    EXPECT_EQ(parse_beamforming_method("cell_scan"), BeamformingMethod::cell_scan);
    EXPECT_THROW(parse_beamforming_method("svd"), ConfigError);
}
