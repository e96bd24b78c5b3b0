/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#include "mmwchan/dynamics.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace mmwchan;

namespace {

ChannelRealization rma_channel(Condition cond, std::uint64_t seed, Vec3 ut = {100, 0, 1.5})
{
    Rng rng(seed);
    LinkContext link{ScenarioKind::RMa, {0, 0, 35}, ut, false, 7e9};
    const auto lsps = generate_lsps(link, cond, 4.0, rng);
    return generate_channel(link, cond, lsps, {4, 4}, {2, 2}, rng);
}

} // namespace

TEST(UpdateConfig, Validation)
{
    UpdateConfig c;
    c.t_per = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c.spatial_consistency = false;
    EXPECT_NO_THROW(c.validate());
}

TEST(Update, ZeroVelocityLeavesChannelAlone)
{
    const auto r = rma_channel(Condition::NLOS, 1);
    const auto n = update_channel(r, {}, {}, 0.1, 0.1);
    EXPECT_EQ(n.H.data(), r.H.data());
    EXPECT_EQ(n.clusters.abs_delays, r.clusters.abs_delays);
    EXPECT_DOUBLE_EQ(n.generated_at, 0.1);
}

TEST(Update, LosDelayFollowsRadialMotion)
{
    const auto r = rma_channel(Condition::LOS, 2);
    const double d0 = r.clusters.d3d;
    // Move away from the BS along the horizontal LOS direction.
    const auto n = update_channel(r, {1.0, 0.0, 0.0}, {}, 1.0, 1.0);
    const double expected = std::hypot(101.0, 33.5);
    const double radial = 100.0 / d0; // horizontal component of the LOS unit vector
    EXPECT_NEAR(n.clusters.d3d - d0, radial, 1e-9);
    EXPECT_NEAR(n.clusters.d3d, expected, 0.01);
}

TEST(Update, LosAnglesTrackGeometry)
{
    auto r = rma_channel(Condition::LOS, 3);
    const Vec3 v{0.0, 1.0, 0.0};
    for (int i = 0; i < 100; ++i)
        r = update_channel(r, v, {}, 0.1, 0.1 * (i + 1));
    const auto geo = los_angles({0, 0, 35}, {100, 10, 1.5});
    EXPECT_NEAR(angle_diff_deg(r.clusters.los_aoa, geo.aoa), 0.0, 0.05);
    EXPECT_NEAR(angle_diff_deg(r.clusters.los_aod, geo.aod), 0.0, 0.05);
    EXPECT_NEAR(r.clusters.los_zoa, geo.zoa, 0.05);
    EXPECT_NEAR(r.clusters.d3d, geo.d3d, 0.05);
}

TEST(Update, PowersKeepTheirTotals)
{
    const auto r = rma_channel(Condition::LOS, 4);
    const auto n = update_channel(r, {3.0, 4.0, 0.0}, {}, 0.5, 0.5);
    const auto& a = r.clusters.powers;
    const auto& b = n.clusters.powers;
    EXPECT_DOUBLE_EQ(b[0], a[0]);
    EXPECT_NEAR(std::accumulate(b.begin() + 1, b.end(), 0.0), std::accumulate(a.begin() + 1, a.end(), 0.0), 1e-12);
    EXPECT_EQ(n.clusters.delays.size(), r.clusters.delays.size());
    EXPECT_EQ(*std::min_element(n.clusters.delays.begin(), n.clusters.delays.end()), 0.0);
}

TEST(Update, SmallStepsGiveSmallChanges)
{
    const auto r = rma_channel(Condition::NLOS, 5);
    const auto n = update_channel(r, {1.0, 0.0, 0.0}, {}, 0.01, 0.01);
    for (std::size_t i = 0; i < r.clusters.size(); ++i)
    {
        EXPECT_NEAR(angle_diff_deg(n.clusters.aoa[i], r.clusters.aoa[i]), 0.0, 0.1);
        EXPECT_NEAR(n.clusters.abs_delays[i], r.clusters.abs_delays[i], 0.01 / kSpeedOfLight + 1e-15);
    }
}

TEST(Update, PhaseRedraw)
{
    const auto r = rma_channel(Condition::NLOS, 6);
    Rng rng(77);
    const auto n = update_channel(r, {}, {}, 0.1, 0.1, &rng);
    EXPECT_NE(n.clusters.phases, r.clusters.phases);
    const auto kept = update_channel(r, {1, 0, 0}, {}, 0.1, 0.1);
    EXPECT_EQ(kept.clusters.phases, r.clusters.phases);
}

TEST(Update, EvolveChainsSteps)
{
    const auto r = rma_channel(Condition::NLOS, 7);
    const auto a = evolve(r, {1, 0, 0}, {}, 0.1, 3);
    auto b = update_channel(r, {1, 0, 0}, {}, 0.1, 0.1);
    b = update_channel(b, {1, 0, 0}, {}, 0.1, 0.2);
    b = update_channel(b, {1, 0, 0}, {}, 0.1, 0.3);
    EXPECT_EQ(a.clusters.abs_delays, b.clusters.abs_delays);
    EXPECT_NEAR(a.generated_at, 0.3, 1e-12);
    EXPECT_THROW(update_channel(r, {}, {}, -1.0, 0.0), ConfigError);
}

TEST(Blockage, SelfRegionIsFlatThirtyDb)
{
    Rng rng(1);
    const auto st = generate_blockers(ScenarioKind::UMi, Orientation::landscape, 0, rng);
    const double lambda = kSpeedOfLight / 28e9;
    EXPECT_DOUBLE_EQ(blockage_attenuation(st, 40.0, 110.0, lambda).self_db, 30.0);
    EXPECT_DOUBLE_EQ(blockage_attenuation(st, 40.0 + 80.0, 110.0 + 37.5, lambda).self_db, 30.0);
    EXPECT_DOUBLE_EQ(blockage_attenuation(st, 40.0 + 80.1, 110.0, lambda).self_db, 0.0);
    EXPECT_DOUBLE_EQ(blockage_attenuation(st, 200.0, 90.0, lambda).total(), 0.0);
    const auto portrait = generate_blockers(ScenarioKind::UMi, Orientation::portrait, 0, rng);
    EXPECT_DOUBLE_EQ(blockage_attenuation(portrait, 260.0, 100.0, lambda).self_db, 30.0);
}

TEST(Blockage, NonSelfRegionShape)
{
    const BlockageRegion b{100.0, 10.0, 90.0, 5.0, 10.0, false};
    const double lambda = kSpeedOfLight / 28e9;
    const double centre = region_attenuation_db(b, 100.0, 90.0, lambda);
    EXPECT_GT(centre, 5.0);
    // Attenuation falls off away from the centre in either direction.
    double prev = centre;
    for (double d = 1.0; d <= 40.0; d += 1.0)
    {
        const double a = region_attenuation_db(b, 100.0 + d, 90.0, lambda);
        EXPECT_LE(a, prev + 1e-9) << d;
        EXPECT_NEAR(a, region_attenuation_db(b, 100.0 - d, 90.0, lambda), 1e-9);
        prev = a;
    }
    EXPECT_LT(region_attenuation_db(b, 280.0, 90.0, lambda), 0.5);
    EXPECT_GE(region_attenuation_db(b, 280.0, 90.0, lambda), 0.0);
}

TEST(Blockage, BlockersAreDrawnPerConfig)
{
    Rng a(3), b(3);
    const auto x = generate_blockers(ScenarioKind::UMi, Orientation::landscape, 4, a);
    const auto y = generate_blockers(ScenarioKind::UMi, Orientation::landscape, 4, b);
    ASSERT_EQ(x.nonself_count(), 4u);
    EXPECT_TRUE(x.regions.front().self);
    for (std::size_t i = 1; i < x.regions.size(); ++i)
    {
        EXPECT_EQ(x.regions[i].phi, y.regions[i].phi);
        EXPECT_GE(x.regions[i].x, 5.0);
        EXPECT_LE(x.regions[i].x, 15.0);
        EXPECT_DOUBLE_EQ(x.regions[i].r, 10.0);
    }
    const auto in = generate_blockers(ScenarioKind::InOO, Orientation::landscape, 2, a);
    EXPECT_DOUBLE_EQ(in.regions[1].r, 2.0);
    EXPECT_DOUBLE_EQ(in.d_corr, 5.0);
    EXPECT_THROW(generate_blockers(ScenarioKind::UMi, Orientation::landscape, -1, a), ConfigError);
}

TEST(Blockage, BlockerMotionIsCorrelated)
{
    Rng rng(4);
    auto st = generate_blockers(ScenarioKind::UMi, Orientation::landscape, 4000, rng);
    const auto before = st.latent;
    advance_blockers(st, 0.0, rng);
    EXPECT_EQ(st.latent, before);
    advance_blockers(st, 1.0, rng);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < before.size(); ++i)
    {
        num += before[i] * st.latent[i];
        den += before[i] * before[i];
    }
    EXPECT_NEAR(num / den, std::exp(-0.1), 0.02);
    for (std::size_t i = 0; i < st.latent.size(); ++i)
        EXPECT_NEAR(st.regions[i + 1].phi, wrap_deg(360.0 * normal_cdf(st.latent[i])), 1e-12);
}

TEST(Blockage, SetBlockageMatchesRebuild)
{
    auto r = rma_channel(Condition::NLOS, 8);
    std::vector<double> att(r.clusters.size(), 0.0);
    att[0] = 12.0;
    att.back() = 3.0;
    auto fast = r;
    set_blockage(fast, att);
    auto slow = r;
    slow.blockage_db = att;
    build_coefficients(slow);
    for (std::size_t i = 0; i < fast.H.data().size(); ++i)
        EXPECT_LT(std::abs(fast.H.data()[i] - slow.H.data()[i]), 1e-12);
    EXPECT_THROW(set_blockage(fast, {1.0}), ConfigError);
}

TEST(Blockage, UsesTheReceivePanelFrame)
{
    auto r = rma_channel(Condition::NLOS, 9);
    Rng rng(1);
    const auto st = generate_blockers(ScenarioKind::RMa, Orientation::landscape, 0, rng);
    r.rx_panel.orientation = deg2rad(r.clusters.aoa[0] - 40.0);
    r.clusters.zoa[0] = 110.0;
    const auto split = cluster_blockage(r, st);
    EXPECT_DOUBLE_EQ(split[0].self_db, 30.0);
}

TEST(Orientations, Parse)
{
    EXPECT_EQ(parse_orientation("portrait"), Orientation::portrait);
    EXPECT_THROW(parse_orientation("upside_down"), ConfigError);
}
