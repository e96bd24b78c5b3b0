/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#include "mmwchan/propagation.hpp"

#include <gtest/gtest.h>

using namespace mmwchan;

namespace {

// Hand-written pathloss formulas, kept apart from the table-driven code.
double oracle_umi_los(double fc_ghz, double d3d) { return 32.4 + 21.0 * std::log10(d3d) + 20.0 * std::log10(fc_ghz); }

double oracle_umi_nlos(double fc_ghz, double d3d, double h_ut)
{
    const double n = 22.4 + 35.3 * std::log10(d3d) + 21.3 * std::log10(fc_ghz) - 0.3 * (h_ut - 1.5);
    return std::max(oracle_umi_los(fc_ghz, d3d), n);
}

double oracle_uma_los(double fc_ghz, double d3d) { return 28.0 + 22.0 * std::log10(d3d) + 20.0 * std::log10(fc_ghz); }

double oracle_rma_los(double fc_ghz, double d3d)
{
    const double h = 5.0;
    return 20.0 * std::log10(40.0 * kPi * d3d * fc_ghz / 3.0) + std::min(0.03 * std::pow(h, 1.72), 10.0) * std::log10(d3d) -
           std::min(0.044 * std::pow(h, 1.72), 14.77) + 0.002 * std::log10(h) * d3d;
}

double oracle_rma_nlos(double fc_ghz, double d3d, double h_bs, double h_ut)
{
    const double h = 5.0, w = 20.0;
    const double n = 161.04 - 7.1 * std::log10(w) + 7.5 * std::log10(h) -
                     (24.37 - 3.7 * (h / h_bs) * (h / h_bs)) * std::log10(h_bs) +
                     (43.42 - 3.1 * std::log10(h_bs)) * (std::log10(d3d) - 3.0) + 20.0 * std::log10(fc_ghz) -
                     (3.2 * std::pow(std::log10(11.75 * h_ut), 2.0) - 4.97);
    return std::max(oracle_rma_los(fc_ghz, d3d), n);
}

double oracle_inh_los(double fc_ghz, double d3d) { return 32.4 + 17.3 * std::log10(d3d) + 20.0 * std::log10(fc_ghz); }

} // namespace

TEST(Pathloss, UmiLosSpotValue)
{
    const double d3d = std::hypot(100.0, 8.5);
    const double pl = pathloss(ScenarioKind::UMi, LosState::LOS, 28e9, 100.0, d3d, 10.0, 1.5);
    EXPECT_NEAR(pl, oracle_umi_los(28.0, d3d), 1e-9);
    EXPECT_NEAR(pl, 103.38, 0.01);
}

TEST(Pathloss, UmiNlosSpotValue)
{
    const double d3d = std::hypot(200.0, 8.5);
    EXPECT_NEAR(pathloss(ScenarioKind::UMi, LosState::NLOS, 28e9, 200.0, d3d, 10.0, 1.5),
                oracle_umi_nlos(28.0, d3d, 1.5), 1e-9);
}

TEST(Pathloss, UmaLosBeforeBreakpoint)
{
    const double d3d = std::hypot(300.0, 23.5);
    EXPECT_NEAR(pathloss(ScenarioKind::UMa, LosState::LOS, 28e9, 300.0, d3d, 25.0, 1.5), oracle_uma_los(28.0, d3d),
                1e-9);
}

TEST(Pathloss, UmaLosAfterBreakpoint)
{
    // 6 GHz puts the breakpoint at 4*24*0.5*6e9/c = 960 m.
    const double dbp = 4.0 * 24.0 * 0.5 * 6e9 / kSpeedOfLight;
    EXPECT_NEAR(breakpoint_distance(ScenarioKind::UMa, 6e9, 25.0, 1.5), dbp, 1e-9);
    const double d2d = 2000.0;
    const double d3d = std::hypot(d2d, 23.5);
    const double expected = 28.0 + 40.0 * std::log10(d3d) + 20.0 * std::log10(6.0) -
                            9.0 * std::log10(dbp * dbp + 23.5 * 23.5);
    EXPECT_NEAR(pathloss(ScenarioKind::UMa, LosState::LOS, 6e9, d2d, d3d, 25.0, 1.5), expected, 1e-9);
}

TEST(Pathloss, RmaSpotValues)
{
    const double d3d = std::hypot(500.0, 33.5);
    EXPECT_NEAR(pathloss(ScenarioKind::RMa, LosState::LOS, 7e9, 500.0, d3d, 35.0, 1.5), oracle_rma_los(7.0, d3d), 1e-9);
    EXPECT_NEAR(pathloss(ScenarioKind::RMa, LosState::NLOS, 7e9, 500.0, d3d, 35.0, 1.5),
                oracle_rma_nlos(7.0, d3d, 35.0, 1.5), 1e-9);
}

TEST(Pathloss, RmaBreakpoint)
{
    EXPECT_NEAR(breakpoint_distance(ScenarioKind::RMa, 7e9, 35.0, 1.5), 2.0 * kPi * 35.0 * 1.5 * 7e9 / kSpeedOfLight,
                1e-9);
}

TEST(Pathloss, IndoorSpotValue)
{
    EXPECT_NEAR(pathloss(ScenarioKind::InMO, LosState::LOS, 28e9, 20.0, std::hypot(20.0, 2.0), 3.0, 1.0),
                oracle_inh_los(28.0, std::hypot(20.0, 2.0)), 1e-9);
}

TEST(Pathloss, NlosNeverBelowLos)
{
    for (auto k : kAllScenarios)
    {
        const auto sp = scenario_params(k);
        const double h_ut = is_indoor_scenario(k) ? 1.0 : 1.5;
        const double fc = std::min(28e9, sp.fc_max_hz);
        for (double d = 20.0; d < 1000.0; d *= 1.5)
        {
            if (is_indoor_scenario(k) && d > 95.0)
                break;
            const double d3d = std::hypot(d, sp.h_bs_default - h_ut);
            EXPECT_LE(pathloss(k, LosState::LOS, fc, d, d3d, sp.h_bs_default, h_ut),
                      pathloss(k, LosState::NLOS, fc, d, d3d, sp.h_bs_default, h_ut))
                << to_string(k) << " d=" << d;
        }
    }
}

TEST(Pathloss, BoundsViolationNamesTheBound)
{
    try
    {
        pathloss(ScenarioKind::UMi, LosState::LOS, 28e9, 5.0, std::hypot(5.0, 8.5), 10.0, 1.5);
        FAIL() << "expected a bounds error";
    }
    catch (const DistanceBoundsError& e)
    {
        EXPECT_EQ(e.bound(), "d2D_min");
        EXPECT_DOUBLE_EQ(e.limit(), 10.0);
        EXPECT_DOUBLE_EQ(e.value(), 5.0);
    }
    EXPECT_THROW(pathloss(ScenarioKind::RMa, LosState::NLOS, 7e9, 6000.0, 6000.1, 35.0, 1.5), DistanceBoundsError);
    EXPECT_THROW(pathloss(ScenarioKind::InOO, LosState::LOS, 28e9, 150.0, 150.0, 3.0, 1.0), DistanceBoundsError);
}

TEST(Pathloss, PermissiveClampsIntoRange)
{
    const double clamped = pathloss(ScenarioKind::UMi, LosState::LOS, 28e9, 5.0, std::hypot(5.0, 8.5), 10.0, 1.5,
                                    false, true);
    EXPECT_NEAR(clamped, oracle_umi_los(28.0, std::hypot(10.0, 8.5)), 1e-9);
}

TEST(Pathloss, OptionalNlos)
{
    const double d3d = std::hypot(300.0, 8.5);
    const double opt = pathloss(ScenarioKind::UMi, LosState::NLOS, 28e9, 300.0, d3d, 10.0, 1.5, true);
    EXPECT_NEAR(opt, std::max(oracle_umi_los(28.0, d3d), 32.4 + 31.9 * std::log10(d3d) + 20.0 * std::log10(28.0)),
                1e-9);
    EXPECT_DOUBLE_EQ(shadow_sigma(ScenarioKind::UMi, Condition::NLOS, 28e9, 300.0, 10.0, 1.5, true), 8.2);
    EXPECT_THROW(pathloss(ScenarioKind::RMa, LosState::NLOS, 7e9, 300.0, 302.0, 35.0, 1.5, true), ConfigError);
}

TEST(LosProbability, Umi)
{
    EXPECT_DOUBLE_EQ(los_probability(ScenarioKind::UMi, 10.0, 1.5), 1.0);
    const double d = 100.0;
    EXPECT_NEAR(los_probability(ScenarioKind::UMi, d, 1.5), 18.0 / d + std::exp(-d / 36.0) * (1.0 - 18.0 / d), 1e-12);
}

TEST(LosProbability, UmaHeightTerm)
{
    const double d = 100.0;
    const double base = 18.0 / d + std::exp(-d / 63.0) * (1.0 - 18.0 / d);
    EXPECT_NEAR(los_probability(ScenarioKind::UMa, d, 1.5), base, 1e-12);
    const double ch = std::pow((23.0 - 13.0) / 10.0, 1.5);
    EXPECT_NEAR(los_probability(ScenarioKind::UMa, d, 23.0),
                std::min(1.0, base * (1.0 + ch * 1.25 * std::pow(d / 100.0, 3.0) * std::exp(-d / 150.0))), 1e-12);
}

TEST(LosProbability, RmaAndIndoor)
{
    EXPECT_NEAR(los_probability(ScenarioKind::RMa, 510.0, 1.5), std::exp(-0.5), 1e-12);
    EXPECT_NEAR(los_probability(ScenarioKind::InMO, 5.0, 1.0), std::exp(-(5.0 - 1.2) / 4.7), 1e-12);
    EXPECT_NEAR(los_probability(ScenarioKind::InMO, 10.0, 1.0), 0.32 * std::exp(-(10.0 - 6.5) / 32.6), 1e-12);
    EXPECT_DOUBLE_EQ(los_probability(ScenarioKind::InOO, 1.0, 1.0), 1.0);
}

TEST(LosProbability, MonotoneNonIncreasing)
{
    for (auto k : {ScenarioKind::UMi, ScenarioKind::UMa, ScenarioKind::RMa})
    {
        double prev = 1.0;
        for (double d = 1.0; d < 3000.0; d *= 1.1)
        {
            const double p = los_probability(k, d, 1.5);
            EXPECT_LE(p, prev + 1e-12);
            EXPECT_GE(p, 0.0);
            prev = p;
        }
    }
}

TEST(LosAssignment, Modes)
{
    Rng rng(1);
    LinkContext c{ScenarioKind::UMi, {0, 0, 10}, {100, 0, 1.5}};
    EXPECT_EQ(assign_los(c, LosMode::los, rng).state, LosState::LOS);
    EXPECT_EQ(assign_los(c, LosMode::nlos, rng).state, LosState::NLOS);
    EXPECT_THROW(assign_los(c, LosMode::geometric, rng), ConfigError);

    const std::vector<Building> city{{{40, -10, 0}, {60, 10, 20}}};
    c.buildings = &city;
    EXPECT_EQ(assign_los(c, LosMode::geometric, rng).state, LosState::NLOS);
    c.ut = {100, 50, 1.5};
    EXPECT_EQ(assign_los(c, LosMode::geometric, rng).state, LosState::LOS);
}

TEST(LosAssignment, IndoorUtIgnoresItsOwnBuilding)
{
    Rng rng(1);
    const std::vector<Building> city{{{90, -10, 0}, {110, 10, 20}}};
    LinkContext c{ScenarioKind::UMi, {0, 0, 10}, {100, 0, 1.5}, true, 28e9, &city};
    EXPECT_EQ(assign_los(c, LosMode::geometric, rng).state, LosState::LOS);
}

TEST(LosAssignment, StatisticalFrequencyMatchesProbability)
{
    Rng rng(99);
    LinkContext c{ScenarioKind::UMi, {0, 0, 10}, {60, 0, 1.5}};
    const double p = los_probability(ScenarioKind::UMi, 60.0, 1.5);
    int hits = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i)
        hits += assign_los(c, LosMode::statistical, rng).state == LosState::LOS;
    EXPECT_NEAR(static_cast<double>(hits) / n, p, 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(O2i, LowLossDeterministic)
{
    const double glass = 2.0 + 0.2 * 28.0;
    const double concrete = 5.0 + 4.0 * 28.0;
    const double expected = 5.0 - 10.0 * std::log10(0.3 * std::pow(10.0, -glass / 10.0) +
                                                    0.7 * std::pow(10.0, -concrete / 10.0));
    EXPECT_NEAR(o2i_material_loss(O2iModel::low_loss, 28e9), expected, 1e-9);
    EXPECT_NEAR(o2i_penetration(O2iModel::low_loss, 28e9, 10.0, nullptr), expected + 5.0, 1e-9);
}

TEST(O2i, HighLossAboveLowLoss)
{
    EXPECT_GT(o2i_material_loss(O2iModel::high_loss, 28e9), o2i_material_loss(O2iModel::low_loss, 28e9));
    EXPECT_EQ(select_o2i_model(ScenarioKind::UMi, BuildingType::residential), O2iModel::low_loss);
    EXPECT_EQ(select_o2i_model(ScenarioKind::UMa, BuildingType::office), O2iModel::high_loss);
    EXPECT_THROW(select_o2i_model(ScenarioKind::InMO, BuildingType::office), ConfigError);
}

TEST(O2i, OutdoorUtRejected)
{
    LinkContext c{ScenarioKind::UMi, {0, 0, 10}, {60, 0, 1.5}};
    EXPECT_THROW(o2i_penetration(c, O2iModel::low_loss, 5.0, nullptr), ConfigError);
}

TEST(O2i, IndoorDistanceIsMinOfUniforms)
{
    Rng rng(5);
    double sum = 0.0;
    const int n = 40000;
    for (int i = 0; i < n; ++i)
    {
        const double d = draw_indoor_distance(ScenarioKind::UMi, rng);
        ASSERT_GE(d, 0.0);
        ASSERT_LE(d, 25.0);
        sum += d;
    }
    EXPECT_NEAR(sum / n, mean_indoor_distance(ScenarioKind::UMi), 0.15);
}

TEST(Shadowing, UpdateFollowsTheFilter)
{
    Rng a(3), b(3);
    auto st = shadowing_init(4.0, 10.0, {0, 0, 1.5}, a);
    const double v0 = b.normal(0.0, 4.0);
    EXPECT_DOUBLE_EQ(st.value, v0);
    st = shadowing_update(st, {6, 8, 1.5}, a);
    const double r = std::exp(-1.0);
    EXPECT_NEAR(st.value, r * v0 + std::sqrt(1.0 - r * r) * 4.0 * b.normal(), 1e-12);
}

TEST(Shadowing, NoMoveNoChange)
{
    Rng rng(3);
    auto st = shadowing_init(4.0, 10.0, {0, 0, 1.5}, rng);
    const auto same = shadowing_update(st, {0, 0, 3.0}, rng);
    EXPECT_EQ(same.value, st.value);
    EXPECT_THROW(shadowing_init(4.0, 0.0, {}, rng), ConfigError);
}

TEST(Shadowing, SigmaAndCorrelationDistance)
{
    EXPECT_DOUBLE_EQ(shadow_sigma(ScenarioKind::UMi, Condition::LOS, 28e9, 100, 10, 1.5), 4.0);
    EXPECT_DOUBLE_EQ(shadow_sigma(ScenarioKind::UMi, Condition::NLOS, 28e9, 100, 10, 1.5), 7.82);
    EXPECT_DOUBLE_EQ(shadow_correlation_distance(ScenarioKind::UMi, Condition::LOS), 10.0);
    // RMa LOS switches sigma past the breakpoint.
    const double dbp = breakpoint_distance(ScenarioKind::RMa, 7e9, 35.0, 1.5);
    EXPECT_DOUBLE_EQ(shadow_sigma(ScenarioKind::RMa, Condition::LOS, 7e9, dbp + 1.0, 35.0, 1.5), 6.0);
}

TEST(Shadowing, ResultTotals)
{
    const auto r = PathlossResult::make(100.0, -3.0, 12.0);
    EXPECT_DOUBLE_EQ(r.total, 109.0);
}
