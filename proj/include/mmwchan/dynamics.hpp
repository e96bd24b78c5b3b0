/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#ifndef MMWCHAN_DYNAMICS_HPP
#define MMWCHAN_DYNAMICS_HPP

#include "mmwchan/beamforming.hpp"
#include "mmwchan/core.hpp"
#include "mmwchan/scenario.hpp"
#include "mmwchan/small_scale.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace mmwchan {

struct UpdateConfig
{
    double t_per = 0.1;
    bool spatial_consistency = true;
    bool blockage = false;
    bool redraw_phases = false;

    void validate() const
    {
        if (spatial_consistency && !(t_per > 0.0))
            throw ConfigError("update period must be positive when spatial consistency is on");
    }
};

namespace detail {

inline Vec3 azimuth_unit(double phi) { return {-std::sin(phi), std::cos(phi), 0.0}; }

inline Vec3 zenith_unit(double theta, double phi)
{
    return {std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi), -std::sin(theta)};
}

/// Moves a direction (degrees) seen from a node whose velocity relative to
/// the far end is v, the far end being at distance d.
inline void drift_direction(double& az_deg, double& zen_deg, Vec3 v, double d, double dt)
{
    const double phi = deg2rad(az_deg);
    const double theta = deg2rad(zen_deg);
    const double s = std::max(std::sin(theta), 1e-6);
    const double dphi = -dot(v, azimuth_unit(phi)) * dt / (d * s);
    const double dtheta = -dot(v, zenith_unit(theta, phi)) * dt / d;
    az_deg = wrap_deg(az_deg + rad2deg(dphi));
    zen_deg = reflect_zenith_deg(zen_deg + rad2deg(dtheta));
}

} // namespace detail

/// Spatial-consistency update over dt with constant velocities.
///
/// Absolute delays drift with the projected velocities; each path length
/// stands in for the distance to its scatterer when moving angles. The LOS
/// ray uses the relative velocity at both ends, the others only their own
/// node's velocity. Powers follow the new delays and keep the retained total.
inline ChannelRealization update_channel(const ChannelRealization& prev, Vec3 v_rx, Vec3 v_tx, double dt, double t_now,
                                         Rng* phase_rng = nullptr)
{
    if (!(dt >= 0.0))
        throw ConfigError("update step must be non-negative");
    ChannelRealization next = prev;
    next.generated_at = t_now;
    const bool moving = !(v_rx == Vec3{} && v_tx == Vec3{}) && dt > 0.0;
    if (!moving && !phase_rng)
    {
        refresh_long_term(next);
        return next;
    }
    auto& cs = next.clusters;
    const std::size_t nv = cs.size();
    for (std::size_t n = 0; n < nv && moving; ++n)
    {
        const Vec3 r_rx = spherical_unit(deg2rad(cs.zoa[n]), deg2rad(cs.aoa[n]));
        const Vec3 r_tx = spherical_unit(deg2rad(cs.zod[n]), deg2rad(cs.aod[n]));
        const double d = kSpeedOfLight * cs.abs_delays[n];
        cs.abs_delays[n] -= (dot(r_rx, v_rx) + dot(r_tx, v_tx)) / kSpeedOfLight * dt;
        if (cs.los && n == 0)
        {
            detail::drift_direction(cs.aoa[n], cs.zoa[n], v_rx - v_tx, d, dt);
            detail::drift_direction(cs.aod[n], cs.zod[n], v_tx - v_rx, d, dt);
            cs.los_aoa = cs.aoa[n];
            cs.los_zoa = cs.zoa[n];
            cs.los_aod = cs.aod[n];
            cs.los_zod = cs.zod[n];
            cs.d3d = kSpeedOfLight * cs.abs_delays[n];
            continue;
        }
        detail::drift_direction(cs.aoa[n], cs.zoa[n], v_rx, d, dt);
        detail::drift_direction(cs.aod[n], cs.zod[n], v_tx, d, dt);
    }
    if (moving)
    {
        const double lo = *std::min_element(cs.abs_delays.begin(), cs.abs_delays.end());
        for (std::size_t n = 0; n < nv; ++n)
            cs.delays[n] = cs.abs_delays[n] - lo;

        std::vector<double> raw(nv);
        for (std::size_t n = 0; n < nv; ++n)
            raw[n] = std::exp(-cs.delays[n] * (cs.r_tau - 1.0) / (cs.r_tau * cs.ds)) *
                     std::pow(10.0, -cs.shadow_db[n] / 10.0);
        const std::size_t first = cs.los ? 1 : 0;
        double old_total = 0.0;
        double new_total = 0.0;
        for (std::size_t n = first; n < nv; ++n)
        {
            old_total += cs.powers[n];
            new_total += raw[n];
        }
        if (new_total > 0.0)
            for (std::size_t n = first; n < nv; ++n)
                cs.powers[n] = raw[n] * old_total / new_total;
    }
    if (phase_rng)
    {
        auto ph = initial_phases(nv, static_cast<std::size_t>(cs.rays), *phase_rng);
        cs.phases = std::move(ph.ray);
        cs.los_phase = ph.los;
    }
    build_coefficients(next);
    refresh_long_term(next);
    return next;
}

/// Chains `steps` updates of dt each.
inline ChannelRealization evolve(const ChannelRealization& r, Vec3 v_rx, Vec3 v_tx, double dt, int steps)
{
    ChannelRealization cur = r;
    for (int i = 0; i < steps; ++i)
        cur = update_channel(cur, v_rx, v_tx, dt, cur.generated_at + dt);
    return cur;
}

enum class Orientation
{
    landscape,
    portrait
};

inline std::string to_string(Orientation o) { return o == Orientation::landscape ? "landscape" : "portrait"; }

inline Orientation parse_orientation(const std::string& s)
{
    if (s == "landscape")
        return Orientation::landscape;
    if (s == "portrait")
        return Orientation::portrait;
    throw ConfigError("unknown orientation '" + s + "' (expected landscape or portrait)");
}

/// Angular box in the UT frame: azimuth phi +- x/2, zenith theta +- y/2 (degrees).
struct BlockageRegion
{
    double phi = 0.0;
    double x = 0.0;
    double theta = 90.0;
    double y = 0.0;
    double r = 0.0; // blocker distance, m; unused for the self region
    bool self = false;

    bool contains(double aoa_deg, double zoa_deg) const
    {
        return std::abs(angle_diff_deg(aoa_deg, phi)) <= x / 2.0 && std::abs(zoa_deg - theta) <= y / 2.0;
    }
};

struct BlockageState
{
    Orientation orientation = Orientation::landscape;
    bool indoor = false;
    std::vector<BlockageRegion> regions; // self region first
    std::vector<double> latent;          // one unit normal per non-self region
    double d_corr = 10.0;
    double self_db = 30.0;

    std::size_t nonself_count() const { return regions.empty() ? 0 : regions.size() - 1; }
};

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline BlockageState generate_blockers(ScenarioKind kind, Orientation orientation, int k, Rng& rng)
{
    if (k < 0)
        throw ConfigError("number of blockers must be >= 0");
    const auto& c = parameters().section("common");
    BlockageState st;
    st.orientation = orientation;
    st.indoor = is_indoor_scenario(kind);
    st.d_corr = c.number(st.indoor ? "block_corr_indoor" : "block_corr_outdoor");
    st.self_db = c.number("block_self_db");
    const auto self = c.numbers(orientation == Orientation::landscape ? "block_self_landscape" : "block_self_portrait");
    st.regions.push_back({self.at(0), self.at(1), self.at(2), self.at(3), 0.0, true});
    const auto ns = c.numbers(st.indoor ? "block_indoor" : "block_outdoor");
    for (int i = 0; i < k; ++i)
    {
        BlockageRegion b;
        const double z = rng.normal();
        st.latent.push_back(z);
        b.phi = wrap_deg(360.0 * normal_cdf(z));
        b.x = rng.uniform(ns.at(0), ns.at(1));
        b.theta = ns.at(2);
        b.y = ns.at(3) == ns.at(4) ? ns.at(3) : rng.uniform(ns.at(3), ns.at(4));
        b.r = ns.at(5);
        st.regions.push_back(b);
    }
    return st;
}

/// Moves non-self blocker centres after the UT travelled `distance` metres.
inline void advance_blockers(BlockageState& st, double distance, Rng& rng)
{
    if (!(distance > 0.0))
        return;
    const double rho = std::exp(-distance / st.d_corr);
    for (std::size_t i = 0; i < st.latent.size(); ++i)
    {
        st.latent[i] = rho * st.latent[i] + std::sqrt(1.0 - rho * rho) * rng.normal();
        st.regions[i + 1].phi = wrap_deg(360.0 * normal_cdf(st.latent[i]));
    }
}

namespace detail {

/// Signed edge term; positive on the shadowed side of the edge.
inline double edge_term(double angle_deg, bool shadow_side, double r, double lambda)
{
    const double a = std::min(std::abs(deg2rad(angle_deg)), kPi / 2.0 - 1e-9);
    const double mag = kPi / 2.0 * std::sqrt(kPi / lambda * r * (1.0 / std::cos(a) - 1.0));
    return std::atan(shadow_side ? mag : -mag) / kPi;
}

} // namespace detail

/// Attenuation of one region for an arrival direction in the UT frame, dB.
inline double region_attenuation_db(const BlockageRegion& b, double aoa_deg, double zoa_deg, double lambda,
                                    double self_db = 30.0)
{
    if (b.self)
        return b.contains(aoa_deg, zoa_deg) ? self_db : 0.0;
    const double d = angle_diff_deg(aoa_deg, b.phi);
    const double a1 = d - b.x / 2.0;
    const double a2 = d + b.x / 2.0;
    const double z = zoa_deg - b.theta;
    const double z1 = z - b.y / 2.0;
    const double z2 = z + b.y / 2.0;
    const double fa = detail::edge_term(a1, a1 <= 0.0, b.r, lambda) + detail::edge_term(a2, a2 >= 0.0, b.r, lambda);
    const double fz = detail::edge_term(z1, z1 <= 0.0, b.r, lambda) + detail::edge_term(z2, z2 >= 0.0, b.r, lambda);
    const double inner = 1.0 - fa * fz;
    if (!(inner > 0.0))
        return 300.0;
    return std::max(0.0, -20.0 * std::log10(inner));
}

/// Self and non-self attenuation of an arrival direction, summed in dB.
struct BlockageSplit
{
    double self_db = 0.0;
    double nonself_db = 0.0;
    double total() const { return self_db + nonself_db; }
};

inline BlockageSplit blockage_attenuation(const BlockageState& st, double aoa_local_deg, double zoa_deg, double lambda)
{
    BlockageSplit out;
    for (const auto& b : st.regions)
    {
        const double a = region_attenuation_db(b, aoa_local_deg, zoa_deg, lambda, st.self_db);
        (b.self ? out.self_db : out.nonself_db) += a;
    }
    return out;
}

/// Per-cluster attenuation using cluster centre arrival angles in the rx panel frame.
inline std::vector<BlockageSplit> cluster_blockage(const ChannelRealization& r, const BlockageState& st)
{
    const auto& cs = r.clusters;
    const double orient = rad2deg(r.rx_panel.orientation);
    std::vector<BlockageSplit> out(cs.size());
    for (std::size_t n = 0; n < cs.size(); ++n)
        out[n] = blockage_attenuation(st, wrap_deg(cs.aoa[n] - orient), cs.zoa[n], r.lambda);
    return out;
}

/// Replaces the stored attenuation and rescales the affected tensor slices.
inline void set_blockage(ChannelRealization& r, const std::vector<double>& atten_db)
{
    if (atten_db.size() != r.clusters.size())
        throw ConfigError("blockage vector length does not match the cluster count");
    std::vector<double> old = r.blockage_db;
    old.resize(atten_db.size(), 0.0);
    const std::size_t block = r.H.rx() * r.H.tx();
    for (std::size_t i = 0; i < r.expanded.size(); ++i)
    {
        const std::size_t n = r.expanded[i].parent;
        const double delta = atten_db[n] - old[n];
        if (delta == 0.0)
            continue;
        const double f = std::pow(10.0, -delta / 20.0);
        cplx* s = r.H.slice(i);
        for (std::size_t k = 0; k < block; ++k)
            s[k] *= f;
    }
    r.blockage_db = atten_db;
    refresh_long_term(r);
}

/// Advances blockers by the UT displacement over dt, then attenuates clusters.
inline std::vector<double> apply_blockage(ChannelRealization& r, BlockageState& st, double dt, Vec3 v, Rng& rng)
{
    advance_blockers(st, std::hypot(v.x, v.y) * dt, rng);
    const auto split = cluster_blockage(r, st);
    std::vector<double> att(split.size());
    for (std::size_t n = 0; n < split.size(); ++n)
        att[n] = split[n].total();
    set_blockage(r, att);
    return att;
}

} // namespace mmwchan

#endif
