/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#ifndef MMWCHAN_SMALL_SCALE_HPP
#define MMWCHAN_SMALL_SCALE_HPP

#include "mmwchan/antenna.hpp"
#include "mmwchan/core.hpp"
#include "mmwchan/large_scale.hpp"
#include "mmwchan/propagation.hpp"
#include "mmwchan/scenario.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <vector>

namespace mmwchan {

/// Relative delays in seconds: sorted, first one 0.
inline std::vector<double> cluster_delays(double ds, double r_tau, int n, Rng& rng)
{
    if (!(ds > 0.0) || n < 1)
        throw ConfigError("cluster delays need DS > 0 and at least one cluster");
    std::vector<double> tau(static_cast<std::size_t>(n));
    for (auto& t : tau)
        t = -r_tau * ds * std::log(rng.uniform_open());
    const double lo = *std::min_element(tau.begin(), tau.end());
    for (auto& t : tau)
        t -= lo;
    std::sort(tau.begin(), tau.end());
    return tau;
}

namespace detail {

inline double cubic(const std::vector<double>& c, double x)
{
    return c.at(0) + c.at(1) * x + c.at(2) * x * x + c.at(3) * x * x * x;
}

/// Linear interpolation in a flat (N, value) pair list, clamped at the ends.
inline double pair_lookup(const std::vector<double>& pairs, double n)
{
    const std::size_t count = pairs.size() / 2;
    if (count == 0)
        throw ConfigError("empty scaling table");
    if (n <= pairs[0])
        return pairs[1];
    for (std::size_t i = 1; i < count; ++i)
    {
        const double n0 = pairs[2 * i - 2];
        const double n1 = pairs[2 * i];
        if (n <= n1)
        {
            const double f = (n - n0) / (n1 - n0);
            return pairs[2 * i - 1] + f * (pairs[2 * i + 1] - pairs[2 * i - 1]);
        }
    }
    return pairs[2 * count - 1];
}

} // namespace detail

/// Delay-spread compensation factor for LOS links (K in dB).
inline double los_delay_scaling(double k_db)
{
    return detail::cubic(parameters().section("common").numbers("los_delay_scaling"), k_db);
}

/// Delays scaled for LOS spread compensation. Not used for coefficient phases.
inline std::vector<double> scaled_los_delays(const std::vector<double>& delays, double k_db)
{
    const double c = los_delay_scaling(k_db);
    std::vector<double> out(delays);
    for (auto& d : out)
        d /= c;
    return out;
}

inline double c_phi(int clusters, double k_db, bool los)
{
    const auto& c = parameters().section("common");
    double v = detail::pair_lookup(c.numbers("c_phi_nlos"), clusters);
    if (los)
        v *= detail::cubic(c.numbers("los_phi_scaling"), k_db);
    return v;
}

inline double c_theta(int clusters, double k_db, bool los)
{
    const auto& c = parameters().section("common");
    double v = detail::pair_lookup(c.numbers("c_theta_nlos"), clusters);
    if (los)
        v *= detail::cubic(c.numbers("los_theta_scaling"), k_db);
    return v;
}

/// Powers from delays and per-cluster shadowing terms.
///
/// NLOS: normalised to sum 1. LOS: cluster 0 is the specular ray with
/// K/(K+1); the others share 1/(K+1) in proportion to their profile.
inline std::vector<double> profile_powers(const std::vector<double>& delays, const std::vector<double>& shadow_db,
                                          double ds, double r_tau, double k, bool los)
{
    std::vector<double> p(delays.size());
    for (std::size_t n = 0; n < delays.size(); ++n)
        p[n] = std::exp(-delays[n] * (r_tau - 1.0) / (r_tau * ds)) * std::pow(10.0, -shadow_db[n] / 10.0);
    if (!los)
    {
        const double sum = std::accumulate(p.begin(), p.end(), 0.0);
        for (auto& x : p)
            x /= sum;
        return p;
    }
    if (p.size() == 1)
        return {1.0};
    double diffuse = 0.0;
    for (std::size_t n = 1; n < p.size(); ++n)
        diffuse += p[n];
    p[0] = k / (k + 1.0);
    for (std::size_t n = 1; n < p.size(); ++n)
        p[n] = p[n] / diffuse / (k + 1.0);
    return p;
}

/// Clusters at or above max - threshold_db survive.
inline std::vector<bool> prune_mask(const std::vector<double>& powers, double threshold_db)
{
    const double pmax = *std::max_element(powers.begin(), powers.end());
    const double floor = pmax * std::pow(10.0, -threshold_db / 10.0);
    std::vector<bool> keep(powers.size());
    for (std::size_t n = 0; n < powers.size(); ++n)
        keep[n] = powers[n] >= floor;
    return keep;
}

struct PowerProfile
{
    std::vector<double> powers; // before pruning
    std::vector<double> shadow_db;
    std::vector<bool> keep;
};

inline PowerProfile cluster_powers(const std::vector<double>& delays, double ds, double r_tau, double zeta_db, double k,
                                   bool los, Rng& rng)
{
    PowerProfile out;
    out.shadow_db.resize(delays.size());
    for (auto& z : out.shadow_db)
        z = rng.normal(0.0, zeta_db);
    out.powers = profile_powers(delays, out.shadow_db, ds, r_tau, k, los);
    out.keep = prune_mask(out.powers, parameters().section("common").number("prune_threshold_db"));
    assert(std::any_of(out.keep.begin(), out.keep.end(), [](bool b) { return b; }));
    return out;
}

/// Vertical-polarisation phases, one per ray, plus the LOS phase.
struct Phases
{
    std::vector<std::vector<double>> ray; // [cluster][ray], radians
    double los = 0.0;
};

inline Phases initial_phases(std::size_t clusters, std::size_t rays, Rng& rng)
{
    Phases p;
    p.ray.assign(clusters, std::vector<double>(rays));
    for (auto& row : p.ray)
        for (auto& x : row)
            x = rng.uniform(-kPi, kPi);
    p.los = rng.uniform(-kPi, kPi);
    return p;
}

/// Retained clusters of one link with everything the coefficient step and
/// the spatial-consistency update need. Angles in degrees.
struct ClusterSet
{
    bool los = false;
    bool o2i = false;
    double k = 0.0; // linear
    double k_db = -INFINITY;
    double ds = 0.0;
    double r_tau = 1.0;
    double c_ds = 0.0; // s
    int table_clusters = 0;
    int rays = 1;

    std::vector<double> delays;     // relative, ascending, first 0
    std::vector<double> abs_delays; // relative + d3D/c
    std::vector<double> shadow_db;
    std::vector<double> powers;
    std::vector<double> aoa, zoa, aod, zod;                  // cluster centres
    std::vector<std::vector<double>> ray_aoa, ray_zoa, ray_aod, ray_zod; // offsets per ray
    std::vector<std::vector<double>> phases;
    double los_phase = 0.0;

    // Geometric LOS direction.
    double los_aoa = 0.0;
    double los_zoa = 90.0;
    double los_aod = 0.0;
    double los_zod = 90.0;
    double d3d = 0.0;

    std::size_t size() const { return delays.size(); }
};

/// Geometric LOS directions in degrees for a tx -> rx pair.
struct LosAngles
{
    double aoa = 0.0;
    double zoa = 90.0;
    double aod = 0.0;
    double zod = 90.0;
    double d3d = 0.0;
};

inline LosAngles los_angles(Vec3 tx, Vec3 rx)
{
    const auto fwd = link_geometry(tx, rx);
    const auto back = link_geometry(rx, tx);
    return {rad2deg(back.azimuth), rad2deg(back.zenith()), rad2deg(fwd.azimuth), rad2deg(fwd.zenith()), fwd.d3d};
}

namespace detail {

inline std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng)
{
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = n; i > 1; --i)
    {
        const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
        std::swap(idx[i - 1], idx[std::min(j, i - 1)]);
    }
    return idx;
}

inline double ray_offset(std::size_t m, std::size_t rays)
{
    if (rays == 1)
        return 0.0;
    const auto& alpha = parameters().section("common").numbers("ray_offsets");
    if (rays > alpha.size())
        throw ConfigError("more rays per cluster than ray offset constants");
    return alpha[m];
}

} // namespace detail

/// Cluster centre angles and per-ray offsets.
///
/// Centres follow the inverse-Gaussian (azimuth) and Laplacian (zenith)
/// mappings; LOS links are re-centred so cluster 0 sits on the LOS path.
inline void ray_angles(ClusterSet& cs, const LspSet& lsps, const LspTable& table, Rng& rng)
{
    const std::size_t nv = cs.size();
    const double pmax = *std::max_element(cs.powers.begin(), cs.powers.end());
    const double cphi = c_phi(cs.table_clusters, cs.k_db, cs.los);
    const double ctheta = c_theta(cs.table_clusters, cs.k_db, cs.los);
    const double zoa_ref = cs.o2i ? 90.0 : cs.los_zoa;

    auto centres = [&](double spread, double ref, bool zenith, double extra) {
        std::vector<double> v(nv);
        for (std::size_t n = 0; n < nv; ++n)
        {
            const double ratio = cs.powers[n] / pmax;
            const double base = zenith ? -spread * std::log(ratio) / ctheta
                                       : 2.0 * (spread / 1.4) * std::sqrt(-std::log(ratio)) / cphi;
            const double x = rng.uniform() < 0.5 ? -1.0 : 1.0;
            const double y = rng.normal(0.0, spread / 7.0);
            v[n] = x * base + y;
        }
        const double anchor = cs.los ? v[0] : 0.0;
        for (auto& a : v)
            a = a - anchor + ref + extra;
        return v;
    };
    cs.aoa = centres(lsps.asa, cs.los_aoa, false, 0.0);
    cs.aod = centres(lsps.asd, cs.los_aod, false, 0.0);
    cs.zoa = centres(lsps.zsa, zoa_ref, true, 0.0);
    cs.zod = centres(lsps.zsd, cs.los_zod, true, cs.los ? 0.0 : lsps.offset_zod_deg);
    for (std::size_t n = 0; n < nv; ++n)
    {
        cs.aoa[n] = wrap_deg(cs.aoa[n]);
        cs.aod[n] = wrap_deg(cs.aod[n]);
        cs.zoa[n] = reflect_zenith_deg(cs.zoa[n]);
        cs.zod[n] = reflect_zenith_deg(cs.zod[n]);
    }

    const auto m = static_cast<std::size_t>(cs.rays);
    const double zod_spread =
        parameters().section("common").number("zod_ray_spread_factor") * std::pow(10.0, lsps.mu_lg_zsd);
    cs.ray_aoa.assign(nv, std::vector<double>(m));
    cs.ray_aod = cs.ray_zoa = cs.ray_zod = cs.ray_aoa;
    for (std::size_t n = 0; n < nv; ++n)
    {
        const auto p_aod = detail::random_permutation(m, rng);
        const auto p_zoa = detail::random_permutation(m, rng);
        const auto p_zod = detail::random_permutation(m, rng);
        for (std::size_t r = 0; r < m; ++r)
        {
            cs.ray_aoa[n][r] = table.c_asa_deg * detail::ray_offset(r, m);
            cs.ray_aod[n][r] = table.c_asd_deg * detail::ray_offset(p_aod[r], m);
            cs.ray_zoa[n][r] = table.c_zsa_deg * detail::ray_offset(p_zoa[r], m);
            cs.ray_zod[n][r] = zod_spread * detail::ray_offset(p_zod[r], m);
        }
    }
}

/// Steps from delays to phases for one link. Pruned clusters are dropped.
inline ClusterSet generate_clusters(const LspSet& lsps, const LspTable& table, const LosAngles& geo, bool los, bool o2i,
                                    Rng& rng)
{
    ClusterSet cs;
    cs.los = los;
    cs.o2i = o2i;
    cs.k = los ? lsps.k : 0.0;
    cs.k_db = los ? lsps.k_db : -INFINITY;
    cs.ds = lsps.ds;
    cs.r_tau = table.r_tau;
    cs.c_ds = lsps.c_ds_s;
    cs.table_clusters = table.clusters;
    cs.rays = table.rays;
    cs.los_aoa = geo.aoa;
    cs.los_zoa = geo.zoa;
    cs.los_aod = geo.aod;
    cs.los_zod = geo.zod;
    cs.d3d = geo.d3d;

    const auto delays = cluster_delays(lsps.ds, table.r_tau, table.clusters, rng);
    const auto profile = cluster_powers(delays, lsps.ds, table.r_tau, table.zeta_db, cs.k, los, rng);
    for (std::size_t n = 0; n < delays.size(); ++n)
    {
        // The specular ray stays even when a very small K puts it under the threshold.
        if (!profile.keep[n] && !(los && n == 0))
            continue;
        cs.delays.push_back(delays[n]);
        cs.shadow_db.push_back(profile.shadow_db[n]);
        cs.powers.push_back(profile.powers[n]);
    }
    const double first = cs.delays.front();
    for (auto& d : cs.delays)
        d -= first;
    cs.abs_delays = cs.delays;
    for (auto& d : cs.abs_delays)
        d += geo.d3d / kSpeedOfLight;

    ray_angles(cs, lsps, table, rng);
    auto ph = initial_phases(cs.size(), static_cast<std::size_t>(cs.rays), rng);
    cs.phases = std::move(ph.ray);
    cs.los_phase = ph.los;
    return cs;
}

/// One slice of the coefficient tensor: a whole cluster, a sub-cluster, or the LOS ray.
struct ExpandedCluster
{
    std::size_t parent = 0;
    int sub = 0; // 0 when not split, else 1..3
    bool specular = false;
    double delay = 0.0;
    double power = 0.0;
    std::vector<std::size_t> rays;
};

/// Splits the two strongest diffuse clusters into three sub-clusters each.
inline std::vector<ExpandedCluster> expand_clusters(const ClusterSet& cs)
{
    const auto& common = parameters().section("common");
    const auto m = static_cast<std::size_t>(cs.rays);
    std::vector<std::size_t> order;
    for (std::size_t n = (cs.los ? 1 : 0); n < cs.size(); ++n)
        order.push_back(n);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return cs.powers[a] > cs.powers[b]; });
    const bool can_split = m == common.numbers("ray_offsets").size();
    std::vector<bool> split(cs.size(), false);
    for (std::size_t i = 0; i < std::min<std::size_t>(2, order.size()) && can_split; ++i)
        split[order[i]] = true;

    std::vector<std::vector<std::size_t>> groups(3);
    if (can_split)
    {
        std::vector<int> which(m, 0);
        for (double r : common.numbers("subcluster_rays_2"))
            which.at(static_cast<std::size_t>(r) - 1) = 1;
        for (double r : common.numbers("subcluster_rays_3"))
            which.at(static_cast<std::size_t>(r) - 1) = 2;
        for (std::size_t r = 0; r < m; ++r)
            groups[static_cast<std::size_t>(which[r])].push_back(r);
    }
    const auto offsets = common.numbers("subcluster_delay");

    std::vector<ExpandedCluster> out;
    for (std::size_t n = 0; n < cs.size(); ++n)
    {
        if (cs.los && n == 0)
        {
            out.push_back({n, 0, true, cs.delays[n], cs.powers[n], {}});
            continue;
        }
        if (!split[n])
        {
            std::vector<std::size_t> all(m);
            std::iota(all.begin(), all.end(), 0);
            out.push_back({n, 0, false, cs.delays[n], cs.powers[n], std::move(all)});
            continue;
        }
        for (std::size_t g = 0; g < 3; ++g)
        {
            const double frac = static_cast<double>(groups[g].size()) / static_cast<double>(m);
            out.push_back({n, static_cast<int>(g + 1), false, cs.delays[n] + offsets.at(g) * cs.c_ds,
                           cs.powers[n] * frac, groups[g]});
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const ExpandedCluster& a, const ExpandedCluster& b) { return a.delay < b.delay; });
    return out;
}

/// Output of the fading procedure for one link plus the beamforming cache.
struct ChannelRealization
{
    ClusterSet clusters;
    AntennaPanel tx_panel;
    AntennaPanel rx_panel;
    double lambda = 0.0;

    // Expanded clusters, in lockstep with the tensor's third index.
    std::vector<ExpandedCluster> expanded;
    Tensor3 H;
    std::vector<double> delays;
    std::vector<double> powers;
    std::array<std::vector<double>, 4> angles; // AoA, ZoA, AoD, ZoD centres, radians

    std::vector<double> blockage_db; // per retained cluster

    BeamformingVector w_tx;
    BeamformingVector w_rx;
    std::vector<cplx> long_term;
    bool long_term_valid = false;

    double generated_at = 0.0;

    std::size_t num_clusters() const { return delays.size(); }
};

/// Coefficient tensor for a given set of clusters. Antenna layouts come
/// from the panels; element fields from their pattern modes.
inline void build_coefficients(ChannelRealization& r)
{
    const auto& cs = r.clusters;
    r.tx_panel.validate();
    r.rx_panel.validate();
    if (r.blockage_db.size() != cs.size())
        r.blockage_db.assign(cs.size(), 0.0);
    r.expanded = expand_clusters(cs);
    const std::size_t U = r.rx_panel.size();
    const std::size_t S = r.tx_panel.size();
    const std::size_t N = r.expanded.size();
    r.H = Tensor3(U, S, N);
    r.delays.assign(N, 0.0);
    r.powers.assign(N, 0.0);
    for (auto& a : r.angles)
        a.assign(N, 0.0);
    const double per_ray = 1.0 / std::sqrt(static_cast<double>(cs.rays));

    auto add_ray = [&](cplx* slice, cplx coef, double zoa, double aoa, double zod, double aod) {
        const double f = element_field(r.rx_panel, zoa, aoa) * element_field(r.tx_panel, zod, aod);
        const auto a_rx = array_response(r.rx_panel, zoa, aoa);
        const auto a_tx = array_response(r.tx_panel, zod, aod);
        const cplx c = coef * f;
        for (std::size_t u = 0; u < U; ++u)
        {
            const cplx cu = c * a_rx[u];
            cplx* row = slice + u * S;
            for (std::size_t s = 0; s < S; ++s)
                row[s] += cu * a_tx[s];
        }
    };

    for (std::size_t i = 0; i < N; ++i)
    {
        const auto& e = r.expanded[i];
        const std::size_t n = e.parent;
        const double amp = std::pow(10.0, -r.blockage_db[n] / 20.0);
        r.delays[i] = e.delay;
        r.powers[i] = e.power;
        r.angles[0][i] = deg2rad(cs.aoa[n]);
        r.angles[1][i] = deg2rad(cs.zoa[n]);
        r.angles[2][i] = deg2rad(cs.aod[n]);
        r.angles[3][i] = deg2rad(cs.zod[n]);
        cplx* slice = r.H.slice(i);
        if (e.specular)
        {
            const cplx coef = amp * std::sqrt(cs.powers[n]) * std::polar(1.0, cs.los_phase);
            add_ray(slice, coef, deg2rad(cs.zoa[n]), deg2rad(cs.aoa[n]), deg2rad(cs.zod[n]), deg2rad(cs.aod[n]));
            continue;
        }
        const double scale = amp * std::sqrt(cs.powers[n]) * per_ray;
        for (std::size_t m : e.rays)
        {
            const double zoa = deg2rad(reflect_zenith_deg(cs.zoa[n] + cs.ray_zoa[n][m]));
            const double aoa = deg2rad(wrap_deg(cs.aoa[n] + cs.ray_aoa[n][m]));
            const double zod = deg2rad(reflect_zenith_deg(cs.zod[n] + cs.ray_zod[n][m]));
            const double aod = deg2rad(wrap_deg(cs.aod[n] + cs.ray_aod[n][m]));
            add_ray(slice, scale * std::polar(1.0, cs.phases[n][m]), zoa, aoa, zod, aod);
        }
    }
    r.long_term_valid = false;
}

inline ChannelRealization make_realization(ClusterSet cs, const AntennaPanel& tx_panel, const AntennaPanel& rx_panel,
                                           double lambda, double t)
{
    if (!(lambda > 0.0))
        throw ConfigError("wavelength must be positive");
    ChannelRealization r;
    r.clusters = std::move(cs);
    r.tx_panel = tx_panel;
    r.rx_panel = rx_panel;
    r.lambda = lambda;
    r.generated_at = t;
    build_coefficients(r);
    return r;
}

/// Full fading procedure for a link with already drawn large-scale parameters.
inline ChannelRealization generate_channel(const LinkContext& link, Condition cond, const LspSet& lsps,
                                           const AntennaPanel& tx_panel, const AntennaPanel& rx_panel, Rng& rng,
                                           double t = 0.0)
{
    const auto table = lsp_table(link.scenario, cond);
    const auto geo = los_angles(link.bs, link.ut);
    auto cs = generate_clusters(lsps, table, geo, cond == Condition::LOS, cond == Condition::O2I, rng);
    return make_realization(std::move(cs), tx_panel, rx_panel, kSpeedOfLight / link.fc_hz, t);
}

/// Text dump: dimensions, then the tensor as real/imag pairs, slice by slice.
inline void write_realization(std::ostream& os, const ChannelRealization& r)
{
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << std::setprecision(17);
    os << "mmwchan-realization 1\n";
    os << "dims " << r.H.rx() << ' ' << r.H.tx() << ' ' << r.H.clusters() << '\n';
    os << "generated_at " << r.generated_at << '\n';
    for (std::size_t n = 0; n < r.num_clusters(); ++n)
        os << "cluster " << n << ' ' << r.delays[n] << ' ' << r.powers[n] << ' ' << r.angles[0][n] << ' '
           << r.angles[1][n] << ' ' << r.angles[2][n] << ' ' << r.angles[3][n] << '\n';
    for (std::size_t n = 0; n < r.H.clusters(); ++n)
        for (std::size_t u = 0; u < r.H.rx(); ++u)
        {
            for (std::size_t s = 0; s < r.H.tx(); ++s)
            {
                const cplx v = r.H(u, s, n);
                os << (s ? " " : "") << v.real() << ' ' << v.imag();
            }
            os << '\n';
        }
    os.flags(flags);
    os.precision(prec);
}

} // namespace mmwchan

#endif
