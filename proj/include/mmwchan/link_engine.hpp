/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#ifndef MMWCHAN_LINK_ENGINE_HPP
#define MMWCHAN_LINK_ENGINE_HPP

#include "mmwchan/beamforming.hpp"
#include "mmwchan/core.hpp"
#include "mmwchan/dynamics.hpp"
#include "mmwchan/large_scale.hpp"
#include "mmwchan/propagation.hpp"
#include "mmwchan/scenario.hpp"
#include "mmwchan/small_scale.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace mmwchan {

enum class AttachPolicy
{
    nearest,
    max_rsrp
};

inline std::string to_string(AttachPolicy p) { return p == AttachPolicy::nearest ? "nearest" : "max_rsrp"; }

inline AttachPolicy parse_attach_policy(const std::string& s)
{
    if (s == "nearest")
        return AttachPolicy::nearest;
    if (s == "max_rsrp")
        return AttachPolicy::max_rsrp;
    throw ConfigError("unknown attach policy '" + s + "' (expected nearest or max_rsrp)");
}

enum class BeamUpdate
{
    on_change,
    frozen
};

inline std::string to_string(BeamUpdate b) { return b == BeamUpdate::on_change ? "on_change" : "frozen"; }

inline BeamUpdate parse_beam_update(const std::string& s)
{
    if (s == "on_change")
        return BeamUpdate::on_change;
    if (s == "frozen")
        return BeamUpdate::frozen;
    throw ConfigError("unknown beamforming update policy '" + s + "' (expected on_change or frozen)");
}

struct BsSpec
{
    int id = 0;
    Vec3 position;
    AntennaPanel panel = AntennaPanel::bs_default();

    friend bool operator==(const BsSpec&, const BsSpec&) = default;
};

struct UtSpec
{
    int id = 0;
    MobilityTrace trace;
    bool indoor = false;
    AntennaPanel panel = AntennaPanel::ut_default();

    friend bool operator==(const UtSpec&, const UtSpec&) = default;
};

struct WorldConfig
{
    ScenarioKind scenario = ScenarioKind::UMi;
    SubcarrierGrid grid;
    double tx_power_dbm = 30.0;
    double noise_figure_db = 5.0;
    LosMode los_mode = LosMode::statistical;
    bool shadowing = true;
    bool optional_nlos = false;
    bool permissive = false;
    UpdateConfig update;
    int blockers = 4;
    Orientation orientation = Orientation::landscape;
    BeamformingMethod beamforming = BeamformingMethod::power;
    BeamUpdate beam_update = BeamUpdate::on_change;
    AttachPolicy attach = AttachPolicy::nearest;
    BuildingType default_building = BuildingType::residential;
    std::uint64_t seed = 1;
    std::vector<BsSpec> bs;
    std::vector<UtSpec> ut;
    std::vector<Building> buildings;

    void validate() const
    {
        grid.validate();
        check_frequency(scenario, grid.fc);
        update.validate();
        if (bs.empty())
            throw ConfigError("at least one BS is required");
        if (blockers < 0)
            throw ConfigError("blockers must be >= 0");
        std::set<int> ids;
        for (const auto& b : bs)
        {
            if (!ids.insert(b.id).second)
                throw ConfigError("duplicate BS id " + std::to_string(b.id));
            if (!is_finite(b.position))
                throw ConfigError("BS " + std::to_string(b.id) + " position is not finite");
            b.panel.validate();
            if (building_containing(b.position, buildings))
                throw ConfigError("BS " + std::to_string(b.id) + " is inside a building");
        }
        ids.clear();
        const auto sp = scenario_params(scenario);
        for (const auto& u : ut)
        {
            if (!ids.insert(u.id).second)
                throw ConfigError("duplicate UT id " + std::to_string(u.id));
            validate_trace(u.trace);
            u.panel.validate();
            for (const auto& w : u.trace)
                if (w.position.z < sp.h_ut_min - 1e-9 || w.position.z > sp.h_ut_max + 1e-9)
                    throw ConfigError("UT " + std::to_string(u.id) + " height " + std::to_string(w.position.z) +
                                      " m outside " + to_string(scenario) + " range");
        }
        for (const auto& b : buildings)
            b.validate();
    }
};

/// Per-UT result of one tick.
struct SinrSample
{
    double t = 0.0;
    int ut = 0;
    int bs = 0;
    std::vector<double> sinr_db;
    double wideband_db = 0.0;
    double signal_w = 0.0;
    double interference_w = 0.0;
    double noise_w = 0.0;
    PathlossResult loss;
    bool los = false;
};

/// Power of one retained cluster on a serving link after blockage.
struct ClusterPowerSample
{
    std::size_t cluster = 0;
    double delay = 0.0;
    double power = 0.0;
    double self_db = 0.0;
    double nonself_db = 0.0;
};

inline double noise_psd_w_per_hz(double noise_figure_db) { return std::pow(10.0, (-174.0 + noise_figure_db - 30.0) / 10.0); }

/// Time-stepped multi-cell simulation.
class World
{
  public:
    explicit World(WorldConfig cfg) : m_cfg(std::move(cfg))
    {
        m_cfg.validate();
        std::sort(m_cfg.bs.begin(), m_cfg.bs.end(), [](const BsSpec& a, const BsSpec& b) { return a.id < b.id; });
        std::sort(m_cfg.ut.begin(), m_cfg.ut.end(), [](const UtSpec& a, const UtSpec& b) { return a.id < b.id; });
    }

    const WorldConfig& config() const { return m_cfg; }

    /// Event log of the last tick, for ordering checks.
    const std::vector<std::string>& tick_log() const { return m_log; }

    /// Serving BS of a UT, or nullopt before the first tick.
    std::optional<int> serving_bs(int ut) const
    {
        auto it = m_serving.find(ut);
        if (it == m_serving.end())
            return std::nullopt;
        return it->second;
    }

    /// Picks the serving BS for one UT at time t. Ties go to the lowest BS id.
    int attach(int ut_id, AttachPolicy policy, double t = 0.0)
    {
        const auto& ut = ut_spec(ut_id);
        const Vec3 p = position_at(ut.trace, t);
        int best = -1;
        double best_metric = 0.0;
        for (const auto& b : m_cfg.bs)
        {
            double metric = 0.0;
            if (policy == AttachPolicy::nearest)
                metric = -norm(p - b.position);
            else
            {
                auto& L = link(b.id, ut_id);
                prepare_static(L, t);
                metric = -(L.loss.pathloss + L.loss.o2i_penetration);
            }
            if (best < 0 || metric > best_metric)
            {
                best = b.id;
                best_metric = metric;
            }
        }
        if (best < 0)
            throw ConfigError("no BS to attach to");
        return best;
    }

    /// Advances every active link to time t and returns one sample per UT.
    std::vector<SinrSample> tick(double t)
    {
        if (m_started && t < m_last_t)
            throw RuntimeError("tick times must not decrease");
        m_log.clear();
        if (!m_started)
        {
            for (const auto& u : m_cfg.ut)
                m_serving[u.id] = attach(u.id, m_cfg.attach, t);
            m_started = true;
        }
        m_last_t = t;

        std::set<int> active_bs;
        for (const auto& [ut, bs] : m_serving)
            active_bs.insert(bs);

        for (const auto& u : m_cfg.ut)
            for (int b : active_bs)
                advance(link(b, u.id), t);

        for (const auto& u : m_cfg.ut)
        {
            auto& s = link(m_serving.at(u.id), u.id);
            beamform_serving(s);
        }
        for (const auto& u : m_cfg.ut)
            for (int b : active_bs)
            {
                if (b == m_serving.at(u.id))
                    continue;
                auto& L = link(b, u.id);
                const auto& tx = link(b, first_served(b));
                const auto& rx = link(m_serving.at(u.id), u.id);
                set_beamforming(*L.channel, tx.channel->w_tx, rx.channel->w_rx);
                m_log.push_back("interference_beams " + std::to_string(b) + "->" + std::to_string(u.id));
            }

        std::vector<SinrSample> out;
        const auto& g = m_cfg.grid;
        const double p_sc = std::pow(10.0, (m_cfg.tx_power_dbm - 30.0) / 10.0) / g.count;
        const std::vector<double> tx_psd(static_cast<std::size_t>(g.count), p_sc);
        const double noise = noise_psd_w_per_hz(m_cfg.noise_figure_db) * g.spacing;
        for (const auto& u : m_cfg.ut)
        {
            const int sb = m_serving.at(u.id);
            const auto& s = link(sb, u.id);
            const Vec3 v = velocity_at(u.trace, t);
            SinrSample smp;
            smp.t = t;
            smp.ut = u.id;
            smp.bs = sb;
            smp.loss = s.loss;
            smp.los = s.los.los();
            const auto sig = psd_apply(tx_psd, *s.channel, s.loss.total, t, g, v);
            std::vector<double> intf(sig.size(), 0.0);
            for (int b : active_bs)
            {
                if (b == sb)
                    continue;
                const auto& L = link(b, u.id);
                const auto ip = psd_apply(tx_psd, *L.channel, L.loss.total, t, g, v);
                for (std::size_t k = 0; k < ip.size(); ++k)
                    intf[k] += ip[k];
            }
            smp.sinr_db.resize(sig.size());
            for (std::size_t k = 0; k < sig.size(); ++k)
            {
                smp.sinr_db[k] = linear_to_db(sig[k] / (noise + intf[k]));
                smp.signal_w += sig[k];
                smp.interference_w += intf[k];
                smp.noise_w += noise;
            }
            smp.wideband_db = linear_to_db(smp.signal_w / (smp.noise_w + smp.interference_w));
            out.push_back(std::move(smp));
        }
        return out;
    }

    /// Cluster powers of a UT's serving link as of the last tick.
    std::vector<ClusterPowerSample> cluster_powers(int ut_id) const
    {
        auto it = m_serving.find(ut_id);
        if (it == m_serving.end())
            throw RuntimeError("UT " + std::to_string(ut_id) + " is not attached");
        const auto& L = m_links.at(key(it->second, ut_id));
        const auto& cs = L.channel->clusters;
        std::vector<ClusterPowerSample> out;
        for (std::size_t n = 0; n < cs.size(); ++n)
        {
            ClusterPowerSample c;
            c.cluster = n;
            c.delay = cs.delays[n];
            c.power = cs.powers[n] * db_to_linear(-L.channel->blockage_db[n]);
            if (n < L.split.size())
            {
                c.self_db = L.split[n].self_db;
                c.nonself_db = L.split[n].nonself_db;
            }
            out.push_back(c);
        }
        return out;
    }

    /// Serving-link realization of a UT.
    const ChannelRealization& serving_channel(int ut_id) const
    {
        return *m_links.at(key(m_serving.at(ut_id), ut_id)).channel;
    }

  private:
    struct LinkState
    {
        int bs = 0;
        int ut = 0;
        Rng los_rng;
        Rng sf_rng;
        Rng o2i_rng;
        Rng fading_rng;
        Rng block_rng;
        Rng bf_rng;
        bool prepared = false;
        LosCondition los;
        bool indoor = false;
        BuildingType building = BuildingType::residential;
        Condition cond = Condition::LOS;
        ShadowingState shadow;
        double o2i_db = 0.0;
        PathlossResult loss;
        std::optional<ChannelRealization> channel;
        double last_update = 0.0;
        Vec3 last_update_pos;
        double last_tick = 0.0;
        Vec3 last_tick_pos;
        std::optional<BlockageState> blockage;
        std::vector<BlockageSplit> split;
        bool needs_beams = false;
        bool beams_set = false;
        BeamformingVector w_tx;
        BeamformingVector w_rx;
    };

    static std::uint64_t key(int bs, int ut)
    {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(bs)) << 32) | static_cast<std::uint32_t>(ut);
    }

    const UtSpec& ut_spec(int id) const
    {
        for (const auto& u : m_cfg.ut)
            if (u.id == id)
                return u;
        throw ConfigError("unknown UT id " + std::to_string(id));
    }

    const BsSpec& bs_spec(int id) const
    {
        for (const auto& b : m_cfg.bs)
            if (b.id == id)
                return b;
        throw ConfigError("unknown BS id " + std::to_string(id));
    }

    int first_served(int bs) const
    {
        for (const auto& [ut, b] : m_serving)
            if (b == bs)
                return ut;
        throw RuntimeError("BS " + std::to_string(bs) + " serves no UT");
    }

    LinkState& link(int bs, int ut)
    {
        const auto k = key(bs, ut);
        auto it = m_links.find(k);
        if (it != m_links.end())
            return it->second;
        LinkState L;
        L.bs = bs;
        L.ut = ut;
        L.los_rng = Rng(derive_seed(m_cfg.seed, k, Feature::los));
        L.sf_rng = Rng(derive_seed(m_cfg.seed, k, Feature::shadowing));
        L.o2i_rng = Rng(derive_seed(m_cfg.seed, k, Feature::o2i));
        L.fading_rng = Rng(derive_seed(m_cfg.seed, k, Feature::fading));
        L.block_rng = Rng(derive_seed(m_cfg.seed, k, Feature::blockage));
        L.bf_rng = Rng(derive_seed(m_cfg.seed, k, Feature::beamforming));
        return m_links.emplace(k, std::move(L)).first->second;
    }

    LinkContext context(const LinkState& L, Vec3 ut_pos) const
    {
        LinkContext c;
        c.scenario = m_cfg.scenario;
        c.bs = bs_spec(L.bs).position;
        c.ut = ut_pos;
        c.ut_indoor = L.indoor;
        c.fc_hz = m_cfg.grid.fc;
        c.buildings = m_cfg.buildings.empty() ? nullptr : &m_cfg.buildings;
        return c;
    }

    void update_indoor(LinkState& L, Vec3 p) const
    {
        if (m_cfg.buildings.empty())
        {
            L.indoor = ut_spec(L.ut).indoor;
            L.building = m_cfg.default_building;
            return;
        }
        const Building* b = building_containing(p, m_cfg.buildings);
        L.indoor = b != nullptr;
        L.building = b ? b->type : m_cfg.default_building;
    }

    bool o2i_applies(const LinkState& L) const { return L.indoor && !is_indoor_scenario(m_cfg.scenario); }

    double pathloss_of(const LinkState& L, const LinkContext& c) const
    {
        const auto g = c.geometry();
        return pathloss(m_cfg.scenario, L.los.state, m_cfg.grid.fc, g.d2d, g.d3d, c.h_bs(), c.h_ut(),
                        m_cfg.optional_nlos, m_cfg.permissive);
    }

    double sigma_sf(const LinkState& L, const LinkContext& c) const
    {
        const auto g = c.geometry();
        return shadow_sigma(m_cfg.scenario, L.cond, m_cfg.grid.fc, g.d2d, c.h_bs(), c.h_ut(), m_cfg.optional_nlos);
    }

    /// LOS state, O2I loss and deterministic pathloss; done once per link.
    void prepare_static(LinkState& L, double t)
    {
        if (L.prepared)
            return;
        const Vec3 p = position_at(ut_spec(L.ut).trace, t);
        update_indoor(L, p);
        const auto c = context(L, p);
        L.los = assign_los(c, m_cfg.los_mode, L.los_rng);
        L.cond = link_condition(L.los.state, o2i_applies(L));
        if (o2i_applies(L))
        {
            const auto model = select_o2i_model(m_cfg.scenario, L.building);
            const double d_in = draw_indoor_distance(m_cfg.scenario, L.o2i_rng);
            L.o2i_db = o2i_penetration(c, model, d_in, &L.o2i_rng);
        }
        L.loss = PathlossResult::make(pathloss_of(L, c), 0.0, L.o2i_db);
        L.prepared = true;
    }

    void regenerate(LinkState& L, const LinkContext& c, double t, bool reset_shadowing)
    {
        const double sigma = sigma_sf(L, c);
        const auto lsps = generate_lsps(c, L.cond, sigma, L.fading_rng);
        L.channel = generate_channel(c, L.cond, lsps, bs_spec(L.bs).panel, ut_spec(L.ut).panel, L.fading_rng, t);
        if (reset_shadowing || !L.shadow.initialized)
        {
            L.shadow = shadowing_init(sigma, shadow_correlation_distance(m_cfg.scenario, L.cond), c.ut, L.sf_rng);
            L.shadow.value = lsps.sf;
        }
        L.last_update = t;
        L.last_update_pos = c.ut;
        L.needs_beams = true;
        if (L.beams_set)
            set_beamforming(*L.channel, L.w_tx, L.w_rx);
        m_log.push_back("generate " + std::to_string(L.bs) + "->" + std::to_string(L.ut));
    }

    void blockage_step(LinkState& L, double dist)
    {
        if (!m_cfg.update.blockage)
            return;
        if (!L.blockage)
            L.blockage = generate_blockers(m_cfg.scenario, m_cfg.orientation, m_cfg.blockers, L.block_rng);
        advance_blockers(*L.blockage, dist, L.block_rng);
        L.split = cluster_blockage(*L.channel, *L.blockage);
        std::vector<double> att(L.split.size());
        for (std::size_t n = 0; n < att.size(); ++n)
            att[n] = L.split[n].total();
        set_blockage(*L.channel, att);
        m_log.push_back("blockage " + std::to_string(L.bs) + "->" + std::to_string(L.ut));
    }

    void advance(LinkState& L, double t)
    {
        prepare_static(L, t);
        const auto& ut = ut_spec(L.ut);
        const Vec3 p = position_at(ut.trace, t);
        update_indoor(L, p);
        const auto c = context(L, p);

        bool flipped = false;
        if (m_cfg.los_mode == LosMode::geometric && L.channel)
        {
            const auto now = assign_los(c, m_cfg.los_mode, L.los_rng);
            if (now.state != L.los.state)
            {
                L.los = now;
                flipped = true;
            }
        }
        L.cond = link_condition(L.los.state, o2i_applies(L));

        if (!L.channel || flipped)
        {
            regenerate(L, c, t, true);
            blockage_step(L, 0.0);
            L.last_tick = t;
            L.last_tick_pos = p;
        }
        else
        {
            const double moved = horizontal_distance(L.last_tick_pos, p);
            // Blockage first, then the channel update of the same tick.
            blockage_step(L, moved);
            const double dt = t - L.last_update;
            const bool mobile = !(p == L.last_update_pos);
            if (mobile && dt >= m_cfg.update.t_per - 1e-9)
            {
                if (m_cfg.update.spatial_consistency)
                {
                    const Vec3 v = (1.0 / dt) * (p - L.last_update_pos);
                    L.channel = update_channel(*L.channel, v, Vec3{}, dt, t);
                    L.last_update = t;
                    L.last_update_pos = p;
                    L.needs_beams = true;
                    m_log.push_back("update " + std::to_string(L.bs) + "->" + std::to_string(L.ut));
                }
                else
                {
                    regenerate(L, c, t, false);
                    blockage_step(L, 0.0);
                }
            }
            L.last_tick = t;
            L.last_tick_pos = p;
        }

        if (m_cfg.shadowing)
            L.shadow = shadowing_update(L.shadow, p, L.sf_rng);
        L.loss = PathlossResult::make(pathloss_of(L, c), m_cfg.shadowing ? L.shadow.value : 0.0, L.o2i_db);
    }

    void beamform_serving(LinkState& L)
    {
        if (!L.needs_beams && L.beams_set)
            return;
        if (!L.beams_set || m_cfg.beam_update == BeamUpdate::on_change)
        {
            beamform(*L.channel, m_cfg.beamforming, &L.bf_rng);
            L.w_tx = L.channel->w_tx;
            L.w_rx = L.channel->w_rx;
            L.beams_set = true;
            m_log.push_back("beamform " + std::to_string(L.bs) + "->" + std::to_string(L.ut));
        }
        else
            set_beamforming(*L.channel, L.w_tx, L.w_rx);
        L.needs_beams = false;
    }

    WorldConfig m_cfg;
    std::map<std::uint64_t, LinkState> m_links;
    std::map<int, int> m_serving;
    bool m_started = false;
    double m_last_t = 0.0;
    std::vector<std::string> m_log;
};

} // namespace mmwchan

#endif
