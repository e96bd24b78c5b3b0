/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#ifndef MMWCHAN_CONFIG_HPP
#define MMWCHAN_CONFIG_HPP

#include "mmwchan/link_engine.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace mmwchan {

/// Panel as written in a config file (degrees, wavelengths).
struct PanelConfig
{
    int rows = 1;
    int cols = 1;
    double d_h = 0.5;
    double d_v = 0.5;
    double orientation_deg = 0.0;
    double fov_deg = 180.0;
    PatternMode pattern = PatternMode::isotropic;

    friend bool operator==(const PanelConfig&, const PanelConfig&) = default;

    AntennaPanel to_panel() const
    {
        AntennaPanel p;
        p.rows = rows;
        p.cols = cols;
        p.d_h = d_h;
        p.d_v = d_v;
        p.orientation = deg2rad(orientation_deg);
        p.fov = deg2rad(fov_deg);
        p.pattern = pattern;
        return p;
    }
};

struct BsConfig
{
    int id = 0;
    Vec3 position;
    PanelConfig panel{8, 8};

    friend bool operator==(const BsConfig&, const BsConfig&) = default;
};

struct UtConfig
{
    int id = 0;
    bool indoor = false;
    MobilityTrace trace;
    PanelConfig panel{4, 4};

    friend bool operator==(const UtConfig&, const UtConfig&) = default;
};

/// Everything a run needs, in file units.
struct SimConfig
{
    ScenarioKind scenario = ScenarioKind::UMi;
    double frequency_ghz = 28.0;
    double subcarrier_spacing_khz = 120.0;
    int subcarriers = 100;
    double tx_power_dbm = 30.0;
    double noise_figure_db = 5.0;
    LosMode los_mode = LosMode::statistical;
    bool shadowing = true;
    bool optional_nlos = false;
    bool permissive = false;
    bool spatial_consistency = true;
    double update_period_s = 0.1;
    bool redraw_phases = false;
    bool blockage = false;
    int blockers = 4;
    Orientation orientation = Orientation::landscape;
    BeamformingMethod beamforming = BeamformingMethod::power;
    BeamUpdate beam_update = BeamUpdate::on_change;
    AttachPolicy attach = AttachPolicy::nearest;
    BuildingType building_type = BuildingType::residential;
    std::uint64_t seed = 1;
    double duration_s = 1.0;
    double tick_s = 0.1;
    int sweep_points = 50;
    std::vector<ScenarioKind> sweep_scenarios; // empty: the configured scenario only
    std::string parameter_file;

    std::vector<BsConfig> bs;
    std::vector<UtConfig> ut;
    std::vector<Building> buildings;

    friend bool operator==(const SimConfig&, const SimConfig&) = default;

    WorldConfig to_world() const
    {
        WorldConfig w;
        w.scenario = scenario;
        w.grid.fc = frequency_ghz * 1e9;
        w.grid.spacing = subcarrier_spacing_khz * 1e3;
        w.grid.count = subcarriers;
        w.tx_power_dbm = tx_power_dbm;
        w.noise_figure_db = noise_figure_db;
        w.los_mode = los_mode;
        w.shadowing = shadowing;
        w.optional_nlos = optional_nlos;
        w.permissive = permissive;
        w.update.t_per = update_period_s;
        w.update.spatial_consistency = spatial_consistency;
        w.update.blockage = blockage;
        w.update.redraw_phases = redraw_phases;
        w.blockers = blockers;
        w.orientation = orientation;
        w.beamforming = beamforming;
        w.beam_update = beam_update;
        w.attach = attach;
        w.default_building = building_type;
        w.seed = seed;
        for (const auto& b : bs)
            w.bs.push_back({b.id, b.position, b.panel.to_panel()});
        for (const auto& u : ut)
            w.ut.push_back({u.id, u.trace, u.indoor, u.panel.to_panel()});
        w.buildings = buildings;
        return w;
    }

    /// Throws ConfigError naming the first violated constraint.
    void validate() const
    {
        if (!(duration_s >= 0.0))
            throw ConfigError("duration_s: must be >= 0");
        if (!(tick_s > 0.0))
            throw ConfigError("tick_s: must be positive");
        if (sweep_points < 2)
            throw ConfigError("sweep_points: need at least 2");
        if (subcarriers < 1)
            throw ConfigError("subcarriers: need at least 1");
        const auto w = to_world();
        w.validate();
        for (const auto& u : w.ut)
            if (u.trace.size() > 1 && (u.trace.front().t > 0.0 || u.trace.back().t < duration_s))
                throw ConfigError("ut " + std::to_string(u.id) + ": waypoints must span [0, duration_s]");
        for (const auto& u : w.ut)
            for (const auto& b : w.bs)
                for (const auto& wp : u.trace)
                    if (wp.position == b.position)
                        throw ConfigError("ut " + std::to_string(u.id) + ": waypoint coincides with bs " +
                                          std::to_string(b.id));
    }
};

namespace detail {

/// Shortest text that parses back to the same double.
inline std::string fmt_num(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<double> parse_numbers(const std::string& key, const std::string& v, std::size_t count)
{
    std::istringstream in(v);
    std::vector<double> out;
    for (std::string tok; in >> tok;)
    {
        double x = 0.0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
            throw ConfigError(key + ": not a number: " + tok);
        out.push_back(x);
    }
    if (count && out.size() != count)
        throw ConfigError(key + ": expected " + std::to_string(count) + " numbers, got " + std::to_string(out.size()));
    return out;
}

inline double parse_double(const std::string& key, const std::string& v) { return parse_numbers(key, v, 1)[0]; }

inline long long parse_int(const std::string& key, const std::string& v)
{
    const double d = parse_double(key, v);
    if (d != std::floor(d))
        throw ConfigError(key + ": expected an integer, got " + v);
    return static_cast<long long>(d);
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v)
{
    std::uint64_t x = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError(key + ": expected an unsigned integer, got " + v);
    return x;
}

inline bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "on" || v == "1")
        return true;
    if (v == "false" || v == "off" || v == "0")
        return false;
    throw ConfigError(key + ": expected true or false, got " + v);
}

inline Vec3 parse_vec(const std::string& key, const std::string& v)
{
    const auto n = parse_numbers(key, v, 3);
    return {n[0], n[1], n[2]};
}

inline PatternMode parse_pattern(const std::string& key, const std::string& v)
{
    if (v == "isotropic")
        return PatternMode::isotropic;
    if (v == "element_3gpp")
        return PatternMode::element_3gpp;
    throw ConfigError(key + ": expected isotropic or element_3gpp, got " + v);
}

inline bool panel_key(PanelConfig& p, const std::string& key, const std::string& v)
{
    if (key == "panel")
    {
        const auto n = parse_numbers(key, v, 4);
        if (n[0] != std::floor(n[0]) || n[1] != std::floor(n[1]))
            throw ConfigError("panel: rows and cols must be integers");
        p.rows = static_cast<int>(n[0]);
        p.cols = static_cast<int>(n[1]);
        p.d_h = n[2];
        p.d_v = n[3];
    }
    else if (key == "orientation_deg")
        p.orientation_deg = parse_double(key, v);
    else if (key == "fov_deg")
        p.fov_deg = parse_double(key, v);
    else if (key == "pattern")
        p.pattern = parse_pattern(key, v);
    else
        return false;
    return true;
}

inline std::string vec_text(Vec3 p) { return fmt_num(p.x) + " " + fmt_num(p.y) + " " + fmt_num(p.z); }

inline void write_panel(std::ostream& os, const PanelConfig& p)
{
    os << "panel = " << p.rows << ' ' << p.cols << ' ' << fmt_num(p.d_h) << ' ' << fmt_num(p.d_v) << '\n';
    os << "orientation_deg = " << fmt_num(p.orientation_deg) << '\n';
    os << "fov_deg = " << fmt_num(p.fov_deg) << '\n';
    os << "pattern = " << to_string(p.pattern) << '\n';
}

} // namespace detail

/// Parses the key = value format. Blocks start with [bs], [ut] or [building].
inline SimConfig parse_config(const std::string& text, const std::string& source = "<config>")
{
    using namespace detail;
    SimConfig c;
    enum class Block
    {
        global,
        bs,
        ut,
        building
    } block = Block::global;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool sweep_set = false;
    while (std::getline(in, line))
    {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        auto where = [&] { return source + ":" + std::to_string(lineno) + ": "; };
        try
        {
            if (line.front() == '[')
            {
                if (line == "[bs]")
                {
                    block = Block::bs;
                    c.bs.emplace_back();
                }
                else if (line == "[ut]")
                {
                    block = Block::ut;
                    c.ut.emplace_back();
                }
                else if (line == "[building]")
                {
                    block = Block::building;
                    c.buildings.emplace_back();
                }
                else
                    throw ConfigError("unknown block " + line);
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("expected key = value");
            const std::string key = trim(line.substr(0, eq));
            const std::string v = trim(line.substr(eq + 1));
            if (block == Block::bs)
            {
                auto& b = c.bs.back();
                if (key == "id")
                    b.id = static_cast<int>(parse_int(key, v));
                else if (key == "position")
                    b.position = parse_vec(key, v);
                else if (!panel_key(b.panel, key, v))
                    throw ConfigError("unknown bs key '" + key + "'");
                continue;
            }
            if (block == Block::ut)
            {
                auto& u = c.ut.back();
                if (key == "id")
                    u.id = static_cast<int>(parse_int(key, v));
                else if (key == "indoor")
                    u.indoor = parse_bool(key, v);
                else if (key == "waypoint")
                {
                    const auto n = parse_numbers(key, v, 4);
                    u.trace.push_back({n[0], {n[1], n[2], n[3]}});
                }
                else if (!panel_key(u.panel, key, v))
                    throw ConfigError("unknown ut key '" + key + "'");
                continue;
            }
            if (block == Block::building)
            {
                auto& b = c.buildings.back();
                if (key == "min")
                    b.min = parse_vec(key, v);
                else if (key == "max")
                    b.max = parse_vec(key, v);
                else if (key == "type")
                    b.type = parse_building_type(v);
                else
                    throw ConfigError("unknown building key '" + key + "'");
                continue;
            }
            if (key == "scenario")
                c.scenario = parse_scenario(v);
            else if (key == "frequency_ghz")
                c.frequency_ghz = parse_double(key, v);
            else if (key == "subcarrier_spacing_khz")
                c.subcarrier_spacing_khz = parse_double(key, v);
            else if (key == "subcarriers")
                c.subcarriers = static_cast<int>(parse_int(key, v));
            else if (key == "tx_power_dbm")
                c.tx_power_dbm = parse_double(key, v);
            else if (key == "noise_figure_db")
                c.noise_figure_db = parse_double(key, v);
            else if (key == "los_mode")
                c.los_mode = parse_los_mode(v);
            else if (key == "shadowing")
                c.shadowing = parse_bool(key, v);
            else if (key == "optional_nlos")
                c.optional_nlos = parse_bool(key, v);
            else if (key == "permissive")
                c.permissive = parse_bool(key, v);
            else if (key == "spatial_consistency")
                c.spatial_consistency = parse_bool(key, v);
            else if (key == "update_period_s")
                c.update_period_s = parse_double(key, v);
            else if (key == "redraw_phases")
                c.redraw_phases = parse_bool(key, v);
            else if (key == "blockage")
                c.blockage = parse_bool(key, v);
            else if (key == "blockers")
                c.blockers = static_cast<int>(parse_int(key, v));
            else if (key == "orientation")
                c.orientation = parse_orientation(v);
            else if (key == "beamforming")
                c.beamforming = parse_beamforming_method(v);
            else if (key == "beam_update")
                c.beam_update = parse_beam_update(v);
            else if (key == "attach")
                c.attach = parse_attach_policy(v);
            else if (key == "building_type")
                c.building_type = parse_building_type(v);
            else if (key == "seed")
                c.seed = parse_u64(key, v);
            else if (key == "duration_s")
                c.duration_s = parse_double(key, v);
            else if (key == "tick_s")
                c.tick_s = parse_double(key, v);
            else if (key == "sweep_points")
                c.sweep_points = static_cast<int>(parse_int(key, v));
            else if (key == "sweep_scenarios")
            {
                if (sweep_set)
                    throw ConfigError("sweep_scenarios given twice");
                sweep_set = true;
                std::istringstream ss(v);
                for (std::string tok; ss >> tok;)
                {
                    if (tok == "all")
                        c.sweep_scenarios.assign(kAllScenarios.begin(), kAllScenarios.end());
                    else
                        c.sweep_scenarios.push_back(parse_scenario(tok));
                }
            }
            else if (key == "parameter_file")
                c.parameter_file = v;
            else
                throw ConfigError("unknown key '" + key + "'");
        }
        catch (const ConfigError& e)
        {
            throw ConfigError(where() + e.what());
        }
    }
    return c;
}

inline SimConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

/// Canonical text; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const SimConfig& c)
{
    using detail::fmt_num;
    auto b = [](bool v) { return v ? "true" : "false"; };
    std::ostringstream os;
    os << "scenario = " << to_string(c.scenario) << '\n';
    os << "frequency_ghz = " << fmt_num(c.frequency_ghz) << '\n';
    os << "subcarrier_spacing_khz = " << fmt_num(c.subcarrier_spacing_khz) << '\n';
    os << "subcarriers = " << c.subcarriers << '\n';
    os << "tx_power_dbm = " << fmt_num(c.tx_power_dbm) << '\n';
    os << "noise_figure_db = " << fmt_num(c.noise_figure_db) << '\n';
    os << "los_mode = " << to_string(c.los_mode) << '\n';
    os << "shadowing = " << b(c.shadowing) << '\n';
    os << "optional_nlos = " << b(c.optional_nlos) << '\n';
    os << "permissive = " << b(c.permissive) << '\n';
    os << "spatial_consistency = " << b(c.spatial_consistency) << '\n';
    os << "update_period_s = " << fmt_num(c.update_period_s) << '\n';
    os << "redraw_phases = " << b(c.redraw_phases) << '\n';
    os << "blockage = " << b(c.blockage) << '\n';
    os << "blockers = " << c.blockers << '\n';
    os << "orientation = " << to_string(c.orientation) << '\n';
    os << "beamforming = " << to_string(c.beamforming) << '\n';
    os << "beam_update = " << to_string(c.beam_update) << '\n';
    os << "attach = " << to_string(c.attach) << '\n';
    os << "building_type = " << to_string(c.building_type) << '\n';
    os << "seed = " << c.seed << '\n';
    os << "duration_s = " << fmt_num(c.duration_s) << '\n';
    os << "tick_s = " << fmt_num(c.tick_s) << '\n';
    os << "sweep_points = " << c.sweep_points << '\n';
    if (!c.sweep_scenarios.empty())
    {
        os << "sweep_scenarios =";
        for (auto k : c.sweep_scenarios)
            os << ' ' << to_string(k);
        os << '\n';
    }
    if (!c.parameter_file.empty())
        os << "parameter_file = " << c.parameter_file << '\n';
    for (const auto& x : c.bs)
    {
        os << "\n[bs]\nid = " << x.id << "\nposition = " << detail::vec_text(x.position) << '\n';
        detail::write_panel(os, x.panel);
    }
    for (const auto& x : c.ut)
    {
        os << "\n[ut]\nid = " << x.id << "\nindoor = " << b(x.indoor) << '\n';
        for (const auto& w : x.trace)
            os << "waypoint = " << fmt_num(w.t) << ' ' << detail::vec_text(w.position) << '\n';
        detail::write_panel(os, x.panel);
    }
    for (const auto& x : c.buildings)
        os << "\n[building]\nmin = " << detail::vec_text(x.min) << "\nmax = " << detail::vec_text(x.max)
           << "\ntype = " << to_string(x.type) << '\n';
    return os.str();
}

} // namespace mmwchan

#endif
