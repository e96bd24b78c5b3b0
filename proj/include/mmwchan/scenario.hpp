/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#ifndef MMWCHAN_SCENARIO_HPP
#define MMWCHAN_SCENARIO_HPP

#include "mmwchan/antenna.hpp"
#include "mmwchan/core.hpp"
#include "mmwchan/tables.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <vector>

namespace mmwchan {

enum class ScenarioKind
{
    UMi,
    UMa,
    RMa,
    InMO,
    InOO
};

inline constexpr std::array<ScenarioKind, 5> kAllScenarios = {ScenarioKind::UMi, ScenarioKind::UMa, ScenarioKind::RMa,
                                                              ScenarioKind::InMO, ScenarioKind::InOO};

inline std::string to_string(ScenarioKind k)
{
    switch (k)
    {
    case ScenarioKind::UMi:
        return "UMi";
    case ScenarioKind::UMa:
        return "UMa";
    case ScenarioKind::RMa:
        return "RMa";
    case ScenarioKind::InMO:
        return "InMO";
    case ScenarioKind::InOO:
        return "InOO";
    }
    return "?";
}

inline ScenarioKind parse_scenario(const std::string& s)
{
    for (auto k : kAllScenarios)
        if (to_string(k) == s)
            return k;
    throw ConfigError("unknown scenario '" + s + "' (expected UMi, UMa, RMa, InMO or InOO)");
}

inline bool is_indoor_scenario(ScenarioKind k) { return k == ScenarioKind::InMO || k == ScenarioKind::InOO; }

/// Per-scenario constants, read from the parameter tables.
struct ScenarioParams
{
    ScenarioKind kind = ScenarioKind::UMi;
    double isd_min = 0.0;
    double isd_max = 0.0;
    double h_bs_default = 0.0;
    double h_ut_min = 0.0;
    double h_ut_max = 0.0;
    double d2d_min = 0.0;
    double d2d_max = 0.0;
    double d3d_min = 0.0; // indoor only, 0 otherwise
    double d3d_max = 0.0; // indoor only, 0 otherwise
    double fc_min_hz = 0.0;
    double fc_max_hz = 0.0;
    double o2i_din_max = 0.0;
};

inline ScenarioParams scenario_params(ScenarioKind kind)
{
    const auto& s = parameters().section(to_string(kind));
    ScenarioParams p;
    p.kind = kind;
    p.isd_min = s.number("isd_m", 0);
    p.isd_max = s.number("isd_m", 1);
    p.h_bs_default = s.number("h_bs_m");
    p.h_ut_min = s.number("h_ut_m", 0);
    p.h_ut_max = s.number("h_ut_m", 1);
    p.d2d_min = s.number("d2d_m", 0);
    p.d2d_max = s.number("d2d_m", 1);
    if (s.has("d3d_m"))
    {
        p.d3d_min = s.number("d3d_m", 0);
        p.d3d_max = s.number("d3d_m", 1);
    }
    p.fc_min_hz = s.number("fc_ghz", 0) * 1e9;
    p.fc_max_hz = s.number("fc_ghz", 1) * 1e9;
    p.o2i_din_max = s.number_or("o2i_din_max_m", 0.0);
    return p;
}

inline void check_frequency(ScenarioKind kind, double fc_hz)
{
    const auto p = scenario_params(kind);
    if (!(fc_hz >= p.fc_min_hz && fc_hz <= p.fc_max_hz))
        throw ConfigError("carrier frequency " + std::to_string(fc_hz / 1e9) + " GHz outside " + to_string(kind) +
                          " range [" + std::to_string(p.fc_min_hz / 1e9) + ", " + std::to_string(p.fc_max_hz / 1e9) +
                          "] GHz");
}

enum class NodeRole
{
    BS,
    UT
};

struct NodeState
{
    int id = 0;
    NodeRole role = NodeRole::UT;
    Vec3 position;
    Vec3 velocity;
    bool indoor = false;
    AntennaPanel panel;
};

enum class BuildingType
{
    residential,
    commercial,
    office
};

inline std::string to_string(BuildingType t)
{
    switch (t)
    {
    case BuildingType::residential:
        return "residential";
    case BuildingType::commercial:
        return "commercial";
    case BuildingType::office:
        return "office";
    }
    return "?";
}

inline BuildingType parse_building_type(const std::string& s)
{
    for (auto t : {BuildingType::residential, BuildingType::commercial, BuildingType::office})
        if (to_string(t) == s)
            return t;
    throw ConfigError("unknown building type '" + s + "'");
}

/// Closed axis-aligned box.
struct Building
{
    Vec3 min;
    Vec3 max;
    BuildingType type = BuildingType::residential;

    friend bool operator==(const Building&, const Building&) = default;

    void validate() const
    {
        if (!(min.x < max.x && min.y < max.y && min.z < max.z))
            throw ConfigError("building min corner must be strictly below max corner on every axis");
    }

    bool contains(Vec3 p) const
    {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z && p.z <= max.z;
    }
};

struct LinkGeometry
{
    double d2d = 0.0;
    double d3d = 0.0;
    double azimuth = 0.0;   // [0, 2pi), direction a -> b
    double elevation = 0.0; // [-pi/2, pi/2]

    double zenith() const { return kPi / 2.0 - elevation; }
};

inline LinkGeometry link_geometry(Vec3 a, Vec3 b)
{
    if (!is_finite(a) || !is_finite(b))
        throw ConfigError("node position is not finite");
    const Vec3 d = b - a;
    LinkGeometry g;
    g.d2d = std::hypot(d.x, d.y);
    g.d3d = norm(d);
    if (g.d3d == 0.0)
        throw ConfigError("degenerate link: coincident node positions");
    g.azimuth = wrap_rad(std::atan2(d.y, d.x));
    g.elevation = std::atan2(d.z, g.d2d);
    return g;
}

inline LinkGeometry link_geometry(const NodeState& a, const NodeState& b) { return link_geometry(a.position, b.position); }

/// Slab test of the closed segment p1-p2 against one closed box.
inline bool segment_intersects_box(Vec3 p1, Vec3 p2, const Building& box)
{
    double t0 = 0.0;
    double t1 = 1.0;
    const std::array<double, 3> o{p1.x, p1.y, p1.z};
    const std::array<double, 3> d{p2.x - p1.x, p2.y - p1.y, p2.z - p1.z};
    const std::array<double, 3> lo{box.min.x, box.min.y, box.min.z};
    const std::array<double, 3> hi{box.max.x, box.max.y, box.max.z};
    for (int k = 0; k < 3; ++k)
    {
        if (d[k] == 0.0)
        {
            if (o[k] < lo[k] || o[k] > hi[k])
                return false;
            continue;
        }
        double ta = (lo[k] - o[k]) / d[k];
        double tb = (hi[k] - o[k]) / d[k];
        if (ta > tb)
            std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1)
            return false;
    }
    return true;
}

inline bool segment_intersects_buildings(Vec3 p1, Vec3 p2, const std::vector<Building>& buildings)
{
    return std::any_of(buildings.begin(), buildings.end(),
                       [&](const Building& b) { return segment_intersects_box(p1, p2, b); });
}

/// First building containing p, if any.
inline const Building* building_containing(Vec3 p, const std::vector<Building>& buildings)
{
    for (const auto& b : buildings)
        if (b.contains(p))
            return &b;
    return nullptr;
}

struct Waypoint
{
    double t = 0.0;
    Vec3 position;

    friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

using MobilityTrace = std::vector<Waypoint>;

inline void validate_trace(const MobilityTrace& trace)
{
    if (trace.empty())
        throw ConfigError("mobility trace is empty");
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (!(trace[i].t > trace[i - 1].t))
            throw ConfigError("mobility waypoints must have strictly increasing times");
}

namespace detail {

inline std::size_t trace_segment(const MobilityTrace& trace, double t)
{
    validate_trace(trace);
    if (trace.size() == 1)
        return 0;
    if (t < trace.front().t || t > trace.back().t)
        throw std::out_of_range("time " + std::to_string(t) + " outside mobility trace span");
    auto it = std::upper_bound(trace.begin(), trace.end(), t, [](double v, const Waypoint& w) { return v < w.t; });
    std::size_t i = static_cast<std::size_t>(it - trace.begin());
    return std::min(i == 0 ? 0 : i - 1, trace.size() - 2);
}

} // namespace detail

/// Piecewise-linear position. A single waypoint is a static node.
inline Vec3 position_at(const MobilityTrace& trace, double t)
{
    const std::size_t i = detail::trace_segment(trace, t);
    if (trace.size() == 1)
        return trace.front().position;
    const auto& a = trace[i];
    const auto& b = trace[i + 1];
    const double f = (t - a.t) / (b.t - a.t);
    return a.position + f * (b.position - a.position);
}

inline Vec3 position_at(const NodeState&, const MobilityTrace& trace, double t) { return position_at(trace, t); }

/// Slope of the segment containing t (the later one at a waypoint).
inline Vec3 velocity_at(const MobilityTrace& trace, double t)
{
    const std::size_t i = detail::trace_segment(trace, t);
    if (trace.size() == 1)
        return {};
    const auto& a = trace[i];
    const auto& b = trace[i + 1];
    return (1.0 / (b.t - a.t)) * (b.position - a.position);
}

} // namespace mmwchan

#endif
