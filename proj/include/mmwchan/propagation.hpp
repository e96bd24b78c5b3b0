/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#ifndef MMWCHAN_PROPAGATION_HPP
#define MMWCHAN_PROPAGATION_HPP

#include "mmwchan/core.hpp"
#include "mmwchan/scenario.hpp"
#include "mmwchan/tables.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace mmwchan {

enum class LosState
{
    LOS,
    NLOS
};

enum class LosSource
{
    deterministic,
    statistical,
    geometric
};

struct LosCondition
{
    LosState state = LosState::LOS;
    LosSource source = LosSource::deterministic;

    bool los() const { return state == LosState::LOS; }
};

enum class LosMode
{
    los,
    nlos,
    statistical,
    geometric
};

inline std::string to_string(LosMode m)
{
    switch (m)
    {
    case LosMode::los:
        return "los";
    case LosMode::nlos:
        return "nlos";
    case LosMode::statistical:
        return "statistical";
    case LosMode::geometric:
        return "geometric";
    }
    return "?";
}

inline LosMode parse_los_mode(const std::string& s)
{
    for (auto m : {LosMode::los, LosMode::nlos, LosMode::statistical, LosMode::geometric})
        if (to_string(m) == s)
            return m;
    throw ConfigError("unknown LOS mode '" + s + "' (expected los, nlos, statistical or geometric)");
}

/// Selects the parameter table of a link: O2I overrides the LOS state.
enum class Condition
{
    LOS,
    NLOS,
    O2I
};

inline std::string to_string(Condition c)
{
    switch (c)
    {
    case Condition::LOS:
        return "LOS";
    case Condition::NLOS:
        return "NLOS";
    case Condition::O2I:
        return "O2I";
    }
    return "?";
}

inline Condition link_condition(LosState los, bool o2i)
{
    if (o2i)
        return Condition::O2I;
    return los == LosState::LOS ? Condition::LOS : Condition::NLOS;
}

inline const ParamSection& condition_section(ScenarioKind kind, Condition c)
{
    const std::string name = to_string(kind) + " " + to_string(c);
    if (!parameters().has(name))
        throw ConfigError("scenario " + to_string(kind) + " has no " + to_string(c) + " parameters");
    return parameters().section(name);
}

/// Everything the propagation functions need to know about one BS-UT pair.
struct LinkContext
{
    ScenarioKind scenario = ScenarioKind::UMi;
    Vec3 bs;
    Vec3 ut;
    bool ut_indoor = false;
    double fc_hz = 28e9;
    const std::vector<Building>* buildings = nullptr;

    LinkGeometry geometry() const { return link_geometry(bs, ut); }
    double h_bs() const { return bs.z; }
    double h_ut() const { return ut.z; }
};

/// LOS probability for a horizontal distance and UT height.
inline double los_probability(ScenarioKind kind, double d2d, double h_ut)
{
    if (!(d2d >= 0.0))
        throw ConfigError("LOS probability needs d2D >= 0");
    const auto& s = parameters().section(to_string(kind));
    const auto c = s.numbers("plos");
    switch (kind)
    {
    case ScenarioKind::RMa:
        return d2d <= c.at(0) ? 1.0 : std::exp(-(d2d - c.at(0)) / c.at(1));
    case ScenarioKind::UMi:
        if (d2d <= c.at(0))
            return 1.0;
        return c.at(0) / d2d + std::exp(-d2d / c.at(1)) * (1.0 - c.at(0) / d2d);
    case ScenarioKind::UMa: {
        if (d2d <= c.at(0))
            return 1.0;
        const double ch = h_ut <= 13.0 ? 0.0 : std::pow((h_ut - 13.0) / 10.0, 1.5);
        const double base = c.at(0) / d2d + std::exp(-d2d / c.at(1)) * (1.0 - c.at(0) / d2d);
        const double p = base * (1.0 + ch * 5.0 / 4.0 * std::pow(d2d / 100.0, 3.0) * std::exp(-d2d / 150.0));
        return std::min(p, 1.0);
    }
    case ScenarioKind::InMO:
    case ScenarioKind::InOO:
        // d1 decay1 d2 scale decay2
        if (d2d <= c.at(0))
            return 1.0;
        if (kind == ScenarioKind::InMO ? d2d < c.at(2) : d2d <= c.at(2))
            return std::exp(-(d2d - c.at(0)) / c.at(1));
        return c.at(3) * std::exp(-(d2d - c.at(2)) / c.at(4));
    }
    return 0.0;
}

/// LOS state of a link under the configured mode.
inline LosCondition assign_los(const LinkContext& link, LosMode mode, Rng& rng)
{
    switch (mode)
    {
    case LosMode::los:
        return {LosState::LOS, LosSource::deterministic};
    case LosMode::nlos:
        return {LosState::NLOS, LosSource::deterministic};
    case LosMode::statistical: {
        const auto g = link.geometry();
        const double p = los_probability(link.scenario, g.d2d, link.h_ut());
        const double ref = rng.uniform();
        return {ref < p ? LosState::LOS : LosState::NLOS, LosSource::statistical};
    }
    case LosMode::geometric: {
        if (!link.buildings)
            throw ConfigError("geometric LOS mode needs building data");
        // A UT inside a building sees its own walls; only other buildings decide LOS.
        const Building* home = building_containing(link.ut, *link.buildings);
        bool blocked = false;
        for (const auto& b : *link.buildings)
            if (&b != home && segment_intersects_box(link.bs, link.ut, b))
                blocked = true;
        return {blocked ? LosState::NLOS : LosState::LOS, LosSource::geometric};
    }
    }
    return {};
}

/// Distance outside a pathloss formula's validity range.
class DistanceBoundsError : public ConfigError
{
  public:
    DistanceBoundsError(const std::string& what, std::string bound, double limit, double value)
        : ConfigError(what), m_bound(std::move(bound)), m_limit(limit), m_value(value)
    {
    }
    const std::string& bound() const { return m_bound; }
    double limit() const { return m_limit; }
    double value() const { return m_value; }

  private:
    std::string m_bound;
    double m_limit;
    double m_value;
};

/// Breakpoint distance of the LOS dual-slope formulas, metres.
inline double breakpoint_distance(ScenarioKind kind, double fc_hz, double h_bs, double h_ut)
{
    if (kind == ScenarioKind::RMa)
        return 2.0 * kPi * h_bs * h_ut * fc_hz / kSpeedOfLight;
    // Effective environment height fixed at 1 m.
    constexpr double h_e = 1.0;
    return 4.0 * (h_bs - h_e) * (h_ut - h_e) * fc_hz / kSpeedOfLight;
}

namespace detail {

inline double rma_los(const ParamSection& s, double fc, double d2d, double d3d, double h_bs, double h_ut)
{
    const double h = s.number("rma_building_h");
    const double dbp = breakpoint_distance(ScenarioKind::RMa, fc * 1e9, h_bs, h_ut);
    auto pl1 = [&](double d) {
        return 20.0 * std::log10(40.0 * kPi * d * fc / 3.0) + std::min(0.03 * std::pow(h, 1.72), 10.0) * std::log10(d) -
               std::min(0.044 * std::pow(h, 1.72), 14.77) + 0.002 * std::log10(h) * d;
    };
    if (d2d <= dbp)
        return pl1(d3d);
    return pl1(dbp) + 40.0 * std::log10(d3d / dbp);
}

inline double rma_nlos(const ParamSection& s, double fc, double d3d, double h_bs, double h_ut)
{
    const double h = s.number("rma_building_h");
    const double w = s.number("rma_street_w");
    const double lh = std::log10(11.75 * h_ut);
    return 161.04 - 7.1 * std::log10(w) + 7.5 * std::log10(h) - (24.37 - 3.7 * (h / h_bs) * (h / h_bs)) * std::log10(h_bs) +
           (43.42 - 3.1 * std::log10(h_bs)) * (std::log10(d3d) - 3.0) + 20.0 * std::log10(fc) - (3.2 * lh * lh - 4.97);
}

inline double urban_los(const ParamSection& s, ScenarioKind kind, double fc, double d2d, double d3d, double h_bs,
                        double h_ut)
{
    const auto a = s.numbers("pl_los");
    if (kind == ScenarioKind::InMO || kind == ScenarioKind::InOO)
        return a[0] + a[1] * std::log10(d3d) + a[2] * std::log10(fc);
    const double dbp = breakpoint_distance(kind, fc * 1e9, h_bs, h_ut);
    if (d2d <= dbp)
        return a[0] + a[1] * std::log10(d3d) + a[2] * std::log10(fc);
    const auto b = s.numbers("pl_los_bp");
    return b[0] + b[1] * std::log10(d3d) + b[2] * std::log10(fc) -
           b[3] * std::log10(dbp * dbp + (h_bs - h_ut) * (h_bs - h_ut));
}

} // namespace detail

/// Deterministic pathloss in dB. NLOS values are floored at the LOS value.
///
/// Distances outside the formula's validity range throw DistanceBoundsError,
/// unless `permissive` is set, in which case d2D is clamped into range.
inline double pathloss(ScenarioKind kind, LosState los, double fc_hz, double d2d, double d3d, double h_bs, double h_ut,
                       bool optional_nlos = false, bool permissive = false)
{
    check_frequency(kind, fc_hz);
    const auto sp = scenario_params(kind);
    const auto& s = parameters().section(to_string(kind));
    const double dh = h_bs - h_ut;
    auto violate = [&](const std::string& bound, double limit, double value) {
        throw DistanceBoundsError(to_string(kind) + " pathloss: distance " + std::to_string(value) + " m violates " +
                                      bound + " " + std::to_string(limit) + " m",
                                  bound, limit, value);
    };
    if (is_indoor_scenario(kind))
    {
        if (d3d < sp.d3d_min || d3d > sp.d3d_max)
        {
            if (!permissive)
                violate(d3d < sp.d3d_min ? "d3D_min" : "d3D_max", d3d < sp.d3d_min ? sp.d3d_min : sp.d3d_max, d3d);
            d3d = std::clamp(d3d, sp.d3d_min, sp.d3d_max);
            d2d = std::sqrt(std::max(d3d * d3d - dh * dh, 0.0));
        }
    }
    else
    {
        double upper = sp.d2d_max;
        if (kind == ScenarioKind::RMa && los == LosState::NLOS)
            upper = s.number("d2d_nlos_max_m");
        if (d2d < sp.d2d_min || d2d > upper)
        {
            if (!permissive)
                violate(d2d < sp.d2d_min ? "d2D_min" : "d2D_max", d2d < sp.d2d_min ? sp.d2d_min : upper, d2d);
            d2d = std::clamp(d2d, sp.d2d_min, upper);
            d3d = std::hypot(d2d, dh);
        }
    }

    const double fc = fc_hz / 1e9;
    double pl_los = 0.0;
    if (kind == ScenarioKind::RMa)
        pl_los = detail::rma_los(s, fc, d2d, d3d, h_bs, h_ut);
    else
        pl_los = detail::urban_los(s, kind, fc, d2d, d3d, h_bs, h_ut);
    if (los == LosState::LOS)
        return pl_los;

    double pl_nlos = 0.0;
    if (kind == ScenarioKind::RMa)
    {
        if (optional_nlos)
            throw ConfigError("RMa has no optional NLOS pathloss model");
        pl_nlos = detail::rma_nlos(s, fc, d3d, h_bs, h_ut);
    }
    else if (optional_nlos)
    {
        const auto a = s.numbers("pl_nlos_opt");
        pl_nlos = a[0] + a[1] * std::log10(d3d) + a[2] * std::log10(fc);
    }
    else
    {
        const auto a = s.numbers("pl_nlos");
        pl_nlos = a[0] + a[1] * std::log10(d3d) + a[2] * std::log10(fc) - a[3] * (h_ut - 1.5);
    }
    return std::max(pl_los, pl_nlos);
}

/// Shadow fading standard deviation, dB.
inline double shadow_sigma(ScenarioKind kind, Condition cond, double fc_hz, double d2d, double h_bs, double h_ut,
                           bool optional_nlos = false)
{
    const auto& sc = parameters().section(to_string(kind));
    if (cond == Condition::NLOS && optional_nlos && sc.has("sigma_sf_nlos_opt_db"))
        return sc.number("sigma_sf_nlos_opt_db");
    if (kind == ScenarioKind::RMa && cond == Condition::LOS && d2d > breakpoint_distance(kind, fc_hz, h_bs, h_ut))
        return sc.number("sigma_sf_los_bp_db");
    return condition_section(kind, cond).number("sigma_sf_db");
}

/// Shadowing decorrelation distance, metres.
inline double shadow_correlation_distance(ScenarioKind kind, Condition cond)
{
    return condition_section(kind, cond).number("d_cor_m");
}

enum class O2iModel
{
    low_loss,
    high_loss
};

inline std::string to_string(O2iModel m) { return m == O2iModel::low_loss ? "low_loss" : "high_loss"; }

/// RMa always uses low loss; UMi/UMa follow the building type.
inline O2iModel select_o2i_model(ScenarioKind kind, BuildingType type)
{
    if (is_indoor_scenario(kind))
        throw ConfigError("O2I penetration does not apply to indoor office scenarios");
    if (kind == ScenarioKind::RMa)
        return O2iModel::low_loss;
    return type == BuildingType::residential ? O2iModel::low_loss : O2iModel::high_loss;
}

/// Through-wall loss, dB (no indoor distance, no random term).
inline double o2i_material_loss(O2iModel model, double fc_hz)
{
    const auto& c = parameters().section("common");
    const double f = fc_hz / 1e9;
    auto material = [&](const char* key) { return c.number(key, 0) + c.number(key, 1) * f; };
    const double l_glass = material("o2i_glass");
    const double l_iir = material("o2i_iirglass");
    const double l_concrete = material("o2i_concrete");
    const double k = c.number("o2i_const");
    if (model == O2iModel::low_loss)
    {
        const auto mix = c.numbers("o2i_low_mix");
        return k - 10.0 * std::log10(mix[0] * std::pow(10.0, -l_glass / 10.0) + mix[1] * std::pow(10.0, -l_concrete / 10.0));
    }
    const auto mix = c.numbers("o2i_high_mix");
    return k - 10.0 * std::log10(mix[0] * std::pow(10.0, -l_iir / 10.0) + mix[1] * std::pow(10.0, -l_concrete / 10.0));
}

inline double o2i_sigma(O2iModel model)
{
    return parameters().section("common").number(model == O2iModel::low_loss ? "o2i_low_sigma" : "o2i_high_sigma");
}

/// Penetration loss in dB. With rng == nullptr only the deterministic part is returned.
inline double o2i_penetration(O2iModel model, double fc_hz, double d2d_in, Rng* rng)
{
    if (!(d2d_in >= 0.0))
        throw ConfigError("indoor distance must be >= 0");
    const double per_m = parameters().section("common").number("o2i_indoor_per_m");
    double loss = o2i_material_loss(model, fc_hz) + per_m * d2d_in;
    if (rng)
        loss += rng->normal(0.0, o2i_sigma(model));
    return std::max(loss, 0.0);
}

/// Penetration loss for a link; the UT must be indoor.
inline double o2i_penetration(const LinkContext& link, O2iModel model, double d2d_in, Rng* rng)
{
    if (!link.ut_indoor)
        throw ConfigError("O2I penetration requested for an outdoor UT");
    return o2i_penetration(model, link.fc_hz, d2d_in, rng);
}

/// Indoor distance: minimum of two uniform draws over the scenario range.
inline double draw_indoor_distance(ScenarioKind kind, Rng& rng)
{
    const double hi = scenario_params(kind).o2i_din_max;
    const double a = rng.uniform(0.0, hi);
    const double b = rng.uniform(0.0, hi);
    return std::min(a, b);
}

/// Expected value of draw_indoor_distance.
inline double mean_indoor_distance(ScenarioKind kind) { return scenario_params(kind).o2i_din_max / 3.0; }

struct ShadowingState
{
    double value = 0.0; // dB
    Vec3 last_position;
    double sigma = 0.0; // dB
    double d_cor = 1.0; // m
    bool initialized = false;
};

/// Stationary start: value ~ N(0, sigma^2).
inline ShadowingState shadowing_init(double sigma, double d_cor, Vec3 position, Rng& rng)
{
    if (!(d_cor > 0.0))
        throw ConfigError("shadowing correlation distance must be positive");
    ShadowingState s;
    s.sigma = sigma;
    s.d_cor = d_cor;
    s.last_position = position;
    s.value = rng.normal(0.0, sigma);
    s.initialized = true;
    return s;
}

/// First-order filter in travelled horizontal distance.
inline ShadowingState shadowing_update(ShadowingState state, Vec3 new_position, Rng& rng)
{
    const double dd = horizontal_distance(state.last_position, new_position);
    if (dd == 0.0)
        return state;
    const double r = std::exp(-dd / state.d_cor);
    state.value = r * state.value + std::sqrt(1.0 - r * r) * state.sigma * rng.normal();
    state.last_position = new_position;
    return state;
}

struct PathlossResult
{
    double pathloss = 0.0;
    double shadowing = 0.0;
    double o2i_penetration = 0.0;
    double total = 0.0;

    static PathlossResult make(double pl, double sf, double o2i) { return {pl, sf, o2i, pl + sf + o2i}; }
};

} // namespace mmwchan

#endif
