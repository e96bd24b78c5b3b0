/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#ifndef MMWCHAN_HARNESS_HPP
#define MMWCHAN_HARNESS_HPP

#include "mmwchan/config.hpp"

#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace mmwchan {

inline constexpr const char* kVersion = "0.1.0";

struct SweepRow
{
    ScenarioKind scenario = ScenarioKind::UMi;
    double fc = 0.0; // Hz
    double d3d = 0.0;
    double d2d = 0.0;
    double los_db = 0.0;
    double nlos_db = 0.0;
    std::optional<double> o2i_db;
    double los_sf_db = 0.0;
    double nlos_sf_db = 0.0;
    std::optional<double> o2i_sf_db;
};

/// Distance span of the pathloss sweep for one scenario.
struct SweepPlan
{
    ScenarioKind scenario = ScenarioKind::UMi;
    double fc = 0.0;
    double h_bs = 0.0;
    double h_ut = 0.0;
    double d3d_start = 0.0;
    double d3d_end = 0.0;
};

inline SweepPlan sweep_plan(ScenarioKind kind, double fc_hz)
{
    const auto sp = scenario_params(kind);
    const auto& s = parameters().section(to_string(kind));
    SweepPlan p;
    p.scenario = kind;
    p.fc = std::clamp(fc_hz, sp.fc_min_hz, sp.fc_max_hz);
    p.h_bs = sp.h_bs_default;
    p.h_ut = is_indoor_scenario(kind) ? 1.0 : 1.5;
    const double d2d_min = s.has("sweep_d2d_min_m") ? s.number("sweep_d2d_min_m") : sp.d2d_min;
    p.d3d_start = std::hypot(d2d_min, p.h_bs - p.h_ut);
    p.d3d_end = is_indoor_scenario(kind) ? 100.0 : 1000.0;
    return p;
}

/// Log-spaced pathloss rows. Shadowing columns follow an AR(1) walk along the sweep.
inline std::vector<SweepRow> sweep_pathloss(const SimConfig& cfg)
{
    std::vector<ScenarioKind> kinds = cfg.sweep_scenarios;
    if (kinds.empty())
        kinds.push_back(cfg.scenario);
    std::vector<SweepRow> rows;
    for (auto kind : kinds)
    {
        const auto plan = sweep_plan(kind, cfg.frequency_ghz * 1e9);
        const double dh = plan.h_bs - plan.h_ut;
        const bool outdoor = !is_indoor_scenario(kind);
        std::optional<O2iModel> o2i_model;
        if (outdoor)
            o2i_model = select_o2i_model(kind, cfg.building_type);
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(kind), Feature::shadowing));
        ShadowingState sf_los, sf_nlos, sf_o2i;
        for (int i = 0; i < cfg.sweep_points; ++i)
        {
            const double f = static_cast<double>(i) / (cfg.sweep_points - 1);
            const double d3d = plan.d3d_start * std::pow(plan.d3d_end / plan.d3d_start, f);
            const double d2d = std::sqrt(std::max(d3d * d3d - dh * dh, 0.0));
            SweepRow r;
            r.scenario = kind;
            r.fc = plan.fc;
            r.d3d = d3d;
            r.d2d = d2d;
            r.los_db = pathloss(kind, LosState::LOS, plan.fc, d2d, d3d, plan.h_bs, plan.h_ut, false, cfg.permissive);
            r.nlos_db = pathloss(kind, LosState::NLOS, plan.fc, d2d, d3d, plan.h_bs, plan.h_ut, cfg.optional_nlos,
                                 cfg.permissive);
            if (o2i_model)
                r.o2i_db = r.nlos_db + o2i_penetration(*o2i_model, plan.fc, mean_indoor_distance(kind), nullptr);
            r.los_sf_db = r.los_db;
            r.nlos_sf_db = r.nlos_db;
            if (r.o2i_db)
                r.o2i_sf_db = *r.o2i_db;
            if (cfg.shadowing)
            {
                const Vec3 pos{d2d, 0.0, plan.h_ut};
                auto step = [&](ShadowingState& st, Condition c) {
                    if (!st.initialized)
                        st = shadowing_init(shadow_sigma(kind, c, plan.fc, d2d, plan.h_bs, plan.h_ut, cfg.optional_nlos),
                                            shadow_correlation_distance(kind, c), pos, rng);
                    else
                    {
                        st.sigma = shadow_sigma(kind, c, plan.fc, d2d, plan.h_bs, plan.h_ut, cfg.optional_nlos);
                        st = shadowing_update(st, pos, rng);
                    }
                    return st.value;
                };
                r.los_sf_db += step(sf_los, Condition::LOS);
                r.nlos_sf_db += step(sf_nlos, Condition::NLOS);
                if (r.o2i_sf_db)
                    *r.o2i_sf_db += step(sf_o2i, Condition::O2I);
            }
            rows.push_back(r);
        }
    }
    return rows;
}

namespace detail {

inline std::string fixed(double v, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

inline std::uint64_t fnv1a64(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s)
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p)
{
    std::ofstream f(p, std::ios::binary);
    if (!f)
        throw RuntimeError("cannot write " + p.string());
    return f;
}

/// Applies a parameter override file for the lifetime of the guard.
class ParameterScope
{
  public:
    explicit ParameterScope(const std::string& path)
    {
        if (!path.empty())
        {
            load_parameter_overrides(path);
            m_active = true;
        }
    }
    ~ParameterScope()
    {
        if (m_active)
            reset_parameters();
    }
    ParameterScope(const ParameterScope&) = delete;
    ParameterScope& operator=(const ParameterScope&) = delete;

  private:
    bool m_active = false;
};

inline const char* kPlotPathloss = R"(import csv
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "pathloss_sweep.csv"
rows = defaultdict(list)
with open(path) as f:
    for r in csv.DictReader(f):
        rows[r["scenario"]].append(r)

fig, ax = plt.subplots()
for name, rs in rows.items():
    d = [float(r["d3d_m"]) for r in rs]
    for col, style in (("los", "-"), ("nlos", "-"), ("o2i", "-")):
        if not rs[0][col + "_db"]:
            continue
        line, = ax.plot(d, [float(r[col + "_sf_db"]) for r in rs], style, label=f"{name} {col}")
        ax.plot(d, [float(r[col + "_db"]) for r in rs], "--", color=line.get_color())
ax.set_xscale("log")
ax.set_xlabel("3D distance [m]")
ax.set_ylabel("pathloss [dB]")
ax.grid(True, which="both", alpha=0.3)
ax.legend(fontsize="small")
fig.savefig("pathloss_sweep.png", dpi=150)
)";

inline const char* kPlotSinr = R"(import csv
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

base = sys.argv[1] if len(sys.argv) > 1 else "."
grid = defaultdict(dict)
with open(f"{base}/sinr.csv") as f:
    for r in csv.DictReader(f):
        grid[int(r["ut"])][(float(r["t_s"]), float(r["f_offset_hz"]))] = float(r["sinr_db"])
wide = defaultdict(list)
with open(f"{base}/sinr_wideband.csv") as f:
    for r in csv.DictReader(f):
        wide[int(r["ut"])].append((float(r["t_s"]), float(r["wideband_sinr_db"])))

for ut, cells in grid.items():
    ts = sorted({k[0] for k in cells})
    fs = sorted({k[1] for k in cells})
    z = np.array([[cells[(t, fo)] for t in ts] for fo in fs])
    fig, (a0, a1) = plt.subplots(2, 1, sharex=True)
    m = a0.pcolormesh(ts, np.array(fs) / 1e6, z, shading="auto")
    fig.colorbar(m, ax=a0, label="SINR [dB]")
    a0.set_ylabel("frequency offset [MHz]")
    a1.plot(*zip(*wide[ut]))
    a1.set_xlabel("time [s]")
    a1.set_ylabel("wideband SINR [dB]")
    fig.savefig(f"sinr_ut{ut}.png", dpi=150)
)";

inline const char* kPlotClusters = R"(import csv
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "cluster_power.csv"
series = defaultdict(lambda: defaultdict(list))
with open(path) as f:
    for r in csv.DictReader(f):
        series[int(r["ut"])][int(r["cluster"])].append((float(r["t_s"]), float(r["power_fraction"])))

for ut, clusters in series.items():
    fig, ax = plt.subplots()
    for n, pts in sorted(clusters.items()):
        ax.plot(*zip(*pts), label=f"cluster {n}")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("power fraction")
    ax.set_yscale("log")
    ax.legend(fontsize="x-small", ncol=2)
    fig.savefig(f"cluster_power_ut{ut}.png", dpi=150)
)";

} // namespace detail

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows)
{
    using detail::fixed;
    os << "scenario,fc_ghz,d3d_m,d2d_m,los_db,nlos_db,o2i_db,los_sf_db,nlos_sf_db,o2i_sf_db\n";
    for (const auto& r : rows)
    {
        os << to_string(r.scenario) << ',' << fixed(r.fc / 1e9, 3) << ',' << fixed(r.d3d, 4) << ','
           << fixed(r.d2d, 4) << ',' << fixed(r.los_db, 4) << ',' << fixed(r.nlos_db, 4) << ','
           << (r.o2i_db ? fixed(*r.o2i_db, 4) : "") << ',' << fixed(r.los_sf_db, 4) << ','
           << fixed(r.nlos_sf_db, 4) << ',' << (r.o2i_sf_db ? fixed(*r.o2i_sf_db, 4) : "") << '\n';
    }
}

struct RunSummary
{
    std::size_t ticks = 0;
    std::vector<std::string> artifacts;
    std::string config_hash;
};

inline std::string config_hash(const SimConfig& cfg) { return detail::hex64(detail::fnv1a64(serialize_config(cfg))); }

inline std::vector<std::string> write_plot_scripts(const std::filesystem::path& dir)
{
    const std::vector<std::pair<std::string, const char*>> scripts = {
        {"plot_pathloss.py", detail::kPlotPathloss},
        {"plot_sinr.py", detail::kPlotSinr},
        {"plot_cluster_power.py", detail::kPlotClusters}};
    std::vector<std::string> names;
    for (const auto& [name, body] : scripts)
    {
        auto f = detail::open_out(dir / name);
        f << body;
        names.push_back(name);
    }
    return names;
}

inline void write_manifest(const std::filesystem::path& dir, const SimConfig& cfg, const std::string& mode,
                           const std::vector<std::string>& artifacts, std::size_t ticks)
{
    nlohmann::ordered_json j;
    j["version"] = kVersion;
    j["mode"] = mode;
    j["config_hash"] = config_hash(cfg);
    j["seed"] = cfg.seed;
    j["scenario"] = to_string(cfg.scenario);
    j["ticks"] = ticks;
    j["artifacts"] = artifacts;
    auto f = detail::open_out(dir / "manifest.json");
    f << j.dump(2) << '\n';
}

/// Pathloss sweep only.
inline RunSummary run_sweep(const SimConfig& cfg, const std::filesystem::path& dir)
{
    detail::ParameterScope scope(cfg.parameter_file);
    std::filesystem::create_directories(dir);
    RunSummary out;
    {
        auto f = detail::open_out(dir / "pathloss_sweep.csv");
        write_sweep_csv(f, sweep_pathloss(cfg));
    }
    out.artifacts = {"pathloss_sweep.csv", "plot_pathloss.py"};
    auto f = detail::open_out(dir / "plot_pathloss.py");
    f << detail::kPlotPathloss;
    f.close();
    write_manifest(dir, cfg, "sweep-pathloss", out.artifacts, 0);
    out.config_hash = config_hash(cfg);
    return out;
}

/// Full simulation: sweep, SINR traces, cluster powers, manifest and plot scripts.
inline RunSummary run(const SimConfig& cfg, const std::filesystem::path& dir)
{
    using detail::fixed;
    cfg.validate();
    detail::ParameterScope scope(cfg.parameter_file);
    std::filesystem::create_directories(dir);

    RunSummary out;
    {
        auto f = detail::open_out(dir / "pathloss_sweep.csv");
        write_sweep_csv(f, sweep_pathloss(cfg));
    }

    auto sinr = detail::open_out(dir / "sinr.csv");
    auto wide = detail::open_out(dir / "sinr_wideband.csv");
    auto clus = detail::open_out(dir / "cluster_power.csv");
    sinr << "t_s,ut,bs,subcarrier,f_offset_hz,sinr_db\n";
    wide << "t_s,ut,bs,wideband_sinr_db,signal_dbm,interference_dbm,noise_dbm,pathloss_db,shadowing_db,o2i_db,los\n";
    clus << "t_s,ut,cluster,delay_ns,power_fraction,self_db,nonself_db\n";

    World world(cfg.to_world());
    const auto& grid = world.config().grid;
    auto dbm = [](double w) { return w > 0.0 ? linear_to_db(w) + 30.0 : -std::numeric_limits<double>::infinity(); };
    const auto steps = static_cast<std::size_t>(std::floor(cfg.duration_s / cfg.tick_s + 1e-9));
    for (std::size_t k = 0; k <= steps; ++k)
    {
        const double t = std::min(static_cast<double>(k) * cfg.tick_s, cfg.duration_s);
        const auto samples = world.tick(t);
        for (const auto& s : samples)
        {
            const std::string ts = fixed(t, 4);
            for (std::size_t i = 0; i < s.sinr_db.size(); ++i)
                sinr << ts << ',' << s.ut << ',' << s.bs << ',' << i << ','
                     << fixed(grid.offset(static_cast<int>(i)), 1) << ',' << fixed(s.sinr_db[i], 4) << '\n';
            wide << ts << ',' << s.ut << ',' << s.bs << ',' << fixed(s.wideband_db, 4) << ','
                 << fixed(dbm(s.signal_w), 4) << ',' << fixed(dbm(s.interference_w), 4) << ','
                 << fixed(dbm(s.noise_w), 4) << ',' << fixed(s.loss.pathloss, 4) << ','
                 << fixed(s.loss.shadowing, 4) << ',' << fixed(s.loss.o2i_penetration, 4) << ','
                 << (s.los ? 1 : 0) << '\n';

            const auto cp = world.cluster_powers(s.ut);
            double total = 0.0;
            for (const auto& c : cp)
                total += c.power * db_to_linear(c.self_db + c.nonself_db);
            for (const auto& c : cp)
                clus << ts << ',' << s.ut << ',' << c.cluster << ',' << fixed(c.delay * 1e9, 3) << ','
                     << fixed(total > 0.0 ? c.power / total : 0.0, 8) << ',' << fixed(c.self_db, 4) << ','
                     << fixed(c.nonself_db, 4) << '\n';
        }
        ++out.ticks;
    }
    sinr.close();
    wide.close();
    clus.close();

    out.artifacts = {"pathloss_sweep.csv", "sinr.csv", "sinr_wideband.csv", "cluster_power.csv"};
    for (auto& n : write_plot_scripts(dir))
        out.artifacts.push_back(n);
    write_manifest(dir, cfg, "run", out.artifacts, out.ticks);
    out.config_hash = config_hash(cfg);
    return out;
}

} // namespace mmwchan

#endif
