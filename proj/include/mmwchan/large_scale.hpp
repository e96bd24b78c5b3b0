/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#ifndef MMWCHAN_LARGE_SCALE_HPP
#define MMWCHAN_LARGE_SCALE_HPP

#include "mmwchan/core.hpp"
#include "mmwchan/propagation.hpp"
#include "mmwchan/tables.hpp"

#include <array>
#include <cmath>
#include <string>

namespace mmwchan {

/// Index order of the seven correlated large-scale parameters.
enum Lsp : std::size_t
{
    kSF = 0,
    kK = 1,
    kDS = 2,
    kASD = 3,
    kASA = 4,
    kZSD = 5,
    kZSA = 6,
};

inline constexpr std::size_t kNumLsp = 7;
inline constexpr std::array<const char*, kNumLsp> kLspNames = {"SF", "K", "DS", "ASD", "ASA", "ZSD", "ZSA"};

inline std::size_t lsp_index(const std::string& name)
{
    for (std::size_t i = 0; i < kNumLsp; ++i)
        if (name == kLspNames[i])
            return i;
    throw ConfigError("unknown large-scale parameter '" + name + "'");
}

using Matrix7 = std::array<std::array<double, kNumLsp>, kNumLsp>;

inline Matrix7 identity7()
{
    Matrix7 m{};
    for (std::size_t i = 0; i < kNumLsp; ++i)
        m[i][i] = 1.0;
    return m;
}

/// Fast-fading statistics of one (scenario, condition) pair.
struct LspTable
{
    ScenarioKind scenario = ScenarioKind::UMi;
    Condition condition = Condition::LOS;
    int clusters = 1;
    int rays = 1;
    double r_tau = 1.0;
    double zeta_db = 0.0;
    TableExpr c_ds_ns;
    double c_asd_deg = 0.0;
    double c_asa_deg = 0.0;
    double c_zsa_deg = 0.0;
    bool has_k = false;
    double mu_k_db = 0.0;
    double sigma_k_db = 0.0;
    // log10 domain, DS in seconds, spreads in degrees; index order DS, ASD, ASA, ZSD, ZSA
    std::array<TableExpr, 5> mu;
    std::array<TableExpr, 5> sigma;
    std::string offset_zod = "none";
    Matrix7 correlation = identity7();

    void validate() const
    {
        if (clusters < 1 || rays < 1)
            throw ConfigError("LSP table needs at least one cluster and one ray");
        if (sigma_k_db < 0.0 || zeta_db < 0.0)
            throw ConfigError("LSP table standard deviations must be >= 0");
    }
};

inline LspTable lsp_table(ScenarioKind kind, Condition cond)
{
    const auto& s = condition_section(kind, cond);
    LspTable t;
    t.scenario = kind;
    t.condition = cond;
    t.clusters = static_cast<int>(s.number("clusters"));
    t.rays = static_cast<int>(s.number("rays"));
    t.r_tau = s.number("r_tau");
    t.zeta_db = s.number("zeta_db");
    t.c_ds_ns = s.expr("c_ds_ns");
    t.c_asd_deg = s.number("c_asd_deg");
    t.c_asa_deg = s.number("c_asa_deg");
    t.c_zsa_deg = s.number("c_zsa_deg");
    t.has_k = s.has("mu_k_db");
    if (t.has_k)
    {
        t.mu_k_db = s.number("mu_k_db");
        t.sigma_k_db = s.number("sigma_k_db");
    }
    const std::array<const char*, 5> names = {"DS", "ASD", "ASA", "ZSD", "ZSA"};
    for (std::size_t i = 0; i < names.size(); ++i)
    {
        t.mu[i] = s.expr(std::string("lg") + names[i] + "_mu");
        t.sigma[i] = s.expr(std::string("lg") + names[i] + "_sigma");
    }
    t.offset_zod = s.text("offset_zod");
    for (const auto& c : s.correlations())
    {
        const std::size_t p = lsp_index(c.p);
        const std::size_t q = lsp_index(c.q);
        if (p == q)
            throw ConfigError("correlation of a parameter with itself in [" + s.name() + "]");
        if (!t.has_k && (p == kK || q == kK))
            throw ConfigError("K correlation given for a condition without K in [" + s.name() + "]");
        t.correlation[p][q] = c.value;
        t.correlation[q][p] = c.value;
    }
    t.validate();
    return t;
}

/// Lower-triangular factor M of the correlation matrix C, M M^T = C.
struct CorrelationSqrt
{
    Matrix7 m = identity7();
    bool repaired = false;
};

namespace detail {

inline bool cholesky7(const Matrix7& c, Matrix7& l)
{
    l = Matrix7{};
    for (std::size_t j = 0; j < kNumLsp; ++j)
    {
        double d = c[j][j];
        for (std::size_t k = 0; k < j; ++k)
            d -= l[j][k] * l[j][k];
        if (!(d > 0.0))
            return false;
        l[j][j] = std::sqrt(d);
        for (std::size_t i = j + 1; i < kNumLsp; ++i)
        {
            double s = c[i][j];
            for (std::size_t k = 0; k < j; ++k)
                s -= l[i][k] * l[j][k];
            l[i][j] = s / l[j][j];
        }
    }
    return true;
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix: c = v diag(w) v^T.
inline void jacobi_eigen7(Matrix7 a, std::array<double, kNumLsp>& w, Matrix7& v)
{
    v = identity7();
    for (int sweep = 0; sweep < 100; ++sweep)
    {
        double off = 0.0;
        for (std::size_t p = 0; p < kNumLsp; ++p)
            for (std::size_t q = p + 1; q < kNumLsp; ++q)
                off += a[p][q] * a[p][q];
        if (off < 1e-30)
            break;
        for (std::size_t p = 0; p < kNumLsp; ++p)
            for (std::size_t q = p + 1; q < kNumLsp; ++q)
            {
                if (a[p][q] == 0.0)
                    continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < kNumLsp; ++k)
                {
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < kNumLsp; ++k)
                {
                    const double apk = a[p][k];
                    const double aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < kNumLsp; ++k)
                {
                    const double vkp = v[k][p];
                    const double vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
    }
    for (std::size_t i = 0; i < kNumLsp; ++i)
        w[i] = a[i][i];
}

} // namespace detail

/// Eigenvalue clipping at `floor`, then rescaling back to a unit diagonal.
inline Matrix7 repair_correlation(const Matrix7& c, double floor = 1e-6)
{
    std::array<double, kNumLsp> w{};
    Matrix7 v{};
    detail::jacobi_eigen7(c, w, v);
    for (auto& x : w)
        x = std::max(x, floor);
    Matrix7 r{};
    for (std::size_t i = 0; i < kNumLsp; ++i)
        for (std::size_t j = 0; j < kNumLsp; ++j)
            for (std::size_t k = 0; k < kNumLsp; ++k)
                r[i][j] += v[i][k] * w[k] * v[j][k];
    Matrix7 out{};
    for (std::size_t i = 0; i < kNumLsp; ++i)
        for (std::size_t j = 0; j < kNumLsp; ++j)
            out[i][j] = r[i][j] / std::sqrt(r[i][i] * r[j][j]);
    return out;
}

inline CorrelationSqrt correlation_sqrt(const Matrix7& c)
{
    for (std::size_t i = 0; i < kNumLsp; ++i)
        for (std::size_t j = 0; j < kNumLsp; ++j)
            if (c[i][j] != c[j][i] || (i == j && c[i][i] != 1.0) || std::abs(c[i][j]) > 1.0)
                throw ConfigError("correlation matrix must be symmetric with unit diagonal");
    CorrelationSqrt out;
    if (detail::cholesky7(c, out.m))
        return out;
    out.repaired = true;
    if (!detail::cholesky7(repair_correlation(c), out.m))
        throw ConfigError("correlation matrix cannot be repaired to positive definite");
    return out;
}

inline CorrelationSqrt correlation_sqrt(ScenarioKind kind, Condition cond)
{
    return correlation_sqrt(lsp_table(kind, cond).correlation);
}

/// Per-link means and standard deviations, all in the drawing domain:
/// SF and K in dB, the spreads as log10 of seconds or degrees.
struct LspStats
{
    std::array<double, kNumLsp> mu{};
    std::array<double, kNumLsp> sigma{};
    double offset_zod_deg = 0.0;
    double c_ds_s = 0.0;
};

/// ZoD offset for NLOS and O2I links, degrees.
inline double zod_offset_deg(const std::string& form, const ExprContext& ctx)
{
    const double lgf = std::log10(ctx.fc_ghz);
    if (form == "none")
        return 0.0;
    if (form == "uma")
    {
        const double a = 0.208 * lgf - 0.782;
        const double c = -0.13 * lgf + 2.03;
        const double e = 7.66 * lgf - 5.96;
        return e - std::pow(10.0, a * std::log10(std::max(25.0, ctx.d2d_m)) + c - 0.07 * (ctx.h_ut_m - 1.5));
    }
    if (form == "umi")
        return -std::pow(10.0, -1.5 * std::log10(std::max(10.0, ctx.d2d_m)) + 3.3);
    if (form == "rma")
    {
        const double d = std::max(ctx.d2d_m, 1e-3);
        return rad2deg(std::atan((35.0 - 3.5) / d) - std::atan((35.0 - 1.5) / d));
    }
    throw ConfigError("unknown ZoD offset form '" + form + "'");
}

inline LspStats lsp_stats(const LspTable& table, const ExprContext& ctx, double sigma_sf_db)
{
    LspStats s;
    s.mu[kSF] = 0.0;
    s.sigma[kSF] = sigma_sf_db;
    s.mu[kK] = table.mu_k_db;
    s.sigma[kK] = table.sigma_k_db;
    const std::array<Lsp, 5> order = {kDS, kASD, kASA, kZSD, kZSA};
    for (std::size_t i = 0; i < order.size(); ++i)
    {
        s.mu[order[i]] = table.mu[i].eval(ctx);
        s.sigma[order[i]] = table.sigma[i].eval(ctx);
        if (s.sigma[order[i]] < 0.0)
            throw ConfigError(std::string("negative standard deviation for ") + kLspNames[order[i]]);
    }
    s.offset_zod_deg = table.condition == Condition::LOS ? 0.0 : zod_offset_deg(table.offset_zod, ctx);
    s.c_ds_s = table.c_ds_ns.eval(ctx) * 1e-9;
    return s;
}

struct LspSet
{
    double ds = 0.0;  // s
    double asd = 0.0; // deg
    double asa = 0.0; // deg
    double zsd = 0.0; // deg
    double zsa = 0.0; // deg
    double k_db = -INFINITY;
    double k = 0.0;  // linear
    double sf = 0.0; // dB
    // Drawing-domain values before capping, and the correlated unit normals.
    std::array<double, kNumLsp> values{};
    std::array<double, kNumLsp> normals{};
    double mu_lg_zsd = 0.0;
    double offset_zod_deg = 0.0;
    double c_ds_s = 0.0;
};

inline LspSet generate_lsps(const LspStats& stats, const CorrelationSqrt& factor, Rng& rng)
{
    std::array<double, kNumLsp> z{};
    for (auto& x : z)
        x = rng.normal();
    LspSet out;
    for (std::size_t i = 0; i < kNumLsp; ++i)
    {
        double y = 0.0;
        for (std::size_t j = 0; j <= i; ++j)
            y += factor.m[i][j] * z[j];
        out.normals[i] = y;
        out.values[i] = stats.mu[i] + stats.sigma[i] * y;
    }
    const auto& cap = parameters().section("common");
    const double cap_az = cap.number("cap_azimuth_spread");
    const double cap_ze = cap.number("cap_zenith_spread");
    out.sf = out.values[kSF];
    out.k_db = out.values[kK];
    out.k = db_to_linear(out.k_db);
    out.ds = std::pow(10.0, out.values[kDS]);
    out.asd = std::min(std::pow(10.0, out.values[kASD]), cap_az);
    out.asa = std::min(std::pow(10.0, out.values[kASA]), cap_az);
    out.zsd = std::min(std::pow(10.0, out.values[kZSD]), cap_ze);
    out.zsa = std::min(std::pow(10.0, out.values[kZSA]), cap_ze);
    out.mu_lg_zsd = stats.mu[kZSD];
    out.offset_zod_deg = stats.offset_zod_deg;
    out.c_ds_s = stats.c_ds_s;
    return out;
}

/// Statistics context of a link.
inline ExprContext expr_context(const LinkContext& link)
{
    const auto g = link.geometry();
    return {link.fc_hz / 1e9, g.d2d, link.h_bs(), link.h_ut()};
}

inline LspSet generate_lsps(const LinkContext& link, Condition cond, double sigma_sf_db, Rng& rng)
{
    const auto table = lsp_table(link.scenario, cond);
    const auto stats = lsp_stats(table, expr_context(link), sigma_sf_db);
    auto lsps = generate_lsps(stats, correlation_sqrt(table.correlation), rng);
    if (!table.has_k)
    {
        lsps.k_db = -INFINITY;
        lsps.k = 0.0;
    }
    return lsps;
}

} // namespace mmwchan

#endif
