/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#ifndef MMWCHAN_TABLES_HPP
#define MMWCHAN_TABLES_HPP

#include "mmwchan/core.hpp"
#include "mmwchan/embedded_tables.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace mmwchan {

/// Link quantities a table expression may depend on.
struct ExprContext
{
    double fc_ghz = 28.0;
    double d2d_m = 100.0;
    double h_bs_m = 10.0;
    double h_ut_m = 1.5;
};

/// One parsed right-hand side of a table line. See data/common.tbl for the grammar.
struct TableExpr
{
    enum class Form
    {
        constant,
        log_f,
        log_1pf,
        zsd
    };
    enum class Height
    {
        hut_minus_1_5,
        abs_dh,
        pos_dh
    };

    Form form = Form::constant;
    double a = 0.0;
    double b = 0.0;
    bool has_floor = false;
    double floor = 0.0;
    // zsd form only
    double per_km = 0.0;
    double per_m = 0.0;
    Height height = Height::hut_minus_1_5;

    double eval(const ExprContext& ctx) const
    {
        double v = a;
        switch (form)
        {
        case Form::constant:
            break;
        case Form::log_f:
            v = a + b * std::log10(ctx.fc_ghz);
            break;
        case Form::log_1pf:
            v = a + b * std::log10(1.0 + ctx.fc_ghz);
            break;
        case Form::zsd: {
            double g = 0.0;
            if (height == Height::hut_minus_1_5)
                g = ctx.h_ut_m - 1.5;
            else if (height == Height::abs_dh)
                g = std::abs(ctx.h_ut_m - ctx.h_bs_m);
            else
                g = std::max(ctx.h_ut_m - ctx.h_bs_m, 0.0);
            v = a + per_km * ctx.d2d_m / 1000.0 + per_m * g;
            break;
        }
        }
        return has_floor ? std::max(floor, v) : v;
    }
};

struct CorrEntry
{
    std::string p;
    std::string q;
    double value = 0.0;
};

/// Key/value lines of one [section].
class ParamSection
{
  public:
    ParamSection() = default;
    explicit ParamSection(std::string name) : m_name(std::move(name)) {}

    const std::string& name() const { return m_name; }
    bool has(const std::string& key) const { return m_values.count(key) != 0; }

    const std::vector<std::string>& tokens(const std::string& key) const
    {
        auto it = m_values.find(key);
        if (it == m_values.end())
            throw ConfigError("parameter table [" + m_name + "] has no key '" + key + "'");
        return it->second;
    }

    std::vector<double> numbers(const std::string& key) const
    {
        std::vector<double> out;
        for (const auto& t : tokens(key))
            out.push_back(to_number(key, t));
        return out;
    }

    double number(const std::string& key, std::size_t index = 0) const
    {
        const auto& t = tokens(key);
        if (index >= t.size())
            throw ConfigError("parameter table [" + m_name + "] key '" + key + "' has too few values");
        return to_number(key, t[index]);
    }

    double number_or(const std::string& key, double fallback) const
    {
        return has(key) ? number(key) : fallback;
    }

    std::string text(const std::string& key) const
    {
        const auto& t = tokens(key);
        return t.empty() ? std::string{} : t.front();
    }

    TableExpr expr(const std::string& key) const
    {
        const auto& t = tokens(key);
        TableExpr e;
        std::size_t i = 0;
        auto need = [&](std::size_t n) {
            if (t.size() < i + n)
                throw ConfigError("parameter table [" + m_name + "] key '" + key + "' is malformed");
        };
        need(1);
        if (t[0] == "zsd")
        {
            i = 1;
            need(5);
            e.form = TableExpr::Form::zsd;
            e.has_floor = true;
            e.floor = to_number(key, t[1]);
            e.a = to_number(key, t[2]);
            e.per_km = to_number(key, t[3]);
            e.per_m = to_number(key, t[4]);
            if (t[5] == "hut15")
                e.height = TableExpr::Height::hut_minus_1_5;
            else if (t[5] == "absdh")
                e.height = TableExpr::Height::abs_dh;
            else if (t[5] == "posdh")
                e.height = TableExpr::Height::pos_dh;
            else
                throw ConfigError("parameter table [" + m_name + "] key '" + key + "': unknown height form " + t[5]);
            return e;
        }
        if (t[0] == "max")
        {
            need(2);
            e.has_floor = true;
            e.floor = to_number(key, t[1]);
            i = 2;
        }
        need(1);
        e.a = to_number(key, t[i]);
        if (t.size() == i + 1)
            return e;
        need(3);
        e.b = to_number(key, t[i + 1]);
        if (t[i + 2] == "lgf")
            e.form = TableExpr::Form::log_f;
        else if (t[i + 2] == "lg1f")
            e.form = TableExpr::Form::log_1pf;
        else
            throw ConfigError("parameter table [" + m_name + "] key '" + key + "': unknown form " + t[i + 2]);
        return e;
    }

    const std::vector<CorrEntry>& correlations() const { return m_corr; }

    void set(const std::string& key, std::vector<std::string> values)
    {
        if (key == "corr")
        {
            if (values.size() != 3)
                throw ConfigError("parameter table [" + m_name + "]: corr needs two names and a value");
            double v = to_number(key, values[2]);
            auto same = [&](const CorrEntry& c) {
                return (c.p == values[0] && c.q == values[1]) || (c.p == values[1] && c.q == values[0]);
            };
            auto it = std::find_if(m_corr.begin(), m_corr.end(), same);
            if (it != m_corr.end())
                it->value = v;
            else
                m_corr.push_back({values[0], values[1], v});
            return;
        }
        m_values[key] = std::move(values);
    }

  private:
    double to_number(const std::string& key, const std::string& t) const
    {
        try
        {
            std::size_t pos = 0;
            double v = std::stod(t, &pos);
            if (pos != t.size())
                throw std::invalid_argument(t);
            return v;
        }
        catch (const std::exception&)
        {
            throw ConfigError("parameter table [" + m_name + "] key '" + key + "': not a number: " + t);
        }
    }

    std::string m_name;
    std::map<std::string, std::vector<std::string>> m_values;
    std::vector<CorrEntry> m_corr;
};

/// All parameter sections, keyed by "<scenario>", "<scenario> <condition>" or "common".
class ParameterSet
{
  public:
    /// Parses table text; later sections with the same name update earlier ones.
    void parse(std::string_view text, const std::string& source = "<memory>")
    {
        std::istringstream in{std::string(text)};
        std::string line;
        ParamSection* current = nullptr;
        int lineno = 0;
        while (std::getline(in, line))
        {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos)
                line.erase(hash);
            std::istringstream ls(line);
            std::vector<std::string> tok;
            for (std::string w; ls >> w;)
                tok.push_back(w);
            if (tok.empty())
                continue;
            if (tok.front().front() == '[')
            {
                std::string name;
                for (const auto& w : tok)
                    name += (name.empty() ? "" : " ") + w;
                if (name.back() != ']')
                    throw ConfigError(source + ":" + std::to_string(lineno) + ": bad section header");
                name = name.substr(1, name.size() - 2);
                auto [it, inserted] = m_sections.try_emplace(name, name);
                current = &it->second;
                continue;
            }
            if (!current)
                throw ConfigError(source + ":" + std::to_string(lineno) + ": value outside a section");
            std::string key = tok.front();
            tok.erase(tok.begin());
            current->set(key, std::move(tok));
        }
    }

    bool has(const std::string& name) const { return m_sections.count(name) != 0; }

    const ParamSection& section(const std::string& name) const
    {
        auto it = m_sections.find(name);
        if (it == m_sections.end())
            throw ConfigError("no parameter table [" + name + "]");
        return it->second;
    }

    const std::map<std::string, ParamSection>& sections() const { return m_sections; }

  private:
    std::map<std::string, ParamSection> m_sections;
};

namespace detail {

inline std::shared_ptr<const ParameterSet>& active_parameter_slot()
{
    static std::shared_ptr<const ParameterSet> slot;
    return slot;
}

inline ParameterSet build_default_parameters()
{
    ParameterSet p;
    for (auto text : kEmbeddedTables)
        p.parse(text, "<embedded>");
    return p;
}

} // namespace detail

/// The shipped tables, parsed once.
inline const ParameterSet& default_parameters()
{
    static const ParameterSet params = detail::build_default_parameters();
    return params;
}

/// Tables used by every model function. Defaults to the shipped ones.
inline const ParameterSet& parameters()
{
    auto& slot = detail::active_parameter_slot();
    return slot ? *slot : default_parameters();
}

/// Applies an override file on top of the shipped tables. Call before simulating.
inline void load_parameter_overrides(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read parameter file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    auto merged = std::make_shared<ParameterSet>(parameters());
    merged->parse(ss.str(), path);
    detail::active_parameter_slot() = std::move(merged);
}

inline void reset_parameters() { detail::active_parameter_slot().reset(); }

} // namespace mmwchan

#endif
