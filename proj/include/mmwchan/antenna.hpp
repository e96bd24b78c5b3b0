/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#ifndef MMWCHAN_ANTENNA_HPP
#define MMWCHAN_ANTENNA_HPP

#include "mmwchan/core.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmwchan {

enum class PatternMode
{
    isotropic,
    element_3gpp
};

inline std::string to_string(PatternMode m) { return m == PatternMode::isotropic ? "isotropic" : "element_3gpp"; }

/// Uniform planar array in the local y-z plane, broadside along local +x.
///
/// `orientation` is the global azimuth of broadside. Sectors split `fov`
/// (centred on broadside) into `cols` equal slices.
struct AntennaPanel
{
    int rows = 1;
    int cols = 1;
    double d_h = 0.5; // wavelengths
    double d_v = 0.5; // wavelengths
    double orientation = 0.0;
    PatternMode pattern = PatternMode::isotropic;
    double fov = kPi;

    std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }

    void validate() const
    {
        if (rows < 1 || cols < 1)
            throw ConfigError("antenna panel needs rows >= 1 and cols >= 1");
        if (!(d_h > 0.0) || !(d_v > 0.0))
            throw ConfigError("antenna spacing must be positive");
        if (!(fov > 0.0) || fov > 2.0 * kPi)
            throw ConfigError("antenna field of view must be in (0, 360] degrees");
    }

    static AntennaPanel bs_default() { return AntennaPanel{8, 8}; }
    static AntennaPanel ut_default() { return AntennaPanel{4, 4}; }

    friend bool operator==(const AntennaPanel&, const AntennaPanel&) = default;
};

/// Unit-norm complex weights, one per element.
struct BeamformingVector
{
    std::vector<cplx> w;

    std::size_t size() const { return w.size(); }
    double norm() const { return vector_norm(w); }
};

/// Element offset in metres, local panel frame.
inline Vec3 element_location(std::size_t i, const AntennaPanel& panel, double lambda)
{
    if (i >= panel.size())
        throw std::out_of_range("element index " + std::to_string(i) + " outside panel of " +
                                std::to_string(panel.size()));
    const auto c = static_cast<std::size_t>(panel.cols);
    return {0.0, panel.d_h * static_cast<double>(i % c) * lambda, panel.d_v * static_cast<double>(i / c) * lambda};
}

/// Field gain (linear amplitude) for a local direction.
inline double radiation_pattern(double theta, double phi, PatternMode mode)
{
    if (mode == PatternMode::isotropic)
        return 1.0;
    constexpr double beamwidth = 65.0;
    constexpr double a_max = 30.0;
    const double t = rad2deg(theta) - 90.0;
    const double p = rad2deg(phi);
    const double a_db = -std::min(12.0 * t * t / (beamwidth * beamwidth) + 12.0 * p * p / (beamwidth * beamwidth), a_max);
    return std::pow(10.0, a_db / 20.0);
}

/// Local azimuth of a global one, folded into [-pi, pi).
inline double local_azimuth(double phi, const AntennaPanel& panel)
{
    return wrap_rad(phi - panel.orientation + kPi) - kPi;
}

/// Element field gain for a global direction.
inline double element_field(const AntennaPanel& panel, double theta, double phi)
{
    return radiation_pattern(theta, local_azimuth(phi, panel), panel.pattern);
}

/// exp(j 2 pi <r, d_k> / lambda) for every element k, global direction (theta, phi).
inline std::vector<cplx> array_response(const AntennaPanel& panel, double theta, double phi)
{
    const double lp = local_azimuth(phi, panel);
    const double ky = 2.0 * kPi * std::sin(theta) * std::sin(lp) * panel.d_h;
    const double kz = 2.0 * kPi * std::cos(theta) * panel.d_v;
    std::vector<cplx> a(panel.size());
    for (int r = 0; r < panel.rows; ++r)
        for (int c = 0; c < panel.cols; ++c)
            a[static_cast<std::size_t>(r * panel.cols + c)] = std::polar(1.0, ky * c + kz * r);
    return a;
}

/// Receive-side steering weights toward (azimuth, zenith).
inline BeamformingVector steering_vector(double azimuth, double zenith, const AntennaPanel& panel)
{
    BeamformingVector v{array_response(panel, zenith, azimuth)};
    const double scale = 1.0 / std::sqrt(static_cast<double>(panel.size()));
    for (auto& x : v.w)
        x *= scale;
    return v;
}

/// Transmit-side weights for the same beam: the channel applies the array
/// response unconjugated on the tx side, so the matched weights are conjugated.
inline BeamformingVector transmit_weights(const BeamformingVector& steer)
{
    BeamformingVector v = steer;
    for (auto& x : v.w)
        x = std::conj(x);
    return v;
}

inline int num_sectors(const AntennaPanel& panel) { return panel.cols; }

/// Global boresight azimuth of sector xi (1-based). Sector 1 is the most
/// counter-clockwise slice; indices advance clockwise.
inline double sector_azimuth(int xi, const AntennaPanel& panel)
{
    const int n = num_sectors(panel);
    if (xi < 1 || xi > n)
        throw std::out_of_range("sector " + std::to_string(xi) + " outside 1.." + std::to_string(n));
    const double width = panel.fov / n;
    return wrap_rad(panel.orientation + panel.fov / 2.0 - (xi - 0.5) * width);
}

/// Codebook entry for sector xi, receive convention, elevation pinned to the horizon.
inline BeamformingVector sector_vector(int xi, const AntennaPanel& panel)
{
    return steering_vector(sector_azimuth(xi, panel), kPi / 2.0, panel);
}

} // namespace mmwchan

#endif
