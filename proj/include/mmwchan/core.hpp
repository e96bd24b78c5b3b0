/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#ifndef MMWCHAN_CORE_HPP
#define MMWCHAN_CORE_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmwchan {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
// The TR pathloss and breakpoint formulas are written with c = 3e8 m/s.
inline constexpr double kSpeedOfLight = 3.0e8;

/// Invalid input or configuration. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/// Failure while simulating. Maps to CLI exit code 3.
class RuntimeError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

struct Vec3
{
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
    friend Vec3 operator*(Vec3 a, double s) { return s * a; }
    friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline double horizontal_distance(Vec3 a, Vec3 b) { return std::hypot(a.x - b.x, a.y - b.y); }
inline bool is_finite(Vec3 a) { return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z); }

/// Unit vector for zenith theta and azimuth phi (radians).
inline Vec3 spherical_unit(double theta, double phi)
{
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

/// Maps any angle to [0, 360).
inline double wrap_deg(double a)
{
    double w = std::fmod(a, 360.0);
    if (w < 0.0)
        w += 360.0;
    return w >= 360.0 ? 0.0 : w;
}

/// Maps any angle to [0, 2*pi).
inline double wrap_rad(double a)
{
    double w = std::fmod(a, 2.0 * kPi);
    if (w < 0.0)
        w += 2.0 * kPi;
    return w >= 2.0 * kPi ? 0.0 : w;
}

/// Signed angular difference a - b folded into [-180, 180).
inline double angle_diff_deg(double a, double b) { return wrap_deg(a - b + 180.0) - 180.0; }

/// Zenith folded into [0, 180] by reflection at the poles.
inline double reflect_zenith_deg(double z)
{
    double w = wrap_deg(z);
    return w > 180.0 ? 360.0 - w : w;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stream identifiers for per-link random draws.
enum class Feature : std::uint64_t
{
    los = 1,
    shadowing = 2,
    o2i = 3,
    fading = 4,
    blockage = 5,
    beamforming = 6,
    placement = 7,
};

/// Seed for the stream owned by (link, feature) under a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t link, Feature feature)
{
    std::uint64_t s = splitmix64(master);
    s = splitmix64(s ^ splitmix64(link + 0x632be59bd9b4e019ULL));
    return splitmix64(s ^ static_cast<std::uint64_t>(feature));
}

/// Random stream with the handful of draws the model needs.
class Rng
{
  public:
    explicit Rng(std::uint64_t seed = 0) : m_engine(seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(m_engine); }
    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(m_engine); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(m_engine); }
    double normal(double mean, double sigma) { return mean + sigma * normal(); }
    /// Draw in (0, 1), safe for log().
    double uniform_open()
    {
        double u = 0.0;
        while (u <= 0.0)
            u = uniform();
        return u;
    }
    std::mt19937_64& engine() { return m_engine; }

  private:
    std::mt19937_64 m_engine;
};

/// Dense row-major complex matrix.
class CMatrix
{
  public:
    CMatrix() = default;
    CMatrix(std::size_t rows, std::size_t cols) : m_rows(rows), m_cols(cols), m_data(rows * cols) {}

    std::size_t rows() const { return m_rows; }
    std::size_t cols() const { return m_cols; }
    cplx& operator()(std::size_t r, std::size_t c) { return m_data[r * m_cols + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return m_data[r * m_cols + c]; }
    std::vector<cplx>& data() { return m_data; }
    const std::vector<cplx>& data() const { return m_data; }

  private:
    std::size_t m_rows = 0;
    std::size_t m_cols = 0;
    std::vector<cplx> m_data;
};

/// Cluster-indexed stack of U x S matrices; slice n is contiguous.
class Tensor3
{
  public:
    Tensor3() = default;
    Tensor3(std::size_t u, std::size_t s, std::size_t n) : m_u(u), m_s(s), m_n(n), m_data(u * s * n) {}

    std::size_t rx() const { return m_u; }
    std::size_t tx() const { return m_s; }
    std::size_t clusters() const { return m_n; }
    cplx& operator()(std::size_t u, std::size_t s, std::size_t n) { return m_data[(n * m_u + u) * m_s + s]; }
    const cplx& operator()(std::size_t u, std::size_t s, std::size_t n) const
    {
        return m_data[(n * m_u + u) * m_s + s];
    }
    cplx* slice(std::size_t n) { return m_data.data() + n * m_u * m_s; }
    const cplx* slice(std::size_t n) const { return m_data.data() + n * m_u * m_s; }
    const std::vector<cplx>& data() const { return m_data; }
    std::vector<cplx>& data() { return m_data; }

  private:
    std::size_t m_u = 0;
    std::size_t m_s = 0;
    std::size_t m_n = 0;
    std::vector<cplx> m_data;
};

inline double vector_norm(const std::vector<cplx>& v)
{
    double s = 0.0;
    for (const auto& x : v)
        s += std::norm(x);
    return std::sqrt(s);
}

} // namespace mmwchan

#endif
