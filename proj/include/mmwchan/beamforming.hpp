/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#ifndef MMWCHAN_BEAMFORMING_HPP
#define MMWCHAN_BEAMFORMING_HPP

#include "mmwchan/antenna.hpp"
#include "mmwchan/core.hpp"
#include "mmwchan/small_scale.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace mmwchan {

/// OFDM grid centred on the carrier.
struct SubcarrierGrid
{
    double fc = 28e9;
    double spacing = 15e3 * 8;
    int count = 100;

    double bandwidth() const { return spacing * count; }

    /// Offset of subcarrier k from the carrier.
    double offset(int k) const { return (k - (count - 1) / 2.0) * spacing; }

    void validate() const
    {
        if (count < 1 || !(spacing > 0.0))
            throw ConfigError("subcarrier grid needs count >= 1 and positive spacing");
        if (!(fc > 0.0))
            throw ConfigError("carrier frequency must be positive");
        const double limit = std::min(0.1 * fc, 2e9);
        if (bandwidth() > limit)
            throw ConfigError("bandwidth " + std::to_string(bandwidth() / 1e6) + " MHz exceeds " +
                              std::to_string(limit / 1e6) + " MHz limit");
    }
};

enum class BeamformingMethod
{
    power,
    cell_scan
};

inline std::string to_string(BeamformingMethod m) { return m == BeamformingMethod::power ? "power" : "cell_scan"; }

inline BeamformingMethod parse_beamforming_method(const std::string& s)
{
    if (s == "power")
        return BeamformingMethod::power;
    if (s == "cell_scan")
        return BeamformingMethod::cell_scan;
    throw ConfigError("unknown beamforming method '" + s + "' (expected power or cell_scan)");
}

/// Sum of all cluster slices.
inline CMatrix collapse_channel(const Tensor3& h)
{
    CMatrix out(h.rx(), h.tx());
    const std::size_t block = h.rx() * h.tx();
    for (std::size_t n = 0; n < h.clusters(); ++n)
    {
        const cplx* s = h.slice(n);
        for (std::size_t i = 0; i < block; ++i)
            out.data()[i] += s[i];
    }
    return out;
}

namespace detail {

inline std::vector<cplx> mat_vec(const CMatrix& h, const std::vector<cplx>& x)
{
    std::vector<cplx> y(h.rows());
    for (std::size_t u = 0; u < h.rows(); ++u)
    {
        cplx acc = 0.0;
        for (std::size_t s = 0; s < h.cols(); ++s)
            acc += h(u, s) * x[s];
        y[u] = acc;
    }
    return y;
}

inline std::vector<cplx> mat_hvec(const CMatrix& h, const std::vector<cplx>& y)
{
    std::vector<cplx> x(h.cols());
    for (std::size_t u = 0; u < h.rows(); ++u)
    {
        const cplx c = std::conj(y[u]);
        for (std::size_t s = 0; s < h.cols(); ++s)
            x[s] += h(u, s) * c;
    }
    for (auto& v : x)
        v = std::conj(v);
    return x;
}

inline bool normalize(std::vector<cplx>& v)
{
    const double n = vector_norm(v);
    if (!(n > 0.0))
        return false;
    for (auto& x : v)
        x /= n;
    return true;
}

/// Rotates v so its first non-negligible entry is real and positive.
inline void fix_phase(std::vector<cplx>& v)
{
    double biggest = 0.0;
    for (const auto& x : v)
        biggest = std::max(biggest, std::abs(x));
    for (const auto& x : v)
        if (std::abs(x) > 1e-9 * biggest)
        {
            const cplx rot = std::conj(x) / std::abs(x);
            for (auto& y : v)
                y *= rot;
            return;
        }
}

} // namespace detail

struct PowerMethodResult
{
    BeamformingVector w_tx;
    BeamformingVector w_rx;
    int iterations = 0;
    bool converged = false;
};

/// Dominant eigenvectors of H^H H (tx) and H H^H (rx) by power iteration.
/// The start vector is random when rng is given, all-ones otherwise.
inline PowerMethodResult power_method(const CMatrix& h, double threshold = 1e-10, int max_iter = 1000,
                                      Rng* rng = nullptr)
{
    if (h.rows() == 0 || h.cols() == 0)
        throw ConfigError("power method needs a non-empty channel matrix");
    double fro = 0.0;
    for (const auto& x : h.data())
        fro += std::norm(x);
    if (!(fro > 0.0))
        throw RuntimeError("power method on a zero channel matrix");

    std::vector<cplx> w(h.cols(), cplx(1.0, 0.0));
    if (rng)
        for (auto& x : w)
            x = cplx(rng->normal(), rng->normal());
    detail::normalize(w);
    PowerMethodResult res;
    for (int it = 1; it <= max_iter; ++it)
    {
        auto next = detail::mat_hvec(h, detail::mat_vec(h, w));
        if (!detail::normalize(next))
        {
            // Start vector in the null space; restart from a basis vector.
            next.assign(h.cols(), 0.0);
            next[static_cast<std::size_t>(it - 1) % h.cols()] = 1.0;
        }
        detail::fix_phase(next);
        double diff = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i)
            diff += std::norm(next[i] - w[i]);
        w = std::move(next);
        res.iterations = it;
        if (std::sqrt(diff) < threshold)
        {
            res.converged = true;
            break;
        }
    }
    auto rx = detail::mat_vec(h, w);
    detail::normalize(rx);
    detail::fix_phase(rx);
    res.w_tx.w = std::move(w);
    res.w_rx.w = std::move(rx);
    return res;
}

/// w_rx^H H w_tx
inline cplx bilinear(const CMatrix& h, const BeamformingVector& w_tx, const BeamformingVector& w_rx)
{
    if (w_tx.size() != h.cols() || w_rx.size() != h.rows())
        throw ConfigError("beamforming vector size does not match the channel");
    const auto y = detail::mat_vec(h, w_tx.w);
    cplx acc = 0.0;
    for (std::size_t u = 0; u < y.size(); ++u)
        acc += std::conj(w_rx.w[u]) * y[u];
    return acc;
}

struct CellScanResult
{
    int xi_tx = 1;
    int xi_rx = 1;
    BeamformingVector w_tx;
    BeamformingVector w_rx;
    double gain = 0.0; // |w_rx^H H w_tx|^2
};

/// Exhaustive search over both sector codebooks. Ties keep the lowest (tx, rx) pair.
inline CellScanResult cell_scan(const CMatrix& h, const AntennaPanel& tx_panel, const AntennaPanel& rx_panel)
{
    std::vector<BeamformingVector> rx_book;
    for (int r = 1; r <= num_sectors(rx_panel); ++r)
        rx_book.push_back(sector_vector(r, rx_panel));
    CellScanResult best;
    best.gain = -1.0;
    for (int t = 1; t <= num_sectors(tx_panel); ++t)
    {
        const auto w_tx = transmit_weights(sector_vector(t, tx_panel));
        const auto y = detail::mat_vec(h, w_tx.w);
        for (int r = 1; r <= num_sectors(rx_panel); ++r)
        {
            const auto& w_rx = rx_book[static_cast<std::size_t>(r - 1)];
            cplx acc = 0.0;
            for (std::size_t u = 0; u < y.size(); ++u)
                acc += std::conj(w_rx.w[u]) * y[u];
            const double g = std::norm(acc);
            if (g > best.gain * (1.0 + 1e-12))
            {
                best.gain = g;
                best.xi_tx = t;
                best.xi_rx = r;
                best.w_tx = w_tx;
                best.w_rx = w_rx;
            }
        }
    }
    return best;
}

inline CellScanResult cell_scan(const ChannelRealization& r)
{
    return cell_scan(collapse_channel(r.H), r.tx_panel, r.rx_panel);
}

/// L_n = w_rx^H H_n w_tx for every cluster slice.
inline std::vector<cplx> long_term(const Tensor3& h, const BeamformingVector& w_tx, const BeamformingVector& w_rx)
{
    if (w_tx.size() != h.tx() || w_rx.size() != h.rx())
        throw ConfigError("beamforming vector size does not match the channel tensor");
    std::vector<cplx> out(h.clusters());
    for (std::size_t n = 0; n < h.clusters(); ++n)
    {
        const cplx* s = h.slice(n);
        cplx acc = 0.0;
        for (std::size_t u = 0; u < h.rx(); ++u)
        {
            cplx row = 0.0;
            for (std::size_t k = 0; k < h.tx(); ++k)
                row += s[u * h.tx() + k] * w_tx.w[k];
            acc += std::conj(w_rx.w[u]) * row;
        }
        out[n] = acc;
    }
    return out;
}

inline void refresh_long_term(ChannelRealization& r)
{
    if (r.w_tx.size() == 0 || r.w_rx.size() == 0)
    {
        r.long_term.clear();
        r.long_term_valid = false;
        return;
    }
    r.long_term = long_term(r.H, r.w_tx, r.w_rx);
    r.long_term_valid = true;
}

inline void set_beamforming(ChannelRealization& r, const BeamformingVector& w_tx, const BeamformingVector& w_rx)
{
    r.w_tx = w_tx;
    r.w_rx = w_rx;
    refresh_long_term(r);
}

/// Runs the chosen method on the collapsed channel and caches the vectors.
inline void beamform(ChannelRealization& r, BeamformingMethod method, Rng* rng = nullptr)
{
    if (method == BeamformingMethod::power)
    {
        const auto res = power_method(collapse_channel(r.H), 1e-10, 1000, rng);
        set_beamforming(r, res.w_tx, res.w_rx);
        return;
    }
    const auto res = cell_scan(r);
    set_beamforming(r, res.w_tx, res.w_rx);
}

/// Receiver unit vector of cluster n.
inline Vec3 arrival_direction(const ChannelRealization& r, std::size_t n)
{
    return spherical_unit(r.angles[1][n], r.angles[0][n]);
}

/// Doppler and delay phasor F_n(t, f).
inline cplx cluster_phasor(const ChannelRealization& r, std::size_t n, double t, double f_offset, Vec3 v, double lambda)
{
    const double el = t - r.generated_at;
    const double doppler = 2.0 * kPi * dot(arrival_direction(r, n), v) * el / lambda;
    const double delay = 2.0 * kPi * r.delays[n] * f_offset;
    return std::polar(1.0, doppler + delay);
}

/// Factorised gain sum_n L_n F_n(t, f).
inline cplx gain(const ChannelRealization& r, double t, double f_offset, Vec3 v, double lambda)
{
    if (!r.long_term_valid)
        throw RuntimeError("gain requested before beamforming vectors were set");
    cplx g = 0.0;
    for (std::size_t n = 0; n < r.num_clusters(); ++n)
        g += r.long_term[n] * cluster_phasor(r, n, t, f_offset, v, lambda);
    return g;
}

/// Same quantity from the full triple sum, without the cache.
inline cplx gain_direct(const ChannelRealization& r, double t, double f_offset, Vec3 v, double lambda)
{
    cplx g = 0.0;
    for (std::size_t n = 0; n < r.num_clusters(); ++n)
    {
        const cplx f = cluster_phasor(r, n, t, f_offset, v, lambda);
        for (std::size_t u = 0; u < r.H.rx(); ++u)
            for (std::size_t s = 0; s < r.H.tx(); ++s)
                g += std::conj(r.w_rx.w[u]) * r.H(u, s, n) * r.w_tx.w[s] * f;
    }
    return g;
}

/// rx[k] = tx[k] |G(t, f_k)|^2 10^(-loss/10)
inline std::vector<double> psd_apply(const std::vector<double>& tx_psd, const ChannelRealization& r, double loss_db,
                                     double t, const SubcarrierGrid& grid, Vec3 v)
{
    if (tx_psd.size() != static_cast<std::size_t>(grid.count))
        throw ConfigError("PSD length does not match the subcarrier grid");
    const double lambda = kSpeedOfLight / grid.fc;
    const double att = std::pow(10.0, -loss_db / 10.0);
    std::vector<double> out(tx_psd.size());
    for (int k = 0; k < grid.count; ++k)
    {
        const auto idx = static_cast<std::size_t>(k);
        if (tx_psd[idx] == 0.0)
            continue;
        out[idx] = tx_psd[idx] * std::norm(gain(r, t, grid.offset(k), v, lambda)) * att;
    }
    return out;
}

} // namespace mmwchan

#endif
