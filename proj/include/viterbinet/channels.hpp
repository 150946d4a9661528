#ifndef VITERBINET_CHANNELS_HPP
#define VITERBINET_CHANNELS_HPP

#include "viterbinet/error.hpp"
#include "viterbinet/random.hpp"
#include "viterbinet/stable.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace viterbinet::channels {

/// Finite symbol alphabet plus the channel memory it is used with.
/// Symbols elsewhere in the library are indices into `points`.
struct Constellation {
    std::vector<double> points;
    std::size_t memory = 1;

    static Constellation bpsk(std::size_t memory) { return Constellation{{-1.0, 1.0}, memory}; }
    static Constellation ook(std::size_t memory) { return Constellation{{0.0, 1.0}, memory}; }

    std::size_t size() const noexcept { return points.size(); }

    std::size_t num_states() const
    {
        std::size_t n = 1;
        for (std::size_t i = 0; i < memory; ++i) {
            if (n > std::numeric_limits<std::uint32_t>::max() / points.size())
                throw InvalidParameter("Constellation: state space C^m is too large");
            n *= points.size();
        }
        return n;
    }

    void validate() const
    {
        if (points.size() < 2)
            throw InvalidParameter("Constellation: need at least two points");
        if (memory < 1)
            throw InvalidParameter("Constellation: memory must be at least 1");
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!std::isfinite(points[i]))
                throw InvalidParameter("Constellation: non-finite point");
            for (std::size_t j = 0; j < i; ++j)
                if (points[i] == points[j])
                    throw InvalidParameter("Constellation: points must be distinct");
        }
        (void)num_states();
    }

    bool is_bpsk() const noexcept { return points == std::vector<double>{-1.0, 1.0}; }
    bool is_ook() const noexcept { return points == std::vector<double>{0.0, 1.0}; }

    friend bool operator==(const Constellation&, const Constellation&) = default;
};

struct GaussianNoise {
    friend bool operator==(const GaussianNoise&, const GaussianNoise&) = default;
};
struct PoissonNoise {
    friend bool operator==(const PoissonNoise&, const PoissonNoise&) = default;
};
struct AlphaStableNoise {
    StableParams params{0.5, 0.75, 1.0, 0.0};
    friend bool operator==(const AlphaStableNoise& a, const AlphaStableNoise& b)
    {
        return a.params.alpha == b.params.alpha && a.params.beta == b.params.beta
            && a.params.scale == b.params.scale && a.params.location == b.params.location;
    }
};

using NoiseModel = std::variant<GaussianNoise, PoissonNoise, AlphaStableNoise>;

inline std::string noise_name(const NoiseModel& noise)
{
    return std::visit(
        [](const auto& n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, GaussianNoise>)
                return "gaussian";
            else if constexpr (std::is_same_v<T, PoissonNoise>)
                return "poisson";
            else
                return "alpha_stable";
        },
        noise);
}

/// Tap vector h, linear SNR rho and the noise family of a finite-memory channel.
struct ChannelProfile {
    std::vector<double> taps;
    double snr = 1.0;
    NoiseModel noise = GaussianNoise{};

    void validate(const Constellation& c) const
    {
        if (taps.size() != c.memory)
            throw InvalidParameter("ChannelProfile: tap count must equal the constellation memory");
        for (double h : taps)
            if (!std::isfinite(h))
                throw InvalidParameter("ChannelProfile: non-finite tap");
        if (!(snr > 0.0) || !std::isfinite(snr))
            throw InvalidParameter("ChannelProfile: SNR must be positive and finite");
        if (const auto* s = std::get_if<AlphaStableNoise>(&noise))
            s->params.validate();
    }

    /// Poisson intensities need on-off keying; the additive families use BPSK.
    void check_pairing(const Constellation& c) const
    {
        const bool poisson = std::holds_alternative<PoissonNoise>(noise);
        if (poisson && !c.is_ook())
            throw InvalidScenario("Poisson channel requires the on-off keying constellation {0, 1}");
        if (!poisson && !c.is_bpsk())
            throw InvalidScenario(noise_name(noise) + " channel requires the BPSK constellation {-1, +1}");
    }
};

inline double db_to_linear(double db) noexcept { return std::pow(10.0, db / 10.0); }

/// (h)_tau = exp(-gamma (tau - 1)), tau = 1..m.
inline std::vector<double> exp_decay_profile(double gamma, std::size_t m)
{
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw InvalidParameter("exp_decay_profile: gamma must be positive");
    if (m < 1)
        throw InvalidParameter("exp_decay_profile: memory must be at least 1");
    std::vector<double> h(m);
    for (std::size_t tau = 0; tau < m; ++tau)
        h[tau] = std::exp(-gamma * static_cast<double>(tau));
    return h;
}

/// `count` decay rates spaced evenly on [lo, hi] (both ends included).
inline std::vector<double> gamma_grid(double lo, double hi, std::size_t count)
{
    if (count == 0)
        throw InvalidParameter("gamma_grid: count must be positive");
    if (count == 1)
        return {lo};
    std::vector<double> g(count);
    for (std::size_t i = 0; i < count; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return g;
}

/// Block-fading tap schedule: tap tau of block j is
/// exp(-decay (tau-1)) * (0.8 + 0.2 cos(2 pi j / p_tau)).
struct FadingSchedule {
    std::vector<int> periods{51, 39, 33, 21};
    double decay = 0.2;

    void validate() const
    {
        if (periods.empty())
            throw InvalidParameter("FadingSchedule: empty period vector");
        for (int p : periods)
            if (p <= 0)
                throw InvalidParameter("FadingSchedule: periods must be positive");
        if (!(decay > 0.0))
            throw InvalidParameter("FadingSchedule: decay must be positive");
    }
};

inline std::vector<double> block_fading_profile(const FadingSchedule& schedule, long long j)
{
    schedule.validate();
    if (j < 1)
        throw InvalidParameter("block_fading_profile: block index starts at 1");
    std::vector<double> h = exp_decay_profile(schedule.decay, schedule.periods.size());
    for (std::size_t tau = 0; tau < h.size(); ++tau) {
        const long long p = schedule.periods[tau];
        // reduce first so the cosine argument stays small for large j
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(j % p) / static_cast<double>(p);
        h[tau] *= 0.8 + 0.2 * std::cos(phase);
    }
    return h;
}

/// h + e with e iid N(0, variance).
inline std::vector<double> perturb_csi(std::span<const double> h, double variance, std::uint64_t seed)
{
    if (!(variance >= 0.0) || !std::isfinite(variance))
        throw InvalidParameter("perturb_csi: variance must be non-negative");
    std::vector<double> out(h.begin(), h.end());
    if (variance == 0.0)
        return out;
    Rng gen(seed);
    std::normal_distribution<double> noise(0.0, std::sqrt(variance));
    for (double& v : out)
        v += noise(gen);
    return out;
}

/// Channel with taps h + e, e iid N(0, variance). On the Poisson channel the
/// perturbed taps are clipped at zero so every intensity stays positive.
inline ChannelProfile perturb_profile(const ChannelProfile& profile, double variance, std::uint64_t seed)
{
    ChannelProfile out = profile;
    out.taps = perturb_csi(profile.taps, variance, seed);
    if (std::holds_alternative<PoissonNoise>(profile.noise))
        for (double& v : out.taps)
            v = std::max(v, 0.0);
    return out;
}

/// Noise-free channel term sqrt(rho) * sum_tau h_tau S[i - tau + 1]; symbols
/// before the block start contribute zero.
inline std::vector<double> isi_mean(const Constellation& c, std::span<const int> symbols, const ChannelProfile& profile)
{
    const double gain = std::sqrt(profile.snr);
    const std::size_t m = profile.taps.size();
    std::vector<double> mean(symbols.size(), 0.0);
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        double acc = 0.0;
        for (std::size_t tau = 0; tau < m && tau <= i; ++tau)
            acc += profile.taps[tau] * c.points[static_cast<std::size_t>(symbols[i - tau])];
        mean[i] = gain * acc;
    }
    return mean;
}

inline void check_symbols(const Constellation& c, std::span<const int> symbols)
{
    for (int s : symbols)
        if (s < 0 || static_cast<std::size_t>(s) >= c.size())
            throw InvalidInput("symbol index outside the constellation");
}

/// Passes a block of symbol indices through the channel. Deterministic in `seed`.
inline std::vector<double> transmit(const Constellation& c, std::span<const int> symbols,
                                    const ChannelProfile& profile, std::uint64_t seed)
{
    c.validate();
    profile.validate(c);
    profile.check_pairing(c);
    if (symbols.size() <= c.memory)
        throw InvalidInput("transmit: block length must exceed the channel memory");
    check_symbols(c, symbols);

    std::vector<double> y = isi_mean(c, symbols, profile);
    Rng gen(seed);
    std::visit(
        [&](const auto& noise) {
            using T = std::decay_t<decltype(noise)>;
            if constexpr (std::is_same_v<T, GaussianNoise>) {
                std::normal_distribution<double> w(0.0, 1.0);
                for (double& v : y)
                    v += w(gen);
            } else if constexpr (std::is_same_v<T, PoissonNoise>) {
                for (double& v : y) {
                    const double lambda = v + 1.0;
                    if (!(lambda > 0.0))
                        throw InvalidScenario("transmit: non-positive Poisson intensity");
                    std::poisson_distribution<long long> draw(lambda);
                    v = static_cast<double>(draw(gen));
                }
            } else {
                for (double& v : y)
                    v += sample_stable(noise.params, gen);
            }
        },
        profile.noise);
    return y;
}

/// Uniform iid symbol indices.
inline std::vector<int> random_symbols(const Constellation& c, std::size_t n, std::uint64_t seed)
{
    Rng gen(seed);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(c.size()) - 1);
    std::vector<int> s(n);
    for (int& v : s)
        v = pick(gen);
    return s;
}

} // namespace viterbinet::channels

#endif
