#ifndef VITERBINET_GMM_HPP
#define VITERBINET_GMM_HPP

// One-dimensional Gaussian mixtures fitted by EM, used as the marginal
// density of the channel output.

#include "viterbinet/error.hpp"
#include "viterbinet/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace viterbinet::gmm {

struct Mixture {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> variances;

    std::size_t size() const noexcept { return weights.size(); }

    void validate() const
    {
        if (weights.empty() || means.size() != weights.size() || variances.size() != weights.size())
            throw InvalidParameter("Mixture: component arrays must be non-empty and equally sized");
        double total = 0.0;
        for (std::size_t k = 0; k < size(); ++k) {
            if (!(weights[k] >= 0.0) || !std::isfinite(means[k]) || !(variances[k] > 0.0) || !std::isfinite(variances[k]))
                throw InvalidParameter("Mixture: invalid component");
            total += weights[k];
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw InvalidParameter("Mixture: weights must sum to one");
    }

    friend bool operator==(const Mixture&, const Mixture&) = default;
};

inline double normal_log_pdf(double y, double mean, double variance) noexcept
{
    const double r = y - mean;
    return -0.5 * (r * r / variance + std::log(2.0 * std::numbers::pi * variance));
}

inline double log_density(const Mixture& phi, double y) noexcept
{
    double top = -std::numeric_limits<double>::infinity();
    thread_local std::vector<double> terms;
    terms.resize(phi.size());
    for (std::size_t k = 0; k < phi.size(); ++k) {
        terms[k] = std::log(phi.weights[k]) + normal_log_pdf(y, phi.means[k], phi.variances[k]);
        top = std::max(top, terms[k]);
    }
    if (top == -std::numeric_limits<double>::infinity())
        return top;
    double sum = 0.0;
    for (double t : terms)
        sum += std::exp(t - top);
    return top + std::log(sum);
}

/// sum_k w_k N(y; mu_k, sigma_k^2)
inline double density(const Mixture& phi, double y)
{
    if (!std::isfinite(y))
        throw InvalidInput("gmm::density: non-finite argument");
    double total = 0.0;
    for (std::size_t k = 0; k < phi.size(); ++k)
        total += phi.weights[k] * std::exp(normal_log_pdf(y, phi.means[k], phi.variances[k]));
    return total;
}

inline double mean_log_likelihood(const Mixture& phi, std::span<const double> samples)
{
    double total = 0.0;
    for (double y : samples)
        total += log_density(phi, y);
    return total / static_cast<double>(samples.size());
}

struct EmOptions {
    std::size_t max_iters = 100;
    /// Stop once the mean per-sample log-likelihood improves by less than this.
    double tol = 1e-6;
    std::uint64_t seed = 0;
    std::size_t restarts = 5;
    /// Variance floor as a fraction of the sample variance.
    double variance_floor_ratio = 1e-6;
};

struct FitReport {
    /// Mean per-sample log-likelihood at the start of every EM iteration and
    /// after the last one.
    std::vector<double> log_likelihood;
    std::size_t iterations = 0;
    std::size_t restarts_used = 0;
    bool converged = false;
};

namespace detail {

struct SampleMoments {
    double mean = 0.0;
    double variance = 0.0;
};

inline SampleMoments moments(std::span<const double> samples)
{
    SampleMoments m;
    for (double y : samples)
        m.mean += y;
    m.mean /= static_cast<double>(samples.size());
    for (double y : samples)
        m.variance += (y - m.mean) * (y - m.mean);
    m.variance /= static_cast<double>(samples.size());
    return m;
}

inline double variance_floor(const SampleMoments& m, double ratio)
{
    return std::max(ratio * m.variance, 1e-12);
}

inline void check_samples(std::span<const double> samples)
{
    for (double y : samples)
        if (!std::isfinite(y))
            throw InvalidInput("gmm: non-finite sample");
}

/// k-means++ seeding followed by one nearest-centre assignment.
inline Mixture kmeanspp_init(std::span<const double> samples, std::size_t K, double floor, Rng& gen)
{
    const std::size_t n = samples.size();
    const SampleMoments all = moments(samples);
    std::vector<double> centers;
    centers.reserve(K);
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    centers.push_back(samples[first(gen)]);
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i)
        d2[i] = (samples[i] - centers[0]) * (samples[i] - centers[0]);
    while (centers.size() < K) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(gen);
            while (pick + 1 < n && target >= d2[pick]) {
                target -= d2[pick];
                ++pick;
            }
        } else {
            pick = first(gen);
        }
        const double c = samples[pick];
        centers.push_back(c);
        for (std::size_t i = 0; i < n; ++i)
            d2[i] = std::min(d2[i], (samples[i] - c) * (samples[i] - c));
    }

    std::vector<double> count(K, 0.0), sq(K, 0.0);
    for (double y : samples) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < K; ++k)
            if (std::abs(y - centers[k]) < std::abs(y - centers[best]))
                best = k;
        count[best] += 1.0;
        sq[best] += (y - centers[best]) * (y - centers[best]);
    }
    Mixture phi;
    phi.means = centers;
    phi.weights.resize(K);
    phi.variances.resize(K);
    double wsum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        phi.weights[k] = std::max(count[k], 1.0);
        wsum += phi.weights[k];
        const double v = count[k] >= 2.0 ? sq[k] / count[k] : 0.0;
        phi.variances[k] = v > floor ? v : std::max(all.variance / static_cast<double>(K * K), floor);
    }
    for (double& w : phi.weights)
        w /= wsum;
    return phi;
}

enum class EmStatus { ok, collapsed };

/// EM iterations from `phi` in place. Variances are clamped at `floor`
/// (a constrained M-step, so the likelihood stays monotone).
inline EmStatus run_em(Mixture& phi, std::span<const double> samples, std::size_t max_iters, double tol, double floor,
                       FitReport& report)
{
    const std::size_t n = samples.size();
    const std::size_t K = phi.size();
    std::vector<double> resp(n * K);
    std::vector<double> nk(K), sum1(K), sum2(K);
    std::vector<double> log_w(K), log_norm(K), inv_var(K);
    double previous = -std::numeric_limits<double>::infinity();

    for (std::size_t iter = 0;; ++iter) {
        for (std::size_t k = 0; k < K; ++k) {
            log_w[k] = std::log(phi.weights[k]);
            log_norm[k] = -0.5 * std::log(2.0 * std::numbers::pi * phi.variances[k]);
            inv_var[k] = 1.0 / phi.variances[k];
        }
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double* r = resp.data() + i * K;
            double top = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < K; ++k) {
                const double d = samples[i] - phi.means[k];
                r[k] = log_w[k] + log_norm[k] - 0.5 * d * d * inv_var[k];
                top = std::max(top, r[k]);
            }
            double sum = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                r[k] = std::exp(r[k] - top);
                sum += r[k];
            }
            for (std::size_t k = 0; k < K; ++k)
                r[k] /= sum;
            ll += top + std::log(sum);
        }
        ll /= static_cast<double>(n);
        report.log_likelihood.push_back(ll);
        if (iter > 0 && ll - previous < tol) {
            report.converged = true;
            return EmStatus::ok;
        }
        if (iter >= max_iters)
            return EmStatus::ok;
        previous = ll;

        std::fill(nk.begin(), nk.end(), 0.0);
        std::fill(sum1.begin(), sum1.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* r = resp.data() + i * K;
            for (std::size_t k = 0; k < K; ++k) {
                nk[k] += r[k];
                sum1[k] += r[k] * samples[i];
            }
        }
        for (std::size_t k = 0; k < K; ++k)
            if (!(nk[k] > 1e-6))
                return EmStatus::collapsed;
        for (std::size_t k = 0; k < K; ++k)
            phi.means[k] = sum1[k] / nk[k];
        std::fill(sum2.begin(), sum2.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* r = resp.data() + i * K;
            for (std::size_t k = 0; k < K; ++k) {
                const double d = samples[i] - phi.means[k];
                sum2[k] += r[k] * d * d;
            }
        }
        for (std::size_t k = 0; k < K; ++k) {
            phi.weights[k] = nk[k] / static_cast<double>(n);
            phi.variances[k] = std::max(sum2[k] / nk[k], floor);
        }
        ++report.iterations;
    }
}

inline void sort_by_mean(Mixture& phi)
{
    std::vector<std::size_t> order(phi.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return phi.means[a] < phi.means[b]; });
    Mixture out;
    for (std::size_t k : order) {
        out.weights.push_back(phi.weights[k]);
        out.means.push_back(phi.means[k]);
        out.variances.push_back(phi.variances[k]);
    }
    double total = std::accumulate(out.weights.begin(), out.weights.end(), 0.0);
    for (double& w : out.weights)
        w /= total;
    phi = std::move(out);
}

} // namespace detail

/// Fits K components with k-means++ seeding and EM. A component whose
/// responsibility mass vanishes triggers a reseeded restart.
inline Mixture em_fit(std::span<const double> samples, std::size_t K, const EmOptions& opt = {}, FitReport* report = nullptr)
{
    if (K < 1)
        throw InvalidParameter("em_fit: need at least one component");
    if (samples.size() < K)
        throw InvalidInput("em_fit: fewer samples than components");
    detail::check_samples(samples);
    FitReport local;
    FitReport& rep = report ? *report : local;
    rep = FitReport{};

    const auto m = detail::moments(samples);
    const double floor = detail::variance_floor(m, opt.variance_floor_ratio);
    if (K == 1) {
        rep.log_likelihood.clear();
        Mixture phi{{1.0}, {m.mean}, {std::max(m.variance, floor)}};
        rep.log_likelihood.push_back(mean_log_likelihood(phi, samples));
        rep.converged = true;
        return phi;
    }

    for (std::size_t attempt = 0; attempt <= opt.restarts; ++attempt) {
        Rng gen(derive_seed(opt.seed, {attempt}));
        Mixture phi = detail::kmeanspp_init(samples, K, floor, gen);
        rep.log_likelihood.clear();
        rep.iterations = 0;
        rep.converged = false;
        rep.restarts_used = attempt;
        if (detail::run_em(phi, samples, opt.max_iters, opt.tol, floor, rep) == detail::EmStatus::ok) {
            detail::sort_by_mean(phi);
            return phi;
        }
    }
    throw FitFailure("em_fit: components collapsed on every restart");
}

/// EM started from a previous fit; falls back to a fresh em_fit on collapse.
inline Mixture warm_refit(const Mixture& previous, std::span<const double> samples, const EmOptions& opt = {},
                          FitReport* report = nullptr)
{
    previous.validate();
    if (samples.empty())
        throw InvalidInput("warm_refit: no samples");
    detail::check_samples(samples);
    FitReport local;
    FitReport& rep = report ? *report : local;
    rep = FitReport{};

    const auto m = detail::moments(samples);
    const double floor = detail::variance_floor(m, opt.variance_floor_ratio);
    Mixture phi = previous;
    for (double& v : phi.variances)
        v = std::max(v, floor);
    for (double& w : phi.weights)
        w = std::max(w, 1e-12);
    const double total = std::accumulate(phi.weights.begin(), phi.weights.end(), 0.0);
    for (double& w : phi.weights)
        w /= total;
    if (detail::run_em(phi, samples, opt.max_iters, opt.tol, floor, rep) == detail::EmStatus::ok) {
        detail::sort_by_mean(phi);
        return phi;
    }
    if (samples.size() < phi.size())
        throw FitFailure("warm_refit: collapsed and too few samples for a fresh fit");
    return em_fit(samples, phi.size(), opt, report);
}

} // namespace viterbinet::gmm

#endif
