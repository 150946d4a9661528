#ifndef VITERBINET_DETECTOR_HPP
#define VITERBINET_DETECTOR_HPP

// ViterbiNet: the trellis driven by log-likelihoods recovered from a learned
// posterior and a learned marginal via Bayes' rule, plus model-based cost
// providers for the CSI-based Viterbi baselines.

#include "viterbinet/channels.hpp"
#include "viterbinet/error.hpp"
#include "viterbinet/gmm.hpp"
#include "viterbinet/mlp.hpp"
#include "viterbinet/random.hpp"
#include "viterbinet/trellis.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <type_traits>
#include <variant>
#include <vector>

namespace viterbinet::detector {

/// Probabilities are clamped here before taking logs.
inline constexpr double kProbabilityFloor = 1e-300;

/// How the state prior enters p(y|s) = P(s|y) p(y) / p(s).
/// exact_bayes multiplies by C^m (p(s) = C^-m); divide_by_states uses
/// P(s|y) p(y) / C^m. The factor is the same for every state, so both give
/// identical decisions.
enum class PriorScaling { exact_bayes, divide_by_states };

struct CostDiagnostics {
    std::size_t density_clamped = 0;
    std::size_t posterior_clamped = 0;
};

/// Costs -log(P(s|y) p(y) C^{+-m}) from a posterior vector and a marginal
/// density value.
inline void bayes_costs(std::span<const double> posterior, double marginal, PriorScaling scaling, std::span<double> out,
                        CostDiagnostics* diag = nullptr)
{
    if (out.size() != posterior.size())
        throw InvalidInput("bayes_costs: output span has the wrong length");
    const double log_states = std::log(static_cast<double>(posterior.size()));
    double log_marginal;
    if (marginal < kProbabilityFloor) {
        log_marginal = std::log(kProbabilityFloor);
        if (diag)
            ++diag->density_clamped;
    } else {
        log_marginal = std::log(marginal);
    }
    const double shift = scaling == PriorScaling::exact_bayes ? -log_marginal - log_states : -log_marginal + log_states;
    for (std::size_t s = 0; s < posterior.size(); ++s) {
        double p = posterior[s];
        if (p < kProbabilityFloor) {
            p = kProbabilityFloor;
            if (diag)
                ++diag->posterior_clamped;
        }
        out[s] = shift - std::log(p);
    }
}

/// Classifier, marginal density and the constellation they were trained for.
struct LikelihoodModel {
    mlp::Classifier classifier;
    gmm::Mixture mixture;
    channels::Constellation constellation;
    PriorScaling scaling = PriorScaling::exact_bayes;

    trellis::TrellisSpec trellis_spec() const { return {constellation.size(), constellation.memory}; }

    void validate() const
    {
        constellation.validate();
        classifier.validate();
        mixture.validate();
        if (classifier.num_classes() != constellation.num_states())
            throw InvalidParameter("LikelihoodModel: classifier width must equal C^m");
    }

    friend bool operator==(const LikelihoodModel&, const LikelihoodModel&) = default;
};

inline void learned_costs(const LikelihoodModel& model, double y, std::span<double> out, CostDiagnostics* diag = nullptr)
{
    if (!std::isfinite(y))
        throw InvalidInput("learned_costs: non-finite channel output");
    thread_local std::vector<double> post;
    post.resize(model.classifier.num_classes());
    mlp::posterior(model.classifier, y, post);
    bayes_costs(post, gmm::density(model.mixture, y), model.scaling, out, diag);
}

inline std::vector<double> learned_costs(const LikelihoodModel& model, double y)
{
    std::vector<double> c(model.classifier.num_classes());
    learned_costs(model, y, c);
    return c;
}

/// Exact per-state costs -log p(y | s) under a known channel profile. The
/// alpha-stable family uses a tabulated density looked up at the nearest grid
/// point.
/// Support and resolution of the tabulated alpha-stable density.
struct StableGrid {
    double min = -5.0;
    double max = 5.0;
    std::size_t points = 50;
};

class ModelBasedCosts {
public:

    ModelBasedCosts(const channels::ChannelProfile& profile, const channels::Constellation& constellation,
                    const StableGrid& grid = StableGrid{})
        : profile_(profile), constellation_(constellation)
    {
        constellation.validate();
        profile.validate(constellation);
        profile.check_pairing(constellation);
        const trellis::TrellisSpec spec(constellation.size(), constellation.memory);
        const double gain = std::sqrt(profile.snr);
        means_.resize(spec.num_states());
        for (std::size_t s = 0; s < spec.num_states(); ++s) {
            // digits are oldest first; tap tau multiplies S[i - tau + 1]
            const auto digits = spec.decode(s);
            double acc = 0.0;
            for (std::size_t tau = 0; tau < constellation.memory; ++tau)
                acc += profile.taps[tau] * constellation.points[static_cast<std::size_t>(digits[constellation.memory - 1 - tau])];
            means_[s] = gain * acc;
        }
        if (const auto* stable = std::get_if<channels::AlphaStableNoise>(&profile.noise))
            table_ = channels::alpha_stable_pdf_table(stable->params, grid.min, grid.max, grid.points);
    }

    /// Reuses an existing density table (its parameters must match the profile).
    ModelBasedCosts(const channels::ChannelProfile& profile, const channels::Constellation& constellation,
                    channels::StablePdfTable table)
        : ModelBasedCosts(with_gaussian_noise(profile), constellation)
    {
        if (!std::holds_alternative<channels::AlphaStableNoise>(profile.noise))
            throw InvalidScenario("ModelBasedCosts: density table given for a non-stable channel");
        profile_ = profile;
        table_ = std::move(table);
    }

    std::size_t num_states() const noexcept { return means_.size(); }
    /// Noise-free output sqrt(rho) h^T s of each state.
    const std::vector<double>& state_means() const noexcept { return means_; }
    const channels::ChannelProfile& profile() const noexcept { return profile_; }
    const std::optional<channels::StablePdfTable>& table() const noexcept { return table_; }

    void operator()(double y, std::span<double> out) const
    {
        if (!std::isfinite(y))
            throw InvalidInput("model_based_costs: non-finite channel output");
        if (out.size() != means_.size())
            throw InvalidInput("model_based_costs: output span has the wrong length");
        constexpr double inf = std::numeric_limits<double>::infinity();
        std::visit(
            [&](const auto& noise) {
                using T = std::decay_t<decltype(noise)>;
                if constexpr (std::is_same_v<T, channels::GaussianNoise>) {
                    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
                    for (std::size_t s = 0; s < out.size(); ++s) {
                        const double r = y - means_[s];
                        out[s] = 0.5 * r * r + half_log_2pi;
                    }
                } else if constexpr (std::is_same_v<T, channels::PoissonNoise>) {
                    if (y < 0.0 || y != std::floor(y))
                        throw InvalidInput("model_based_costs: Poisson output must be a non-negative integer");
                    const double log_fact = std::lgamma(y + 1.0);
                    for (std::size_t s = 0; s < out.size(); ++s) {
                        const double lambda = means_[s] + 1.0;
                        out[s] = lambda > 0.0 ? lambda - y * std::log(lambda) + log_fact : inf;
                    }
                } else {
                    for (std::size_t s = 0; s < out.size(); ++s)
                        out[s] = -std::log(std::max(table_->nearest(y - means_[s]), kProbabilityFloor));
                }
            },
            profile_.noise);
    }

private:
    static channels::ChannelProfile with_gaussian_noise(channels::ChannelProfile p)
    {
        p.noise = channels::GaussianNoise{};
        return p;
    }

    channels::ChannelProfile profile_;
    channels::Constellation constellation_;
    std::vector<double> means_;
    std::optional<channels::StablePdfTable> table_;
};

inline std::vector<double> model_based_costs(const channels::ChannelProfile& profile,
                                             const channels::Constellation& constellation, double y)
{
    const ModelBasedCosts costs(profile, constellation);
    std::vector<double> out(costs.num_states());
    costs(y, out);
    return out;
}

/// Step-cost provider evaluating a per-output cost function on a block.
template <class PerOutput>
struct BlockCosts {
    const PerOutput& costs;
    std::span<const double> outputs;
    void operator()(std::size_t k, std::span<double> out) const { costs(outputs[k], out); }
};

struct LearnedCostFn {
    const LikelihoodModel& model;
    void operator()(double y, std::span<double> out) const { learned_costs(model, y, out); }
};

inline std::vector<int> detect_block(const LikelihoodModel& model, std::span<const double> outputs)
{
    const LearnedCostFn fn{model};
    return trellis::viterbi_detect(BlockCosts<LearnedCostFn>{fn, outputs}, outputs.size(), model.trellis_spec());
}

inline std::vector<int> detect_block(const ModelBasedCosts& costs, const channels::Constellation& constellation,
                                     std::span<const double> outputs)
{
    return trellis::viterbi_detect(BlockCosts<ModelBasedCosts>{costs, outputs}, outputs.size(),
                                   trellis::TrellisSpec(constellation.size(), constellation.memory));
}

struct ModelTrainingOptions {
    mlp::Architecture architecture{};
    mlp::TrainOptions train{};
    gmm::EmOptions em{};
    PriorScaling scaling = PriorScaling::exact_bayes;
    mlp::InputScaling input_scaling = mlp::InputScaling::moments;
    std::uint64_t init_seed = 0;
};

/// Fresh classifier (standardized on the training outputs) plus a C^m
/// component mixture fitted to the same outputs.
inline LikelihoodModel train_model(const mlp::TrainingSet& data, const channels::Constellation& constellation,
                                   const ModelTrainingOptions& opt = {}, mlp::TrainReport* report = nullptr)
{
    constellation.validate();
    const std::size_t states = constellation.num_states();
    LikelihoodModel model;
    model.constellation = constellation;
    model.scaling = opt.scaling;
    model.classifier = mlp::init(states, opt.init_seed, opt.architecture);
    mlp::standardize_inputs(model.classifier, data.outputs, opt.input_scaling);
    model.classifier = mlp::train(std::move(model.classifier), data, opt.train, report);
    model.mixture = gmm::em_fit(data.outputs, states, opt.em);
    return model;
}

/// Symbol-error count between two index sequences.
inline std::size_t count_errors(std::span<const int> detected, std::span<const int> truth)
{
    if (detected.size() != truth.size())
        throw InvalidInput("count_errors: sequences differ in length");
    std::size_t errors = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        errors += detected[i] != truth[i];
    return errors;
}

} // namespace viterbinet::detector

#endif
