#ifndef VITERBINET_BENCH_TRAINING_HPP
#define VITERBINET_BENCH_TRAINING_HPP

#include "viterbinet/channels.hpp"
#include "viterbinet/detector.hpp"
#include "viterbinet/error.hpp"
#include "viterbinet/mlp.hpp"
#include "viterbinet/random.hpp"

#include <cstdint>
#include <vector>

namespace viterbinet::bench {

/// n labelled (output, state) pairs simulated on one channel.
inline mlp::TrainingSet training_data(const channels::ChannelProfile& profile, const channels::Constellation& c,
                                      std::size_t n, std::uint64_t seed)
{
    const auto symbols = channels::random_symbols(c, n + c.memory - 1, derive_seed(seed, {1}));
    const auto outputs = channels::transmit(c, symbols, profile, derive_seed(seed, {2}));
    return mlp::make_training_set(outputs, symbols, c.size(), c.memory);
}

inline detector::ModelTrainingOptions seeded(detector::ModelTrainingOptions opt, std::uint64_t seed)
{
    opt.init_seed = derive_seed(seed, {0x1a});
    opt.train.seed = derive_seed(seed, {0x7a});
    opt.em.seed = derive_seed(seed, {0xe3});
    return opt;
}

/// Model trained on n samples from a single channel.
inline detector::LikelihoodModel train_on_profile(const channels::ChannelProfile& profile,
                                                  const channels::Constellation& c, std::size_t n,
                                                  const detector::ModelTrainingOptions& opt, std::uint64_t seed)
{
    return detector::train_model(training_data(profile, c, n, derive_seed(seed, {0})), c, seeded(opt, seed));
}

/// One model trained on `total` samples split evenly over several channels
/// (the first total % K channels get one extra sample).
inline detector::LikelihoodModel composite_train(const std::vector<channels::ChannelProfile>& profiles,
                                                 const channels::Constellation& c, std::size_t total,
                                                 const detector::ModelTrainingOptions& opt, std::uint64_t seed)
{
    if (profiles.empty())
        throw InvalidParameter("composite_train: empty profile set");
    if (total < profiles.size())
        throw InvalidParameter("composite_train: fewer samples than profiles");
    mlp::TrainingSet pooled;
    const std::size_t base = total / profiles.size();
    const std::size_t extra = total % profiles.size();
    for (std::size_t k = 0; k < profiles.size(); ++k) {
        const std::size_t n = base + (k < extra ? 1 : 0);
        const auto part = training_data(profiles[k], c, n, derive_seed(seed, {k}));
        pooled.outputs.insert(pooled.outputs.end(), part.outputs.begin(), part.outputs.end());
        pooled.labels.insert(pooled.labels.end(), part.labels.begin(), part.labels.end());
    }
    return detector::train_model(pooled, c, seeded(opt, seed));
}

/// Model trained across `realizations` noisy copies of the profile's taps.
inline detector::LikelihoodModel train_on_noisy_csi(const channels::ChannelProfile& profile,
                                                    const channels::Constellation& c, std::size_t n,
                                                    double variance, std::size_t realizations,
                                                    const detector::ModelTrainingOptions& opt, std::uint64_t seed)
{
    std::vector<channels::ChannelProfile> draws;
    for (std::size_t r = 0; r < realizations; ++r)
        draws.push_back(channels::perturb_profile(profile, variance, derive_seed(seed, {0x5e, r})));
    return composite_train(draws, c, n, opt, seed);
}

} // namespace viterbinet::bench

#endif
