#ifndef VITERBINET_BENCH_SWEEP_HPP
#define VITERBINET_BENCH_SWEEP_HPP

// SER sweep over (SNR, channel profile) cells. In each cell the learned
// detectors are trained once, then every detector decodes the same
// evaluation blocks, so error counts can be compared pairwise.

#include "viterbinet/bench/results.hpp"
#include "viterbinet/bench/scenario.hpp"
#include "viterbinet/bench/training.hpp"
#include "viterbinet/channels.hpp"
#include "viterbinet/detector.hpp"
#include "viterbinet/random.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace viterbinet::bench {

/// Evaluation block lengths for n symbols: as many blocks of at least
/// `block_length` as fit, with the remainder spread over them.
inline std::vector<std::size_t> split_blocks(std::size_t n, std::size_t block_length)
{
    const std::size_t count = std::max<std::size_t>(1, n / block_length);
    std::vector<std::size_t> sizes(count, n / count);
    for (std::size_t i = 0; i < n % count; ++i)
        ++sizes[i];
    return sizes;
}

inline channels::ChannelProfile sweep_profile(const Scenario& sc, double gamma, double snr_db)
{
    return {channels::exp_decay_profile(gamma, sc.memory), channels::db_to_linear(snr_db), sc.noise};
}

/// Density table shared by every alpha-stable baseline of a scenario.
inline std::optional<channels::StablePdfTable> scenario_table(const Scenario& sc)
{
    if (const auto* s = std::get_if<channels::AlphaStableNoise>(&sc.noise))
        return channels::alpha_stable_pdf_table(s->params, sc.grid.min, sc.grid.max, sc.grid.points);
    return std::nullopt;
}

inline detector::ModelBasedCosts baseline_costs(const channels::ChannelProfile& profile,
                                                const channels::Constellation& c,
                                                const std::optional<channels::StablePdfTable>& table)
{
    if (table)
        return detector::ModelBasedCosts(profile, c, *table);
    return detector::ModelBasedCosts(profile, c);
}

/// Called after each finished (SNR, profile) cell.
using Progress = std::function<void(const std::string&)>;

inline StudyResult run_sweep(const Scenario& sc, const Progress& progress = {})
{
    sc.validate();
    if (sc.study != Study::sweep)
        throw InvalidScenario("run_sweep: scenario '" + sc.name + "' is not a sweep");
    const auto c = sc.constellation();
    const auto table = scenario_table(sc);
    const auto opt = sc.training_options();
    const std::size_t n_det = sc.detectors.size();

    StudyResult result;
    result.scenario = sc.name;
    result.seed = sc.seed;
    result.detectors = sc.detectors;
    result.snr_db = sc.snr_db;

    const std::size_t n_prof = sc.gammas.size();
    for (std::size_t i = 0; i < sc.snr_db.size(); ++i) {
        PointTally tally(n_det);
        for (std::size_t p = 0; p < n_prof; ++p) {
            const std::uint64_t cell = derive_seed(sc.seed, {snr_tag(sc.snr_db[i]), p});
            const auto profile = sweep_profile(sc, sc.gammas[p], sc.snr_db[i]);

            std::optional<detector::LikelihoodModel> net, noisy_net;
            if (sc.uses(names::viterbinet))
                net = train_on_profile(profile, c, sc.training.samples, opt, derive_seed(cell, {10}));
            if (sc.uses(names::viterbinet_noisy_csi))
                noisy_net = train_on_noisy_csi(profile, c, sc.training.samples, sc.csi_variance,
                                               sc.training.noisy_realizations, opt, derive_seed(cell, {11}));
            std::optional<detector::ModelBasedCosts> csi;
            if (sc.uses(names::viterbi_csi))
                csi.emplace(baseline_costs(profile, c, table));

            const std::size_t n = sc.budget / n_prof + (p < sc.budget % n_prof ? 1 : 0);
            const auto sizes = split_blocks(n, sc.block_length);
            for (std::size_t b = 0; b < sizes.size(); ++b) {
                const auto symbols = channels::random_symbols(c, sizes[b], derive_seed(cell, {20, b}));
                const auto outputs = channels::transmit(c, symbols, profile, derive_seed(cell, {21, b}));
                std::vector<std::vector<std::uint8_t>> wrong(n_det);
                for (std::size_t d = 0; d < n_det; ++d) {
                    const std::string& name = sc.detectors[d];
                    std::vector<int> decided;
                    if (name == names::viterbinet) {
                        decided = detector::detect_block(*net, outputs);
                    } else if (name == names::viterbinet_noisy_csi) {
                        decided = detector::detect_block(*noisy_net, outputs);
                    } else if (name == names::viterbi_csi) {
                        decided = detector::detect_block(*csi, c, outputs);
                    } else {
                        const auto estimate =
                            channels::perturb_profile(profile, sc.csi_variance, derive_seed(cell, {22, b}));
                        decided = detector::detect_block(baseline_costs(estimate, c, table), c, outputs);
                    }
                    wrong[d].resize(symbols.size());
                    for (std::size_t t = 0; t < symbols.size(); ++t)
                        wrong[d][t] = decided[t] != symbols[t];
                }
                tally.add(wrong);
            }
            if (progress) {
                char buf[128];
                std::snprintf(buf, sizeof buf, "snr %g dB, profile %zu/%zu done", sc.snr_db[i], p + 1, n_prof);
                progress(buf);
            }
        }
        result.points.push_back(std::move(tally));
    }
    return result;
}

} // namespace viterbinet::bench

#endif
