#ifndef VITERBINET_BENCH_FADING_HPP
#define VITERBINET_BENCH_FADING_HPP

// Coded block-fading study: one RS codeword per block, the taps of block j
// follow the fading schedule, and each detector's decoded bits are compared
// with the transmitted information bits.

#include "viterbinet/bench/results.hpp"
#include "viterbinet/bench/scenario.hpp"
#include "viterbinet/bench/sweep.hpp"
#include "viterbinet/bench/training.hpp"
#include "viterbinet/channels.hpp"
#include "viterbinet/detector.hpp"
#include "viterbinet/fec.hpp"
#include "viterbinet/online.hpp"
#include "viterbinet/random.hpp"

#include "json.hpp"

#include <optional>
#include <ostream>
#include <vector>

namespace viterbinet::bench {

inline channels::ChannelProfile fading_profile(const Scenario& sc, long long block, double snr_db)
{
    return {channels::block_fading_profile(sc.fading.schedule, block), channels::db_to_linear(snr_db), sc.noise};
}

struct FadingResult {
    StudyResult study;
    /// Per-block online trace for each SNR point (empty without the online detector).
    std::vector<std::vector<online::BlockRecord>> online_traces;
    std::vector<online::OnlineCounters> online_counters;
};

/// With `log` set, writes one JSON line per online block.
inline FadingResult run_fading(const Scenario& sc, std::ostream* log = nullptr, const Progress& progress = {})
{
    sc.validate();
    if (sc.study != Study::fading)
        throw InvalidScenario("run_fading: scenario '" + sc.name + "' is not a fading study");
    const auto c = sc.constellation();
    const auto table = scenario_table(sc);
    const auto opt = sc.training_options();
    const std::size_t n_det = sc.detectors.size();
    const std::size_t n_blocks = sc.budget;

    FadingResult out;
    out.study.scenario = sc.name;
    out.study.seed = sc.seed;
    out.study.detectors = sc.detectors;
    out.study.snr_db = sc.snr_db;

    for (std::size_t i = 0; i < sc.snr_db.size(); ++i) {
        const double snr = sc.snr_db[i];
        const std::uint64_t point = derive_seed(sc.seed, {snr_tag(snr)});
        const auto first = fading_profile(sc, 1, snr);

        std::optional<detector::LikelihoodModel> initial, composite;
        if (sc.uses(names::viterbinet_initial) || sc.uses(names::viterbinet_online))
            initial = train_on_profile(first, c, sc.training.samples, opt, derive_seed(point, {1}));
        if (sc.uses(names::viterbinet_composite)) {
            std::vector<channels::ChannelProfile> pool;
            for (std::size_t k = 1; k <= sc.fading.composite_profiles; ++k)
                pool.push_back(fading_profile(sc, static_cast<long long>(sc.fading.composite_stride * k), snr));
            composite = composite_train(pool, c, sc.training.samples, opt, derive_seed(point, {2}));
        }
        std::optional<detector::ModelBasedCosts> assumed_first;
        if (sc.uses(names::viterbi_initial))
            assumed_first.emplace(baseline_costs(first, c, table));

        std::vector<online::TransmittedBlock> blocks;
        blocks.reserve(n_blocks);
        for (std::size_t j = 1; j <= n_blocks; ++j) {
            Rng gen(derive_seed(point, {3, j}));
            std::vector<std::uint8_t> bits(fec::kInfoBits);
            for (auto& b : bits)
                b = static_cast<std::uint8_t>(gen() & 1u);
            const auto coded = fec::encode_block(bits, c);
            blocks.push_back({channels::transmit(c, coded.channel_symbols,
                                                 fading_profile(sc, static_cast<long long>(j), snr),
                                                 derive_seed(point, {4, j})),
                              std::move(bits)});
        }

        std::vector<online::BlockRecord> trace;
        std::vector<std::vector<std::uint8_t>> online_bits;
        if (sc.uses(names::viterbinet_online)) {
            online::OnlineState state{*initial, sc.online_options(), {}, derive_seed(point, {5})};
            auto stream = online::run_stream(
                std::move(state), [&](std::size_t j) { return blocks[j - 1]; }, n_blocks);
            trace = std::move(stream.trace);
            online_bits = std::move(stream.decoded);
            out.online_counters.push_back(stream.final_state.counters);
            if (log)
                for (const auto& rec : trace) {
                    auto line = online::to_json(rec);
                    line["scenario"] = sc.name;
                    line["snr_db"] = snr;
                    *log << line.dump() << '\n';
                }
        } else {
            out.online_counters.push_back({});
        }

        PointTally tally(n_det);
        for (std::size_t j = 1; j <= n_blocks; ++j) {
            const auto& block = blocks[j - 1];
            std::vector<std::vector<std::uint8_t>> wrong(n_det);
            for (std::size_t d = 0; d < n_det; ++d) {
                const std::string& name = sc.detectors[d];
                std::vector<std::uint8_t> bits;
                if (name == names::viterbinet_online) {
                    bits = online_bits[j - 1];
                } else {
                    std::vector<int> symbols;
                    if (name == names::viterbinet_initial)
                        symbols = detector::detect_block(*initial, block.outputs);
                    else if (name == names::viterbinet_composite)
                        symbols = detector::detect_block(*composite, block.outputs);
                    else if (name == names::viterbi_initial)
                        symbols = detector::detect_block(*assumed_first, c, block.outputs);
                    else
                        symbols = detector::detect_block(
                            baseline_costs(fading_profile(sc, static_cast<long long>(j), snr), c, table), c,
                            block.outputs);
                    bits = fec::decode_symbols(symbols, c).info_bits;
                }
                wrong[d].resize(block.info_bits.size());
                for (std::size_t t = 0; t < bits.size(); ++t)
                    wrong[d][t] = bits[t] != block.info_bits[t];
            }
            tally.add(wrong);
        }
        out.study.points.push_back(std::move(tally));
        out.online_traces.push_back(std::move(trace));
        if (progress) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "snr %g dB: %zu blocks done", snr, n_blocks);
            progress(buf);
        }
    }
    return out;
}

} // namespace viterbinet::bench

#endif
