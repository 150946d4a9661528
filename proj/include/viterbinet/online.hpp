#ifndef VITERBINET_ONLINE_HPP
#define VITERBINET_ONLINE_HPP

// Decision-directed online retraining over coded blocks: detect, decode, and
// when the decoder reports few enough corrected bit errors, re-encode the
// decoded bits into meta-training and update the classifier and the mixture.

#include "viterbinet/detector.hpp"
#include "viterbinet/error.hpp"
#include "viterbinet/fec.hpp"
#include "viterbinet/gmm.hpp"
#include "viterbinet/mlp.hpp"
#include "viterbinet/random.hpp"

#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

namespace viterbinet::online {

struct OnlineOptions {
    /// Retrain only when corrected bit errors / information bits is below this.
    double threshold = 0.02;
    mlp::TrainOptions retrain{20, 1e-4, 128, 0};
    gmm::EmOptions refit{50, 1e-6, 0, 5, 1e-6};

    void validate() const
    {
        if (!(threshold >= 0.0 && threshold <= 1.0))
            throw InvalidParameter("OnlineOptions: threshold must lie in [0, 1]");
    }
};

struct OnlineCounters {
    std::size_t processed = 0;
    std::size_t retrained = 0;
    std::size_t skipped = 0;

    friend bool operator==(const OnlineCounters&, const OnlineCounters&) = default;
};

struct OnlineState {
    detector::LikelihoodModel model;
    OnlineOptions options;
    OnlineCounters counters;
    std::uint64_t seed = 0;
};

struct BlockOutcome {
    std::vector<std::uint8_t> bits;
    std::vector<int> symbols;
    std::size_t epsilon = 0;
    bool decode_ok = false;
    bool retrained = false;
};

struct RsBlockDecoder {
    fec::DecodeResult operator()(std::span<const int> symbols, const channels::Constellation& c) const
    {
        return fec::decode_symbols(symbols, c);
    }
};

/// One iteration of the online loop. The input state is not modified; the
/// returned state carries the (possibly) retrained model and updated counters.
template <class Decoder = RsBlockDecoder>
std::pair<BlockOutcome, OnlineState> process_block(OnlineState state, std::span<const double> outputs,
                                                   Decoder&& decode = {})
{
    state.options.validate();
    const auto& c = state.model.constellation;

    BlockOutcome out;
    out.symbols = detector::detect_block(state.model, outputs);
    const fec::DecodeResult decoded = decode(std::span<const int>(out.symbols), c);
    out.bits = decoded.info_bits;
    out.epsilon = decoded.corrected_bits;
    out.decode_ok = decoded.decode_ok;

    const double error_fraction = static_cast<double>(decoded.corrected_bits) / static_cast<double>(decoded.info_bits.size());
    ++state.counters.processed;
    if (decoded.decode_ok && error_fraction < state.options.threshold) {
        const auto meta = fec::encode_block(decoded.info_bits, c).channel_symbols;
        const auto data = mlp::make_training_set(outputs, meta, c.size(), c.memory);
        mlp::TrainOptions opt = state.options.retrain;
        opt.seed = derive_seed(state.seed, {0x7e7a, state.counters.processed});
        state.model.classifier = mlp::train(std::move(state.model.classifier), data, opt);
        gmm::EmOptions em = state.options.refit;
        em.seed = derive_seed(state.seed, {0xe3, state.counters.processed});
        state.model.mixture = gmm::warm_refit(state.model.mixture, outputs, em);
        ++state.counters.retrained;
        out.retrained = true;
    } else {
        ++state.counters.skipped;
    }
    return {std::move(out), std::move(state)};
}

/// Channel outputs of one block and the bits that produced them.
struct TransmittedBlock {
    std::vector<double> outputs;
    std::vector<std::uint8_t> info_bits;
};

struct BlockRecord {
    std::size_t block = 0;
    std::size_t epsilon = 0;
    bool decode_ok = false;
    bool retrained = false;
    std::size_t bit_errors = 0;
    double ber = 0.0;
};

inline nlohmann::json to_json(const BlockRecord& r)
{
    return nlohmann::json{{"block", r.block},       {"epsilon", r.epsilon},       {"decode_ok", r.decode_ok},
                          {"retrained", r.retrained}, {"bit_errors", r.bit_errors}, {"ber", r.ber}};
}

struct StreamResult {
    std::vector<BlockRecord> trace;
    /// Decoded information bits of each block.
    std::vector<std::vector<std::uint8_t>> decoded;
    OnlineState final_state;
};

/// Feeds blocks 1..n_blocks from `next_block(j)` through process_block.
/// With `log` set, writes one JSON object per block.
template <class BlockSource, class Decoder = RsBlockDecoder>
StreamResult run_stream(OnlineState initial, BlockSource&& next_block, std::size_t n_blocks, std::ostream* log = nullptr,
                        Decoder&& decode = {})
{
    if (n_blocks < 1)
        throw InvalidParameter("run_stream: need at least one block");
    StreamResult result;
    result.trace.reserve(n_blocks);
    result.decoded.reserve(n_blocks);
    OnlineState state = std::move(initial);
    for (std::size_t j = 1; j <= n_blocks; ++j) {
        const TransmittedBlock block = next_block(j);
        auto [outcome, next] = process_block(std::move(state), block.outputs, decode);
        state = std::move(next);
        BlockRecord rec;
        rec.block = j;
        rec.epsilon = outcome.epsilon;
        rec.decode_ok = outcome.decode_ok;
        rec.retrained = outcome.retrained;
        rec.bit_errors = fec::hamming_distance(outcome.bits, block.info_bits);
        rec.ber = static_cast<double>(rec.bit_errors) / static_cast<double>(block.info_bits.size());
        if (log)
            *log << to_json(rec).dump() << '\n';
        result.trace.push_back(rec);
        result.decoded.push_back(std::move(outcome.bits));
    }
    result.final_state = std::move(state);
    return result;
}

} // namespace viterbinet::online

#endif
