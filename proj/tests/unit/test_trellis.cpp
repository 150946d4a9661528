#include "viterbinet/channels.hpp"
#include "viterbinet/detector.hpp"
#include "viterbinet/trellis.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <limits>
#include <random>
#include <set>

namespace tr = viterbinet::trellis;
using viterbinet::InstanceTooLarge;
using viterbinet::InvalidParameter;
using viterbinet::NoValidPath;

namespace {

std::vector<double> random_table(std::size_t T, std::size_t S, std::uint64_t seed)
{
    viterbinet::Rng gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> t(T * S);
    for (double& v : t)
        v = u(gen);
    return t;
}

} // namespace

TEST(TrellisSpec, EncodeDecodeIsBijective)
{
    for (std::size_t C : {2u, 3u, 4u})
        for (std::size_t m : {1u, 2u, 3u}) {
            const tr::TrellisSpec spec(C, m);
            std::set<std::vector<int>> seen;
            for (std::size_t s = 0; s < spec.num_states(); ++s) {
                const auto d = spec.decode(s);
                EXPECT_EQ(spec.encode(d), s);
                EXPECT_EQ(spec.oldest(s), d.front());
                EXPECT_EQ(spec.newest(s), d.back());
                seen.insert(d);
            }
            EXPECT_EQ(seen.size(), spec.num_states());
        }
}

TEST(TrellisSpec, PredecessorsShareTheOverlap)
{
    const tr::TrellisSpec spec(3, 3);
    for (std::size_t s = 0; s < spec.num_states(); ++s) {
        const auto d = spec.decode(s);
        std::set<std::size_t> preds;
        for (std::size_t j = 0; j < 3; ++j) {
            const std::size_t u = spec.predecessor(s, j);
            preds.insert(u);
            const auto pd = spec.decode(u);
            // u's newest m-1 symbols are s's oldest m-1
            EXPECT_TRUE(std::equal(pd.begin() + 1, pd.end(), d.begin()));
            EXPECT_EQ(spec.successor(u, d.back()), s);
        }
        EXPECT_EQ(preds.size(), 3u);
    }
}

TEST(TrellisSpec, RejectsInvalidShapes)
{
    EXPECT_THROW(tr::TrellisSpec(1, 2), InvalidParameter);
    EXPECT_THROW(tr::TrellisSpec(2, 0), InvalidParameter);
    EXPECT_THROW(tr::TrellisSpec(2, 40), InvalidParameter);
}

TEST(Viterbi, NoiselessBpskIsRecoveredExactly)
{
    namespace ch = viterbinet::channels;
    const auto c = ch::Constellation::bpsk(4);
    const ch::ChannelProfile p{ch::exp_decay_profile(0.3, 4), 1e6};
    const auto s = ch::random_symbols(c, 300, 4);
    const auto y = ch::transmit(c, s, p, 5);
    const viterbinet::detector::ModelBasedCosts costs(p, c);
    EXPECT_EQ(viterbinet::detector::detect_block(costs, c, y), s);
}

TEST(Viterbi, MatchesBruteForceSmall)
{
    const tr::TrellisSpec spec(2, 2);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto table = random_table(8, spec.num_states(), seed);
        const tr::CostTable costs{table};
        EXPECT_EQ(tr::viterbi_detect(costs, 8, spec), tr::brute_force_ml(costs, 8, spec)) << "seed " << seed;
    }
}

TEST(Viterbi, MatchesBruteForceMemoryFour)
{
    const tr::TrellisSpec spec(2, 4);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto table = random_table(10, spec.num_states(), 1000 + seed);
        const tr::CostTable costs{table};
        EXPECT_EQ(tr::viterbi_detect(costs, 10, spec), tr::brute_force_ml(costs, 10, spec)) << "seed " << seed;
    }
}

TEST(Viterbi, MatchesBruteForceTernary)
{
    const tr::TrellisSpec spec(3, 2);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto table = random_table(7, spec.num_states(), 5000 + seed);
        const tr::CostTable costs{table};
        EXPECT_EQ(tr::viterbi_detect(costs, 7, spec), tr::brute_force_ml(costs, 7, spec));
    }
}

TEST(Viterbi, InvariantToPerStepOffsets)
{
    const tr::TrellisSpec spec(2, 3);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const std::size_t T = 40;
        auto table = random_table(T, spec.num_states(), seed);
        const auto base = tr::viterbi_detect(tr::CostTable{table}, T, spec);
        viterbinet::Rng gen(seed + 77);
        std::uniform_real_distribution<double> off(-50.0, 50.0);
        for (std::size_t k = 0; k < T; ++k) {
            const double f = off(gen);
            for (std::size_t s = 0; s < spec.num_states(); ++s)
                table[k * spec.num_states() + s] += f;
        }
        EXPECT_EQ(tr::viterbi_detect(tr::CostTable{table}, T, spec), base);
    }
}

TEST(BruteForce, AgreesUnderOffsetsAndSingleStep)
{
    const tr::TrellisSpec spec(2, 3);
    auto table = random_table(6, spec.num_states(), 3);
    const auto base = tr::brute_force_ml(tr::CostTable{table}, 6, spec);
    for (std::size_t k = 0; k < 6; ++k)
        for (std::size_t s = 0; s < spec.num_states(); ++s)
            table[k * spec.num_states() + s] += 3.0 * static_cast<double>(k) - 1.0;
    EXPECT_EQ(tr::brute_force_ml(tr::CostTable{table}, 6, spec), base);

    // one step: the window of the cheapest state, newest symbol last
    const auto one = random_table(1, spec.num_states(), 11);
    const auto best = static_cast<std::size_t>(std::min_element(one.begin(), one.end()) - one.begin());
    EXPECT_EQ(tr::brute_force_ml(tr::CostTable{one}, 1, spec), std::vector<int>{spec.newest(best)});
}

TEST(BruteForce, RefusesLargeInstances)
{
    const tr::TrellisSpec spec(2, 4);
    const auto table = random_table(30, spec.num_states(), 1);
    EXPECT_THROW(tr::brute_force_ml(tr::CostTable{table}, 30, spec), InstanceTooLarge);
}

TEST(Viterbi, TiesGoToLowestIndex)
{
    const tr::TrellisSpec spec(2, 2);
    const std::vector<double> zeros(10 * 4, 0.0);
    EXPECT_EQ(tr::viterbi_detect(tr::CostTable{zeros}, 10, spec), std::vector<int>(10, 0));
}

TEST(Viterbi, ErrorsOnShortBlocksAndDeadTrellis)
{
    const tr::TrellisSpec spec(2, 2);
    const std::vector<double> t(8, 0.0);
    EXPECT_THROW(tr::viterbi_detect(tr::CostTable{t}, 2, spec), InvalidParameter);
    std::vector<double> dead(5 * 4, 1.0);
    for (std::size_t s = 0; s < 4; ++s)
        dead[2 * 4 + s] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(tr::viterbi_detect(tr::CostTable{dead}, 5, spec), NoValidPath);
}

TEST(Viterbi, InfiniteCostsForbidStates)
{
    const tr::TrellisSpec spec(2, 2);
    auto t = random_table(12, 4, 8);
    // forbid every window whose newest symbol is 1 at step 5
    for (std::size_t s = 0; s < 4; ++s)
        if (spec.newest(s) == 1)
            t[5 * 4 + s] = std::numeric_limits<double>::infinity();
    const auto d = tr::viterbi_detect(tr::CostTable{t}, 12, spec);
    EXPECT_EQ(d[5], 0);
    EXPECT_EQ(d, tr::brute_force_ml(tr::CostTable{t}, 12, spec));
}

TEST(Viterbi, PathCostsNonDecreasingAlongSurvivors)
{
    const tr::TrellisSpec spec(2, 3);
    const std::size_t T = 60;
    const auto table = random_table(T, spec.num_states(), 21);
    const auto run = tr::viterbi_run(tr::CostTable{table}, T, spec, tr::NoDecisionSink{}, tr::TrellisOptions{true});
    ASSERT_EQ(run.decisions.size(), T);
    for (std::size_t k = 1; k < T; ++k)
        for (std::size_t s = 0; s < spec.num_states(); ++s) {
            const std::size_t u = run.survivors[k * spec.num_states() + s];
            EXPECT_GE(run.raw_path_cost(k, s), run.raw_path_cost(k - 1, u) - 1e-9);
        }
}

TEST(Viterbi, BestCostEqualsCostOfDecodedSequence)
{
    const tr::TrellisSpec spec(2, 2);
    const std::size_t T = 9;
    const auto table = random_table(T, 4, 31);
    const auto run = tr::viterbi_run(tr::CostTable{table}, T, spec);
    // the traceback also fixes the free pre-block symbol
    double best = std::numeric_limits<double>::infinity();
    for (int pre = 0; pre < 2; ++pre) {
        double total = 0.0;
        int prev = pre;
        for (std::size_t k = 0; k < T; ++k) {
            const int window[] = {prev, run.decisions[k]};
            total += table[k * 4 + spec.encode(window)];
            prev = run.decisions[k];
        }
        best = std::min(best, total);
    }
    EXPECT_NEAR(run.best_cost, best, 1e-12);
}

TEST(Viterbi, DecisionIsEmittedBeforeNextCostQuery)
{
    const tr::TrellisSpec spec(2, 3);
    const std::size_t T = 50;
    const auto table = random_table(T, spec.num_states(), 2);
    std::size_t queried = 0;
    std::vector<std::size_t> queries_at_decision(T, 0);
    std::vector<int> emitted(T, -1);
    auto provider = [&](std::size_t k, std::span<double> out) {
        EXPECT_EQ(k, queried);
        ++queried;
        tr::CostTable{table}(k, out);
    };
    auto sink = [&](std::size_t pos, int symbol) {
        queries_at_decision[pos] = queried;
        emitted[pos] = symbol;
    };
    const auto run = tr::viterbi_run(provider, T, spec, sink);
    for (std::size_t pos = 0; pos + spec.memory() <= T; ++pos) {
        // position k-m+1 is decided after step k, i.e. after k+1 queries
        EXPECT_EQ(queries_at_decision[pos], pos + spec.memory());
        EXPECT_EQ(emitted[pos], run.sequential_decisions[pos]);
    }
}

TEST(Viterbi, SequentialDecisionsAgreeAtHighSnr)
{
    namespace ch = viterbinet::channels;
    const auto c = ch::Constellation::bpsk(4);
    const ch::ChannelProfile p{ch::exp_decay_profile(0.3, 4), ch::db_to_linear(20.0)};
    const auto s = ch::random_symbols(c, 2000, 40);
    const auto y = ch::transmit(c, s, p, 41);
    const viterbinet::detector::ModelBasedCosts costs(p, c);
    const auto run = tr::viterbi_run(viterbinet::detector::BlockCosts<viterbinet::detector::ModelBasedCosts>{costs, y},
                                     y.size(), tr::TrellisSpec(2, 4));
    EXPECT_EQ(run.sequential_decisions, run.decisions);
    EXPECT_EQ(run.decisions, s);
}

TEST(Viterbi, RuntimeIsLinearInBlockLength)
{
    const tr::TrellisSpec spec(2, 4);
    const std::size_t T = 20000;
    const auto table = random_table(2 * T, spec.num_states(), 9);
    auto time_of = [&](std::size_t n) {
        double best = 1e300;
        for (int rep = 0; rep < 7; ++rep) {
            const auto start = std::chrono::steady_clock::now();
            const auto d = tr::viterbi_detect(tr::CostTable{table}, n, spec);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            EXPECT_EQ(d.size(), n);
            best = std::min(best, secs);
        }
        return best;
    };
    time_of(T);
    const double ratio = time_of(2 * T) / time_of(T);
    RecordProperty("time_ratio", std::to_string(ratio));
    EXPECT_GE(ratio, 1.7);
    EXPECT_LE(ratio, 2.3);
}
