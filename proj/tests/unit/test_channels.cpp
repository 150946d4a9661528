#include "viterbinet/channels.hpp"
#include "viterbinet/stable.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

namespace ch = viterbinet::channels;
using viterbinet::InvalidInput;
using viterbinet::InvalidParameter;
using viterbinet::InvalidScenario;

namespace {

double normal_pdf(double x, double var)
{
    return std::exp(-0.5 * x * x / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

ch::ChannelProfile gaussian(double gamma, double snr_db, std::size_t m = 4)
{
    return {ch::exp_decay_profile(gamma, m), ch::db_to_linear(snr_db)};
}

} // namespace

TEST(Constellation, RejectsDegenerateAlphabets)
{
    EXPECT_THROW((ch::Constellation{{1.0}, 2}.validate()), InvalidParameter);
    EXPECT_THROW((ch::Constellation{{1.0, 1.0}, 2}.validate()), InvalidParameter);
    EXPECT_THROW((ch::Constellation{{-1.0, 1.0}, 0}.validate()), InvalidParameter);
    EXPECT_EQ(ch::Constellation::bpsk(4).num_states(), 16u);
    EXPECT_THROW((ch::Constellation{{0, 1, 2, 3}, 17}.num_states()), InvalidParameter);
}

TEST(ExpDecayProfile, MatchesDirectEvaluation)
{
    const auto h = ch::exp_decay_profile(0.2, 4);
    ASSERT_EQ(h.size(), 4u);
    const double expected[] = {1.0, 0.8187, 0.6703, 0.5488};
    for (std::size_t t = 0; t < 4; ++t)
        EXPECT_NEAR(h[t], expected[t], 5e-5);
    EXPECT_EQ(ch::exp_decay_profile(1.7, 1), std::vector<double>{1.0});
}

TEST(ExpDecayProfile, StrictlyDecreasingWithUnitLead)
{
    for (double g : ch::gamma_grid(0.1, 2.0, 20)) {
        const auto h = ch::exp_decay_profile(g, 6);
        EXPECT_EQ(h[0], 1.0);
        for (std::size_t t = 1; t < h.size(); ++t)
            EXPECT_LT(h[t], h[t - 1]);
    }
}

TEST(ExpDecayProfile, RejectsBadArguments)
{
    EXPECT_THROW(ch::exp_decay_profile(0.0, 4), InvalidParameter);
    EXPECT_THROW(ch::exp_decay_profile(-1.0, 4), InvalidParameter);
    EXPECT_THROW(ch::exp_decay_profile(0.2, 0), InvalidParameter);
}

TEST(GammaGrid, SpansRange)
{
    const auto g = ch::gamma_grid(0.1, 2.0, 20);
    ASSERT_EQ(g.size(), 20u);
    EXPECT_DOUBLE_EQ(g.front(), 0.1);
    EXPECT_DOUBLE_EQ(g.back(), 2.0);
}

TEST(BlockFading, AllCosinesOneGivesStaticProfile)
{
    const ch::FadingSchedule sched;
    const long long lcm = 3LL * 17 * 13 * 11 * 7;
    const auto h = ch::block_fading_profile(sched, lcm);
    const auto ref = ch::exp_decay_profile(0.2, 4);
    for (std::size_t t = 0; t < 4; ++t)
        EXPECT_NEAR(h[t], ref[t], 1e-12);
}

TEST(BlockFading, FirstTapAtItsPeriod)
{
    EXPECT_NEAR(ch::block_fading_profile(ch::FadingSchedule{}, 51)[0], 1.0, 1e-12);
    // off-period: 0.8 + 0.2 cos(2 pi 10 / 51)
    EXPECT_NEAR(ch::block_fading_profile(ch::FadingSchedule{}, 10)[0],
                0.8 + 0.2 * std::cos(2.0 * std::numbers::pi * 10.0 / 51.0), 1e-12);
}

TEST(BlockFading, BoundedAndPeriodic)
{
    const ch::FadingSchedule sched;
    const long long lcm = 51051;
    const auto base = ch::exp_decay_profile(0.2, 4);
    for (long long j = 1; j <= 400; ++j) {
        const auto h = ch::block_fading_profile(sched, j);
        ASSERT_EQ(h.size(), 4u);
        for (std::size_t t = 0; t < 4; ++t) {
            EXPECT_GE(h[t], 0.6 * base[t] - 1e-12);
            EXPECT_LE(h[t], base[t] + 1e-12);
        }
        const auto later = ch::block_fading_profile(sched, j + lcm);
        for (std::size_t t = 0; t < 4; ++t)
            EXPECT_NEAR(later[t], h[t], 1e-12);
    }
    EXPECT_THROW(ch::block_fading_profile(sched, 0), InvalidParameter);
    EXPECT_THROW(ch::block_fading_profile(ch::FadingSchedule{{51, 0}}, 1), InvalidParameter);
}

TEST(Transmit, DeterministicInSeed)
{
    const auto c = ch::Constellation::bpsk(4);
    const auto s = ch::random_symbols(c, 500, 1);
    const auto p = gaussian(0.3, 3.0);
    EXPECT_EQ(ch::transmit(c, s, p, 9), ch::transmit(c, s, p, 9));
    EXPECT_NE(ch::transmit(c, s, p, 9), ch::transmit(c, s, p, 10));
}

TEST(Transmit, HighSnrAllOnesHasPositiveOutputs)
{
    const auto c = ch::Constellation::bpsk(4);
    const std::vector<int> s(1000, 1);
    const auto y = ch::transmit(c, s, gaussian(0.2, 60.0), 3);
    for (double v : y)
        EXPECT_GT(v, 0.0);
}

TEST(Transmit, GaussianMeanMatchesIsiTerm)
{
    // unbalanced symbols so E[S] != 0
    const auto c = ch::Constellation::bpsk(3);
    const std::size_t n = 200000;
    viterbinet::Rng gen(5);
    std::bernoulli_distribution one(0.7);
    std::vector<int> s(n);
    for (int& v : s)
        v = one(gen) ? 1 : 0;
    const ch::ChannelProfile p{ch::exp_decay_profile(0.5, 3), 4.0};
    const auto y = ch::transmit(c, s, p, 6);
    const double es = 0.7 - 0.3;
    const double hsum = std::accumulate(p.taps.begin(), p.taps.end(), 0.0);
    const double expected = std::sqrt(p.snr) * hsum * es;
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : y)
        var += (v - mean) * (v - mean);
    var /= static_cast<double>(n - 1);
    EXPECT_NEAR(mean, expected, 4.0 * std::sqrt(var / static_cast<double>(n)));
}

TEST(Transmit, PoissonZeroInputHasUnitMean)
{
    const auto c = ch::Constellation::ook(4);
    const std::size_t n = 100000;
    const std::vector<int> s(n, 0);
    const ch::ChannelProfile p{ch::exp_decay_profile(0.2, 4), ch::db_to_linear(20.0), ch::PoissonNoise{}};
    const auto y = ch::transmit(c, s, p, 4);
    double sum = 0.0;
    for (double v : y) {
        ASSERT_GE(v, 0.0);
        ASSERT_EQ(v, std::floor(v));
        sum += v;
    }
    // Poisson(1): standard error 1 / sqrt(n)
    EXPECT_NEAR(sum / static_cast<double>(n), 1.0, 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Transmit, PoissonOutputsAreNonNegativeIntegers)
{
    const auto c = ch::Constellation::ook(4);
    const auto s = ch::random_symbols(c, 5000, 2);
    const ch::ChannelProfile p{ch::exp_decay_profile(0.2, 4), ch::db_to_linear(30.0), ch::PoissonNoise{}};
    for (double v : ch::transmit(c, s, p, 8)) {
        EXPECT_GE(v, 0.0);
        EXPECT_EQ(v, std::floor(v));
    }
}

TEST(Transmit, AlphaStableOutputsAreFinite)
{
    const auto c = ch::Constellation::bpsk(4);
    const auto s = ch::random_symbols(c, 20000, 2);
    const ch::ChannelProfile p{ch::exp_decay_profile(0.2, 4), ch::db_to_linear(10.0),
                               ch::AlphaStableNoise{{0.5, 0.75, 1.0, 0.0}}};
    for (double v : ch::transmit(c, s, p, 8))
        EXPECT_TRUE(std::isfinite(v));
}

TEST(Transmit, LeadingOutputsUseZeroPadding)
{
    const auto c = ch::Constellation::bpsk(3);
    const std::vector<int> s{1, 0, 0, 1, 1};
    const ch::ChannelProfile p{{1.0, 0.5, 0.25}, 1.0};
    const auto mean = ch::isi_mean(c, s, p);
    EXPECT_DOUBLE_EQ(mean[0], 1.0);
    EXPECT_DOUBLE_EQ(mean[1], -1.0 + 0.5);
    EXPECT_DOUBLE_EQ(mean[2], -1.0 - 0.5 + 0.25);
    EXPECT_DOUBLE_EQ(mean[3], 1.0 - 0.5 - 0.25);
}

TEST(Transmit, RejectsMismatchedPairingAndShortBlocks)
{
    const auto bpsk = ch::Constellation::bpsk(2);
    const auto ook = ch::Constellation::ook(2);
    const std::vector<int> s{0, 1, 0, 1};
    const ch::ChannelProfile poisson{{1.0, 0.5}, 10.0, ch::PoissonNoise{}};
    const ch::ChannelProfile gauss{{1.0, 0.5}, 10.0};
    EXPECT_THROW(ch::transmit(bpsk, s, poisson, 1), InvalidScenario);
    EXPECT_THROW(ch::transmit(ook, s, gauss, 1), InvalidScenario);
    EXPECT_THROW(ch::transmit(bpsk, std::vector<int>{0, 1}, gauss, 1), InvalidInput);
    EXPECT_THROW(ch::transmit(bpsk, std::vector<int>{0, 1, 2}, gauss, 1), InvalidInput);
    EXPECT_THROW(ch::transmit(bpsk, s, ch::ChannelProfile{{1.0, 0.5}, 0.0}, 1), InvalidParameter);
    EXPECT_THROW(ch::transmit(bpsk, s, ch::ChannelProfile{{1.0}, 1.0}, 1), InvalidParameter);
    EXPECT_THROW(ch::transmit(bpsk, s, ch::ChannelProfile{{1.0, 0.5}, 1.0, ch::AlphaStableNoise{{2.5, 0.0, 1.0, 0.0}}}, 1),
                 InvalidParameter);
}

TEST(PerturbCsi, ZeroVarianceIsIdentity)
{
    const auto h = ch::exp_decay_profile(0.4, 4);
    EXPECT_EQ(ch::perturb_csi(h, 0.0, 3), h);
    EXPECT_THROW(ch::perturb_csi(h, -0.1, 3), InvalidParameter);
}

TEST(PerturbCsi, EmpiricalVarianceMatches)
{
    const std::vector<double> h{1.0, 0.5};
    for (double var : {0.1, 0.08}) {
        double sum = 0.0, sq = 0.0;
        std::size_t n = 0;
        for (std::uint64_t seed = 0; seed < 10000; ++seed) {
            const auto e = ch::perturb_csi(h, var, seed);
            for (std::size_t t = 0; t < h.size(); ++t) {
                const double d = e[t] - h[t];
                sum += d;
                sq += d * d;
                ++n;
            }
        }
        const double mean = sum / static_cast<double>(n);
        const double emp = sq / static_cast<double>(n) - mean * mean;
        EXPECT_NEAR(emp, var, 0.1 * var);
    }
}

TEST(PerturbProfile, PoissonTapsStayNonNegative)
{
    const ch::ChannelProfile p{{0.05, 0.02, 0.01, 0.01}, 100.0, ch::PoissonNoise{}};
    for (std::uint64_t seed = 0; seed < 200; ++seed)
        for (double v : ch::perturb_profile(p, 0.08, seed).taps)
            EXPECT_GE(v, 0.0);
}

TEST(StablePdf, AlphaTwoIsGaussianWithVarianceTwoScaleSquared)
{
    const ch::StableParams p{2.0, 0.0, 1.0, 0.0};
    for (double x = -8.0; x <= 8.0; x += 0.1)
        EXPECT_NEAR(ch::stable_pdf(p, x), normal_pdf(x, 2.0), 1e-3) << "x=" << x;
}

TEST(StablePdf, AlphaOneIsCauchy)
{
    const ch::StableParams p{1.0, 0.0, 1.5, 0.3};
    for (double x = -10.0; x <= 10.0; x += 0.25) {
        const double z = (x - 0.3) / 1.5;
        EXPECT_NEAR(ch::stable_pdf(p, x), 1.0 / (std::numbers::pi * 1.5 * (1.0 + z * z)), 1e-3) << "x=" << x;
    }
}

TEST(StablePdf, TableIsNonNegativeOnReferenceGrid)
{
    const auto table = ch::alpha_stable_pdf_table({0.5, 0.75, 1.0, 0.0}, -5.0, 5.0, 50);
    ASSERT_EQ(table.size(), 50u);
    for (double v : table.values())
        EXPECT_GE(v, 0.0);
    EXPECT_DOUBLE_EQ(table.abscissa(0), -5.0);
    EXPECT_DOUBLE_EQ(table.abscissa(49), 5.0);
    // nearest lookup clamps at the edges
    EXPECT_EQ(table.nearest(-100.0), table.values().front());
    EXPECT_EQ(table.nearest(100.0), table.values().back());
    EXPECT_EQ(table.nearest(table.abscissa(17) + 0.4 * table.step()), table.values()[17]);
    EXPECT_THROW(ch::alpha_stable_pdf_table({0.5, 0.75, 1.0, 0.0}, -5.0, 5.0, 1), InvalidParameter);
    EXPECT_THROW(ch::alpha_stable_pdf_table({0.5, 0.75, 1.0, 0.0}, 5.0, -5.0, 50), InvalidParameter);
}

TEST(StableSampler, MassAgreesWithDensity)
{
    // P(-1 < X < 2) from samples vs the integrated density
    const ch::StableParams p{0.5, 0.75, 1.0, 0.0};
    viterbinet::Rng gen(17);
    const std::size_t n = 200000;
    std::size_t inside = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = ch::sample_stable(p, gen);
        inside += x > -1.0 && x < 2.0;
    }
    const std::size_t grid = 3000;
    double mass = 0.0;
    const double h = 3.0 / grid;
    for (std::size_t i = 0; i <= grid; ++i) {
        const double w = (i == 0 || i == grid) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        mass += w * ch::stable_pdf(p, -1.0 + h * static_cast<double>(i));
    }
    mass *= h / 3.0;
    const double emp = static_cast<double>(inside) / static_cast<double>(n);
    EXPECT_NEAR(emp, mass, 4.0 * std::sqrt(mass * (1.0 - mass) / static_cast<double>(n)));
}

TEST(StableSampler, AlphaTwoHasVarianceTwoScaleSquared)
{
    const ch::StableParams p{2.0, 0.0, 1.0 / std::sqrt(2.0), 0.0};
    viterbinet::Rng gen(3);
    const std::size_t n = 100000;
    double s = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = ch::sample_stable(p, gen);
        s += x;
        sq += x * x;
    }
    EXPECT_NEAR(s / n, 0.0, 0.02);
    EXPECT_NEAR(sq / n, 1.0, 0.03);
}
