#include "viterbinet/bench/stats.hpp"
#include "viterbinet/bench/training.hpp"
#include "viterbinet/channels.hpp"
#include "viterbinet/detector.hpp"
#include "viterbinet/model_io.hpp"
#include "viterbinet/trellis.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

namespace ch = viterbinet::channels;
namespace det = viterbinet::detector;
namespace tr = viterbinet::trellis;
using viterbinet::InvalidInput;

namespace {

const ch::Constellation kBpsk = ch::Constellation::bpsk(4);

ch::ChannelProfile awgn(double snr_db, double gamma = 0.2)
{
    return {ch::exp_decay_profile(gamma, 4), ch::db_to_linear(snr_db)};
}

/// Exact Gaussian posterior over states and the mixture marginal, given the
/// state means of a unit-variance channel.
void analytic_posterior(const std::vector<double>& mu, double y, std::vector<double>& post, double& marginal)
{
    const std::size_t S = mu.size();
    post.assign(S, 0.0);
    double top = -1e300;
    for (std::size_t s = 0; s < S; ++s)
        top = std::max(top, -0.5 * (y - mu[s]) * (y - mu[s]));
    double total = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        post[s] = std::exp(-0.5 * (y - mu[s]) * (y - mu[s]) - top);
        total += post[s];
    }
    for (double& p : post)
        p /= total;
    marginal = std::exp(top) * total / std::sqrt(2.0 * std::numbers::pi) / static_cast<double>(S);
}

const det::LikelihoodModel& trained_awgn_model()
{
    static const det::LikelihoodModel model = [] {
        det::ModelTrainingOptions opt;
        opt.train.epochs = 60;
        return viterbinet::bench::train_on_profile(awgn(8.0), kBpsk, 5000, opt, 21);
    }();
    return model;
}

} // namespace

TEST(BayesCosts, UniformPosteriorGivesConstantCosts)
{
    const std::vector<double> post(16, 1.0 / 16.0);
    std::vector<double> out(16);
    det::bayes_costs(post, 0.37, det::PriorScaling::exact_bayes, out);
    for (double c : out)
        EXPECT_NEAR(c, -std::log(0.37), 1e-12);
}

TEST(BayesCosts, ScalingChoiceOnlyShiftsCosts)
{
    const std::vector<double> post{0.1, 0.2, 0.3, 0.4};
    std::vector<double> a(4), b(4);
    det::bayes_costs(post, 0.5, det::PriorScaling::exact_bayes, a);
    det::bayes_costs(post, 0.5, det::PriorScaling::divide_by_states, b);
    for (std::size_t s = 0; s < 4; ++s)
        EXPECT_NEAR(b[s] - a[s], 2.0 * std::log(4.0), 1e-12);
}

TEST(BayesCosts, ClampsZeroDensityAndFlagsIt)
{
    const std::vector<double> post{0.0, 1.0};
    std::vector<double> out(2);
    det::CostDiagnostics diag;
    det::bayes_costs(post, 0.0, det::PriorScaling::exact_bayes, out, &diag);
    EXPECT_EQ(diag.density_clamped, 1u);
    EXPECT_EQ(diag.posterior_clamped, 1u);
    for (double c : out)
        EXPECT_TRUE(std::isfinite(c));
    EXPECT_LT(out[1], out[0]);
}

TEST(BayesCosts, OracleMatchesModelBasedUpToConstant)
{
    for (double snr_db : {-4.0, 2.0, 8.0}) {
        const det::ModelBasedCosts exact(awgn(snr_db), kBpsk);
        std::vector<double> post, learned(16), ref(16);
        double marginal = 0.0;
        for (double y = -8.0; y <= 8.0; y += 0.5) {
            analytic_posterior(exact.state_means(), y, post, marginal);
            det::bayes_costs(post, marginal, det::PriorScaling::exact_bayes, learned);
            exact(y, ref);
            // exact identity: p(y|s) = P(s|y) p(y) / p(s)
            for (std::size_t s = 0; s < 16; ++s)
                EXPECT_NEAR(learned[s], ref[s], 1e-9 * std::max(1.0, std::abs(ref[s])));
        }
    }
}

TEST(ModelBasedCosts, GaussianZeroResidualIsMinimal)
{
    const det::ModelBasedCosts costs(awgn(5.0), kBpsk);
    std::vector<double> out(16);
    for (std::size_t s = 0; s < 16; ++s) {
        costs(costs.state_means()[s], out);
        EXPECT_NEAR(out[s], 0.5 * std::log(2.0 * std::numbers::pi), 1e-12);
        for (double c : out)
            EXPECT_GE(c, out[s]);
    }
}

TEST(ModelBasedCosts, StateMeansFollowWindowConvention)
{
    const ch::ChannelProfile p{{1.0, 0.5, 0.25}, 4.0};
    const auto c = ch::Constellation::bpsk(3);
    const det::ModelBasedCosts costs(p, c);
    const tr::TrellisSpec spec(2, 3);
    // window (oldest, middle, newest) = (+1, -1, -1): newest multiplies the first tap
    const int w[] = {1, 0, 0};
    EXPECT_DOUBLE_EQ(costs.state_means()[spec.encode(w)], 2.0 * (-1.0 - 0.5 + 0.25));
}

TEST(ModelBasedCosts, PoissonMatchesPmf)
{
    const auto c = ch::Constellation::ook(2);
    const ch::ChannelProfile p{{1.0, 0.4}, 9.0, ch::PoissonNoise{}};
    const det::ModelBasedCosts costs(p, c);
    std::vector<double> out(4);
    costs(3.0, out);
    for (std::size_t s = 0; s < 4; ++s) {
        const double lambda = costs.state_means()[s] + 1.0;
        const double pmf = std::exp(-lambda) * std::pow(lambda, 3.0) / 6.0;
        EXPECT_NEAR(out[s], -std::log(pmf), 1e-12);
    }
    EXPECT_THROW(costs(2.5, out), InvalidInput);
    EXPECT_THROW(costs(-1.0, out), InvalidInput);
}

TEST(ModelBasedCosts, PoissonViterbiIsExactMl)
{
    // independent enumeration of every sequence (pre-block symbol free)
    const auto c = ch::Constellation::ook(2);
    const std::size_t T = 8;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const ch::ChannelProfile p{{1.0, 0.6}, ch::db_to_linear(6.0), ch::PoissonNoise{}};
        const auto s = ch::random_symbols(c, T, seed);
        const auto y = ch::transmit(c, s, p, seed + 100);
        double best = -1e300;
        std::vector<int> arg;
        for (unsigned code = 0; code < (1u << (T + 1)); ++code) {
            std::vector<int> seq(T + 1);
            for (std::size_t i = 0; i <= T; ++i)
                seq[i] = static_cast<int>((code >> (T - i)) & 1u);
            double ll = 0.0;
            for (std::size_t k = 0; k < T; ++k) {
                const double lambda = std::sqrt(p.snr) * (seq[k + 1] + 0.6 * seq[k]) + 1.0;
                ll += y[k] * std::log(lambda) - lambda - std::lgamma(y[k] + 1.0);
            }
            if (ll > best) {
                best = ll;
                arg.assign(seq.begin() + 1, seq.end());
            }
        }
        EXPECT_EQ(det::detect_block(det::ModelBasedCosts(p, c), c, y), arg) << "seed " << seed;
    }
}

TEST(ModelBasedCosts, AlphaStableUsesNearestGridPoint)
{
    const ch::StableParams sp{0.5, 0.75, 1.0, 0.0};
    const ch::ChannelProfile p{ch::exp_decay_profile(0.2, 4), 10.0, ch::AlphaStableNoise{sp}};
    const det::ModelBasedCosts costs(p, kBpsk);
    const auto table = ch::alpha_stable_pdf_table(sp, -5.0, 5.0, 50);
    std::vector<double> out(16);
    for (double y : {-9.0, -1.3, 0.0, 0.77, 4.2, 30.0}) {
        costs(y, out);
        for (std::size_t s = 0; s < 16; ++s)
            EXPECT_NEAR(out[s], -std::log(table.nearest(y - costs.state_means()[s])), 1e-12);
    }
    // a shared table gives identical costs
    const det::ModelBasedCosts shared(p, kBpsk, table);
    std::vector<double> again(16);
    shared(0.77, again);
    costs(0.77, out);
    EXPECT_EQ(out, again);
}

TEST(DetectBlock, NoiselessLimitRecoversSymbols)
{
    const auto s = ch::random_symbols(kBpsk, 400, 3);
    const auto y = ch::transmit(kBpsk, s, awgn(80.0), 4);
    EXPECT_EQ(det::detect_block(det::ModelBasedCosts(awgn(80.0), kBpsk), kBpsk, y), s);
}

TEST(DetectBlock, OracleModelDecisionsMatchCsi)
{
    const auto p = awgn(4.0);
    const det::ModelBasedCosts exact(p, kBpsk);
    const auto s = ch::random_symbols(kBpsk, 5000, 8);
    const auto y = ch::transmit(kBpsk, s, p, 9);
    std::vector<double> post;
    double marginal = 0.0;
    auto oracle = [&](std::size_t k, std::span<double> out) {
        analytic_posterior(exact.state_means(), y[k], post, marginal);
        det::bayes_costs(post, marginal, det::PriorScaling::divide_by_states, out);
    };
    EXPECT_EQ(tr::viterbi_detect(oracle, y.size(), tr::TrellisSpec(2, 4)), det::detect_block(exact, kBpsk, y));
}

TEST(DetectBlock, DensityScaleDoesNotChangeDecisions)
{
    const auto& model = trained_awgn_model();
    const auto s = ch::random_symbols(kBpsk, 3000, 31);
    const auto y = ch::transmit(kBpsk, s, awgn(8.0), 32);
    const auto base = det::detect_block(model, y);
    for (double scale : {1e-6, 0.3, 40.0}) {
        auto scaled = [&](std::size_t k, std::span<double> out) {
            const auto post = viterbinet::mlp::posterior(model.classifier, y[k]);
            det::bayes_costs(post, scale * viterbinet::gmm::density(model.mixture, y[k]), model.scaling, out);
        };
        EXPECT_EQ(tr::viterbi_detect(scaled, y.size(), model.trellis_spec()), base);
    }
    auto other = model;
    other.scaling = det::PriorScaling::divide_by_states;
    EXPECT_EQ(det::detect_block(other, y), base);
}

TEST(DetectBlock, TrainedModelTracksCsiViterbi)
{
    const auto& model = trained_awgn_model();
    const auto p = awgn(8.0);
    const auto s = ch::random_symbols(kBpsk, 50000, 41);
    const auto y = ch::transmit(kBpsk, s, p, 42);
    const auto learned = det::count_errors(det::detect_block(model, y), s);
    const auto exact = det::count_errors(det::detect_block(det::ModelBasedCosts(p, kBpsk), kBpsk, y), s);
    RecordProperty("learned_errors", static_cast<int>(learned));
    RecordProperty("csi_errors", static_cast<int>(exact));
    EXPECT_LE(static_cast<double>(learned), 1.5 * static_cast<double>(exact) + 10.0);
}

TEST(DetectBlock, SerDecreasesWithSnr)
{
    namespace bench = viterbinet::bench;
    std::vector<std::vector<std::uint8_t>> wrong;
    for (double snr : {-2.0, 2.0, 6.0}) {
        const auto p = awgn(snr, 0.5);
        const auto s = ch::random_symbols(kBpsk, 20000, 5);
        const auto y = ch::transmit(kBpsk, s, p, 6);
        const auto d = det::detect_block(det::ModelBasedCosts(p, kBpsk), kBpsk, y);
        std::vector<std::uint8_t> w(s.size());
        for (std::size_t i = 0; i < s.size(); ++i)
            w[i] = d[i] != s[i];
        wrong.push_back(std::move(w));
    }
    for (std::size_t i = 0; i + 1 < wrong.size(); ++i) {
        std::size_t hi_only = 0, lo_only = 0;
        for (std::size_t t = 0; t < wrong[i].size(); ++t) {
            hi_only += wrong[i + 1][t] && !wrong[i][t];
            lo_only += wrong[i][t] && !wrong[i + 1][t];
        }
        EXPECT_TRUE(bench::significantly_fewer(hi_only, lo_only));
    }
}

TEST(LearnedCosts, RejectNonFiniteOutputs)
{
    EXPECT_THROW(det::learned_costs(trained_awgn_model(), NAN), InvalidInput);
    const auto c = det::learned_costs(trained_awgn_model(), 0.3);
    EXPECT_EQ(c.size(), 16u);
    for (double v : c)
        EXPECT_TRUE(std::isfinite(v));
}

TEST(ModelIo, RoundTripIsBitExact)
{
    const auto& model = trained_awgn_model();
    const auto path = std::filesystem::temp_directory_path() / "viterbinet_model_roundtrip.json";
    viterbinet::io::save_model(model, path.string());
    const auto loaded = viterbinet::io::load_model(path.string());
    std::filesystem::remove(path);
    EXPECT_TRUE(loaded == model);
    const auto s = ch::random_symbols(kBpsk, 500, 1);
    const auto y = ch::transmit(kBpsk, s, awgn(8.0), 2);
    EXPECT_EQ(det::detect_block(loaded, y), det::detect_block(model, y));
}

TEST(ModelIo, RejectsWrongVersionAndShape)
{
    auto j = viterbinet::io::to_json(trained_awgn_model());
    auto bad = j;
    bad["version"] = 99;
    EXPECT_THROW(viterbinet::io::model_from_json(bad), viterbinet::Error);
    bad = j;
    bad["constellation"]["memory"] = 3;
    EXPECT_THROW(viterbinet::io::model_from_json(bad), viterbinet::Error);
    EXPECT_THROW(viterbinet::io::load_model("/nonexistent/model.json"), viterbinet::Error);
}
