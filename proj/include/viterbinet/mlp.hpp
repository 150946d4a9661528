#ifndef VITERBINET_MLP_HPP
#define VITERBINET_MLP_HPP

// Fully connected classifier 1 -> H1 (sigmoid) -> H2 (ReLU) -> K (softmax)
// giving the posterior over trellis states given one scalar channel output.

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

namespace viterbinet::mlp {

struct DenseLayer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights; // outputs x inputs, row-major
    std::vector<double> bias;

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out) : inputs(in), outputs(out), weights(in * out, 0.0), bias(out, 0.0) {}

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct Architecture {
    std::size_t hidden1 = 100;
    std::size_t hidden2 = 50;
};

/// Network weights plus the input standardization x = (y - input_mean) / input_scale.
struct Classifier {
    double input_mean = 0.0;
    double input_scale = 1.0;
    DenseLayer hidden1;
    DenseLayer hidden2;
    DenseLayer output;

    std::size_t num_classes() const noexcept { return output.outputs; }
    std::size_t num_parameters() const noexcept
    {
        return hidden1.weights.size() + hidden1.bias.size() + hidden2.weights.size() + hidden2.bias.size()
            + output.weights.size() + output.bias.size();
    }

    /// Trainable parameter blocks in a fixed order.
    std::vector<std::span<double>> blocks()
    {
        return {hidden1.weights, hidden1.bias, hidden2.weights, hidden2.bias, output.weights, output.bias};
    }
    std::vector<std::span<const double>> blocks() const
    {
        return {hidden1.weights, hidden1.bias, hidden2.weights, hidden2.bias, output.weights, output.bias};
    }

    void validate() const
    {
        if (hidden1.inputs != 1 || hidden2.inputs != hidden1.outputs || output.inputs != hidden2.outputs)
            throw InvalidParameter("Classifier: inconsistent layer dimensions");
        for (const DenseLayer* l : {&hidden1, &hidden2, &output})
            if (l->weights.size() != l->inputs * l->outputs || l->bias.size() != l->outputs)
                throw InvalidParameter("Classifier: layer buffer sizes do not match dimensions");
        if (output.outputs < 2)
            throw InvalidParameter("Classifier: need at least two classes");
        if (!(input_scale > 0.0) || !std::isfinite(input_mean))
            throw InvalidParameter("Classifier: invalid input standardization");
        for (auto b : blocks())
            for (double v : b)
                if (!std::isfinite(v))
                    throw InvalidParameter("Classifier: non-finite parameter");
    }

    friend bool operator==(const Classifier&, const Classifier&) = default;
};

/// (channel output, state label) pairs.
struct TrainingSet {
    std::vector<double> outputs;
    std::vector<std::uint32_t> labels;

    std::size_t size() const noexcept { return outputs.size(); }
    void append(const TrainingSet& other)
    {
        outputs.insert(outputs.end(), other.outputs.begin(), other.outputs.end());
        labels.insert(labels.end(), other.labels.begin(), other.labels.end());
    }
};

/// Pairs y[i] with the index of the window s_{i-m+1}..s_i (oldest symbol most
/// significant, matching trellis::TrellisSpec). The first m-1 outputs have
/// windows reaching before the block and are skipped.
inline TrainingSet make_training_set(std::span<const double> outputs, std::span<const int> symbols,
                                     std::size_t alphabet_size, std::size_t memory)
{
    if (outputs.size() != symbols.size())
        throw InvalidInput("make_training_set: outputs and symbols differ in length");
    if (memory < 1 || alphabet_size < 2)
        throw InvalidParameter("make_training_set: invalid alphabet or memory");
    TrainingSet set;
    if (outputs.size() < memory)
        return set;
    std::size_t states = 1;
    for (std::size_t i = 0; i < memory; ++i)
        states *= alphabet_size;
    set.outputs.reserve(outputs.size() - memory + 1);
    set.labels.reserve(outputs.size() - memory + 1);
    std::size_t window = 0;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const int s = symbols[i];
        if (s < 0 || static_cast<std::size_t>(s) >= alphabet_size)
            throw InvalidInput("make_training_set: symbol outside the alphabet");
        window = (window * alphabet_size + static_cast<std::size_t>(s)) % states;
        if (i + 1 >= memory) {
            set.outputs.push_back(outputs[i]);
            set.labels.push_back(static_cast<std::uint32_t>(window));
        }
    }
    return set;
}

/// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
inline Classifier init(std::size_t num_classes, std::uint64_t seed, const Architecture& arch = {})
{
    if (num_classes < 2 || arch.hidden1 < 1 || arch.hidden2 < 1)
        throw InvalidParameter("mlp::init: invalid architecture");
    Classifier net;
    net.hidden1 = DenseLayer(1, arch.hidden1);
    net.hidden2 = DenseLayer(arch.hidden1, arch.hidden2);
    net.output = DenseLayer(arch.hidden2, num_classes);
    Rng gen(seed);
    for (DenseLayer* l : {&net.hidden1, &net.hidden2, &net.output}) {
        const double limit = std::sqrt(6.0 / static_cast<double>(l->inputs + l->outputs));
        std::uniform_real_distribution<double> u(-limit, limit);
        for (double& w : l->weights)
            w = u(gen);
    }
    return net;
}

/// How the input affine map is estimated from training outputs.
/// moments: mean and standard deviation. robust: median and IQR / 1.349,
/// which stays meaningful for heavy-tailed outputs with no finite variance.
enum class InputScaling { moments, robust };

inline void standardize_inputs(Classifier& net, std::span<const double> outputs,
                               InputScaling scaling = InputScaling::moments)
{
    if (outputs.empty())
        throw InvalidInput("standardize_inputs: no samples");
    double mean = 0.0;
    for (double y : outputs)
        mean += y;
    mean /= static_cast<double>(outputs.size());
    double var = 0.0;
    for (double y : outputs)
        var += (y - mean) * (y - mean);
    var /= static_cast<double>(outputs.size());
    net.input_mean = mean;
    net.input_scale = var > 0.0 ? std::sqrt(var) : 1.0;
    if (scaling == InputScaling::moments)
        return;

    std::vector<double> sorted(outputs.begin(), outputs.end());
    std::sort(sorted.begin(), sorted.end());
    const auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(sorted.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    };
    net.input_mean = quantile(0.5);
    const double spread = (quantile(0.75) - quantile(0.25)) / 1.349;
    if (spread > 0.0)
        net.input_scale = spread;
}

namespace detail {

inline double sigmoid(double z) noexcept
{
    if (z >= 0.0)
        return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// Activations of one forward pass.
struct Activations {
    double x = 0.0;
    std::vector<double> a1;
    std::vector<double> z2;
    std::vector<double> a2;
    std::vector<double> z3;

    explicit Activations(const Classifier& net)
        : a1(net.hidden1.outputs), z2(net.hidden2.outputs), a2(net.hidden2.outputs), z3(net.output.outputs) {}
};

inline void forward(const Classifier& net, double y, Activations& act)
{
    const double x = (y - net.input_mean) / net.input_scale;
    act.x = x;
    const std::size_t H1 = net.hidden1.outputs;
    const std::size_t H2 = net.hidden2.outputs;
    const std::size_t K = net.output.outputs;
    const double* w1 = net.hidden1.weights.data();
    const double* b1 = net.hidden1.bias.data();
    for (std::size_t i = 0; i < H1; ++i)
        act.a1[i] = sigmoid(w1[i] * x + b1[i]);

    const double* w2 = net.hidden2.weights.data();
    const double* a1 = act.a1.data();
    for (std::size_t o = 0; o < H2; ++o) {
        const double* row = w2 + o * H1;
        double acc = net.hidden2.bias[o];
        for (std::size_t i = 0; i < H1; ++i)
            acc += row[i] * a1[i];
        act.z2[o] = acc;
        act.a2[o] = acc > 0.0 ? acc : 0.0;
    }

    const double* w3 = net.output.weights.data();
    const double* a2 = act.a2.data();
    for (std::size_t c = 0; c < K; ++c) {
        const double* row = w3 + c * H2;
        double acc = net.output.bias[c];
        for (std::size_t o = 0; o < H2; ++o)
            acc += row[o] * a2[o];
        act.z3[c] = acc;
    }
}

/// Softmax of the logits in place; returns log-sum-exp.
inline double softmax(std::span<double> z) noexcept
{
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : z)
        v /= sum;
    return zmax + std::log(sum);
}

inline double log_sum_exp(std::span<const double> z) noexcept
{
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z)
        sum += std::exp(v - zmax);
    return zmax + std::log(sum);
}

/// Gradient buffers shaped like the classifier.
struct Workspace {
    Activations act;
    std::vector<double> probs;
    std::vector<double> d2;
    std::vector<double> da1;

    explicit Workspace(const Classifier& net)
        : act(net), probs(net.output.outputs), d2(net.hidden2.outputs), da1(net.hidden1.outputs) {}
};

/// Adds the cross-entropy gradient of one sample to `grad`; returns the loss.
inline double accumulate_gradient(const Classifier& net, double y, std::uint32_t label, Classifier& grad, Workspace& ws)
{
    forward(net, y, ws.act);
    const std::size_t H1 = net.hidden1.outputs;
    const std::size_t H2 = net.hidden2.outputs;
    const std::size_t K = net.output.outputs;

    std::copy(ws.act.z3.begin(), ws.act.z3.end(), ws.probs.begin());
    const double lse = softmax(ws.probs);
    const double loss = lse - ws.act.z3[label];
    ws.probs[label] -= 1.0; // probs now holds dL/dz3

    const double* d3 = ws.probs.data();
    const double* a2 = ws.act.a2.data();
    const double* w3 = net.output.weights.data();
    double* gw3 = grad.output.weights.data();
    std::fill(ws.d2.begin(), ws.d2.end(), 0.0);
    double* d2 = ws.d2.data();
    for (std::size_t c = 0; c < K; ++c) {
        const double g = d3[c];
        grad.output.bias[c] += g;
        double* grow = gw3 + c * H2;
        const double* wrow = w3 + c * H2;
        for (std::size_t o = 0; o < H2; ++o) {
            grow[o] += g * a2[o];
            d2[o] += g * wrow[o];
        }
    }
    for (std::size_t o = 0; o < H2; ++o)
        if (!(ws.act.z2[o] > 0.0))
            d2[o] = 0.0;

    const double* a1 = ws.act.a1.data();
    const double* w2 = net.hidden2.weights.data();
    double* gw2 = grad.hidden2.weights.data();
    std::fill(ws.da1.begin(), ws.da1.end(), 0.0);
    double* da1 = ws.da1.data();
    for (std::size_t o = 0; o < H2; ++o) {
        const double g = d2[o];
        if (g == 0.0)
            continue;
        grad.hidden2.bias[o] += g;
        double* grow = gw2 + o * H1;
        const double* wrow = w2 + o * H1;
        for (std::size_t i = 0; i < H1; ++i) {
            grow[i] += g * a1[i];
            da1[i] += g * wrow[i];
        }
    }
    for (std::size_t i = 0; i < H1; ++i) {
        const double d1 = da1[i] * a1[i] * (1.0 - a1[i]);
        grad.hidden1.weights[i] += d1 * ws.act.x;
        grad.hidden1.bias[i] += d1;
    }
    return loss;
}

inline Classifier zeros_like(const Classifier& net)
{
    Classifier g;
    g.hidden1 = DenseLayer(net.hidden1.inputs, net.hidden1.outputs);
    g.hidden2 = DenseLayer(net.hidden2.inputs, net.hidden2.outputs);
    g.output = DenseLayer(net.output.inputs, net.output.outputs);
    return g;
}

inline void set_zero(Classifier& g)
{
    for (auto b : g.blocks())
        std::fill(b.begin(), b.end(), 0.0);
}

} // namespace detail

/// Posterior over the classes for output y, written to `out`.
inline void posterior(const Classifier& net, double y, std::span<double> out)
{
    if (!std::isfinite(y))
        throw InvalidInput("posterior: non-finite channel output");
    if (out.size() != net.num_classes())
        throw InvalidInput("posterior: output span has the wrong length");
    thread_local detail::Activations act(net);
    if (act.a1.size() != net.hidden1.outputs || act.a2.size() != net.hidden2.outputs || act.z3.size() != out.size())
        act = detail::Activations(net);
    detail::forward(net, y, act);
    std::copy(act.z3.begin(), act.z3.end(), out.begin());
    detail::softmax(out);
}

inline std::vector<double> posterior(const Classifier& net, double y)
{
    std::vector<double> p(net.num_classes());
    posterior(net, y, p);
    return p;
}

/// Cross-entropy of one sample, evaluated in precision Real. The gradient
/// checker uses long double to keep finite differences out of round-off.
template <class Real = double>
Real sample_loss(const Classifier& net, double y, std::uint32_t label)
{
    const Real x = (static_cast<Real>(y) - static_cast<Real>(net.input_mean)) / static_cast<Real>(net.input_scale);
    const std::size_t H1 = net.hidden1.outputs;
    const std::size_t H2 = net.hidden2.outputs;
    const std::size_t K = net.output.outputs;
    std::vector<Real> a1(H1), a2(H2), z3(K);
    for (std::size_t i = 0; i < H1; ++i) {
        const Real z = static_cast<Real>(net.hidden1.weights[i]) * x + static_cast<Real>(net.hidden1.bias[i]);
        a1[i] = Real(1) / (Real(1) + std::exp(-z));
    }
    for (std::size_t o = 0; o < H2; ++o) {
        Real acc = net.hidden2.bias[o];
        for (std::size_t i = 0; i < H1; ++i)
            acc += static_cast<Real>(net.hidden2.weights[o * H1 + i]) * a1[i];
        a2[o] = acc > Real(0) ? acc : Real(0);
    }
    for (std::size_t c = 0; c < K; ++c) {
        Real acc = net.output.bias[c];
        for (std::size_t o = 0; o < H2; ++o)
            acc += static_cast<Real>(net.output.weights[c * H2 + o]) * a2[o];
        z3[c] = acc;
    }
    Real zmax = *std::max_element(z3.begin(), z3.end());
    Real sum = 0;
    for (Real v : z3)
        sum += std::exp(v - zmax);
    return zmax + std::log(sum) - z3[label];
}

/// Analytic gradient of the cross-entropy of one sample.
inline Classifier loss_gradient(const Classifier& net, double y, std::uint32_t label)
{
    Classifier g = detail::zeros_like(net);
    detail::Workspace ws(net);
    detail::accumulate_gradient(net, y, label, g, ws);
    return g;
}

/// Mean cross-entropy over a data set.
inline double dataset_loss(const Classifier& net, const TrainingSet& data)
{
    detail::Activations act(net);
    double total = 0.0;
    for (std::size_t n = 0; n < data.size(); ++n) {
        detail::forward(net, data.outputs[n], act);
        total += detail::log_sum_exp(act.z3) - act.z3[data.labels[n]];
    }
    return total / static_cast<double>(data.size());
}

inline double accuracy(const Classifier& net, const TrainingSet& data)
{
    detail::Activations act(net);
    std::size_t hits = 0;
    for (std::size_t n = 0; n < data.size(); ++n) {
        detail::forward(net, data.outputs[n], act);
        const auto arg = std::max_element(act.z3.begin(), act.z3.end()) - act.z3.begin();
        hits += static_cast<std::uint32_t>(arg) == data.labels[n];
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

/// Mini-batch Adam on the cross-entropy.
struct TrainOptions {
    std::size_t epochs = 100;
    double learning_rate = 1e-3;
    std::size_t batch_size = 128;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    /// Cosine-anneal the rate from learning_rate down to this fraction of it
    /// by the last epoch. 1 keeps it constant.
    double final_rate_fraction = 1.0;
};

struct TrainReport {
    /// Full-set loss before training (index 0) and after each epoch.
    std::vector<double> loss;
    std::vector<double> best_loss;
    std::size_t best_epoch = 0;
};

/// Returns the parameters with the lowest full-set loss seen, the
/// untrained input included.
inline Classifier train(Classifier net, const TrainingSet& data, const TrainOptions& opt, TrainReport* report = nullptr)
{
    net.validate();
    if (data.size() == 0)
        throw InvalidInput("mlp::train: empty training set");
    if (data.labels.size() != data.outputs.size())
        throw InvalidInput("mlp::train: outputs and labels differ in length");
    for (std::size_t n = 0; n < data.size(); ++n) {
        if (data.labels[n] >= net.num_classes())
            throw InvalidInput("mlp::train: label out of range");
        if (!std::isfinite(data.outputs[n]))
            throw InvalidInput("mlp::train: non-finite channel output");
    }
    if (opt.batch_size == 0 || !(opt.learning_rate >= 0.0))
        throw InvalidParameter("mlp::train: invalid batch size or learning rate");
    if (!(opt.final_rate_fraction >= 0.0 && opt.final_rate_fraction <= 1.0))
        throw InvalidParameter("mlp::train: final_rate_fraction must lie in [0, 1]");

    TrainReport local;
    TrainReport& rep = report ? *report : local;
    rep = TrainReport{};

    double best_loss = dataset_loss(net, data);
    if (!std::isfinite(best_loss))
        throw TrainingDiverged(0, "mlp::train: non-finite loss before training");
    rep.loss.push_back(best_loss);
    rep.best_loss.push_back(best_loss);
    Classifier best = net;
    if (opt.learning_rate == 0.0 || opt.epochs == 0)
        return best;

    Classifier grad = detail::zeros_like(net);
    Classifier m1 = detail::zeros_like(net);
    Classifier m2 = detail::zeros_like(net);
    detail::Workspace ws(net);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng gen(opt.seed);

    double beta1_t = 1.0;
    double beta2_t = 1.0;
    for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
        const double progress = opt.epochs > 1 ? static_cast<double>(epoch - 1) / static_cast<double>(opt.epochs - 1) : 0.0;
        const double rate = opt.learning_rate * (opt.final_rate_fraction + (1.0 - opt.final_rate_fraction) * 0.5 *
                                                                                (1.0 + std::cos(std::numbers::pi * progress)));
        std::shuffle(order.begin(), order.end(), gen);
        for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
            const std::size_t stop = std::min(order.size(), start + opt.batch_size);
            detail::set_zero(grad);
            for (std::size_t n = start; n < stop; ++n)
                detail::accumulate_gradient(net, data.outputs[order[n]], data.labels[order[n]], grad, ws);
            const double inv = 1.0 / static_cast<double>(stop - start);
            beta1_t *= opt.beta1;
            beta2_t *= opt.beta2;
            const double step = rate * std::sqrt(1.0 - beta2_t) / (1.0 - beta1_t);
            auto p = net.blocks();
            auto g = grad.blocks();
            auto a = m1.blocks();
            auto b = m2.blocks();
            for (std::size_t blk = 0; blk < p.size(); ++blk) {
                double* pv = p[blk].data();
                double* gv = g[blk].data();
                double* av = a[blk].data();
                double* bv = b[blk].data();
                for (std::size_t i = 0; i < p[blk].size(); ++i) {
                    const double gi = gv[i] * inv;
                    av[i] = opt.beta1 * av[i] + (1.0 - opt.beta1) * gi;
                    bv[i] = opt.beta2 * bv[i] + (1.0 - opt.beta2) * gi * gi;
                    pv[i] -= step * av[i] / (std::sqrt(bv[i]) + opt.epsilon);
                }
            }
        }
        const double loss = dataset_loss(net, data);
        if (!std::isfinite(loss))
            throw TrainingDiverged(epoch, "mlp::train: loss became non-finite at epoch " + std::to_string(epoch));
        rep.loss.push_back(loss);
        if (loss < best_loss) {
            best_loss = loss;
            best = net;
            rep.best_epoch = epoch;
        }
        rep.best_loss.push_back(best_loss);
    }
    return best;
}

struct GradientSample {
    double y = 0.0;
    std::uint32_t label = 0;
};

struct GradientCheckOptions {
    std::size_t coordinates = 64;
    double step = 1e-5;
    std::uint64_t seed = 0x5eed;
};

/// Largest relative discrepancy |a - n| / max(|a|, |n|, 1e-8) between the
/// analytic gradient `a` and a central difference `n` over randomly chosen
/// coordinates. Coordinates whose stencil moves a ReLU across its kink are
/// redrawn.
inline double gradient_check(const Classifier& net, const GradientSample& sample, const GradientCheckOptions& opt = {})
{
    net.validate();
    if (sample.label >= net.num_classes())
        throw InvalidInput("gradient_check: label out of range");
    const Classifier analytic = loss_gradient(net, sample.y, sample.label);

    auto relu_pattern = [&](const Classifier& c) {
        detail::Activations act(c);
        detail::forward(c, sample.y, act);
        std::vector<bool> on(act.z2.size());
        for (std::size_t o = 0; o < on.size(); ++o)
            on[o] = act.z2[o] > 0.0;
        return on;
    };
    const std::vector<bool> base_pattern = relu_pattern(net);

    Classifier probe = net;
    const auto a_blocks = analytic.blocks();
    auto p_blocks = probe.blocks();
    std::vector<std::size_t> offsets{0};
    for (auto b : p_blocks)
        offsets.push_back(offsets.back() + b.size());
    const std::size_t total = offsets.back();

    Rng gen(opt.seed);
    std::uniform_int_distribution<std::size_t> pick(0, total - 1);
    double worst = 0.0;
    std::size_t checked = 0;
    std::size_t attempts = 0;
    while (checked < opt.coordinates && attempts < 100 * opt.coordinates) {
        ++attempts;
        const std::size_t flat = pick(gen);
        const std::size_t blk = static_cast<std::size_t>(
            std::upper_bound(offsets.begin(), offsets.end(), flat) - offsets.begin() - 1);
        const std::size_t idx = flat - offsets[blk];
        double& w = p_blocks[blk][idx];
        const double saved = w;
        const double hi = saved + opt.step;
        const double lo = saved - opt.step;
        w = hi;
        const bool plus_ok = relu_pattern(probe) == base_pattern;
        const long double lp = sample_loss<long double>(probe, sample.y, sample.label);
        w = lo;
        const bool minus_ok = relu_pattern(probe) == base_pattern;
        const long double lm = sample_loss<long double>(probe, sample.y, sample.label);
        w = saved;
        if (!plus_ok || !minus_ok)
            continue;
        const double numeric = static_cast<double>((lp - lm) / (static_cast<long double>(hi) - static_cast<long double>(lo)));
        const double exact = a_blocks[blk][idx];
        const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(exact - numeric) / denom);
        ++checked;
    }
    return worst;
}

} // namespace viterbinet::mlp

#endif
