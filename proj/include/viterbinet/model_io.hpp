#ifndef VITERBINET_MODEL_IO_HPP
#define VITERBINET_MODEL_IO_HPP

// Model file: one JSON document holding the classifier, the mixture and the
// constellation. Doubles are written in shortest round-trip form, so
// save -> load reproduces every parameter bit for bit.
//
// {
//   "format": "viterbinet-model", "version": 1,
//   "constellation": {"points": [...], "memory": m},
//   "prior_scaling": "exact_bayes" | "divide_by_states",
//   "classifier": {"input_mean": x, "input_scale": x,
//                  "layers": [{"inputs": n, "outputs": n,
//                              "weights": [...row-major...], "bias": [...]}, x3]},
//   "mixture": {"weights": [...], "means": [...], "variances": [...]}
// }

#include "viterbinet/detector.hpp"
#include "viterbinet/error.hpp"

#include "json.hpp"

#include <fstream>
#include <string>

namespace viterbinet::io {

inline constexpr int kModelVersion = 1;

inline nlohmann::json layer_to_json(const mlp::DenseLayer& l)
{
    return {{"inputs", l.inputs}, {"outputs", l.outputs}, {"weights", l.weights}, {"bias", l.bias}};
}

inline mlp::DenseLayer layer_from_json(const nlohmann::json& j)
{
    mlp::DenseLayer l;
    l.inputs = j.at("inputs").get<std::size_t>();
    l.outputs = j.at("outputs").get<std::size_t>();
    l.weights = j.at("weights").get<std::vector<double>>();
    l.bias = j.at("bias").get<std::vector<double>>();
    return l;
}

inline nlohmann::json to_json(const detector::LikelihoodModel& m)
{
    const auto& net = m.classifier;
    return {
        {"format", "viterbinet-model"},
        {"version", kModelVersion},
        {"constellation", {{"points", m.constellation.points}, {"memory", m.constellation.memory}}},
        {"prior_scaling", m.scaling == detector::PriorScaling::exact_bayes ? "exact_bayes" : "divide_by_states"},
        {"classifier",
         {{"input_mean", net.input_mean},
          {"input_scale", net.input_scale},
          {"layers", {layer_to_json(net.hidden1), layer_to_json(net.hidden2), layer_to_json(net.output)}}}},
        {"mixture", {{"weights", m.mixture.weights}, {"means", m.mixture.means}, {"variances", m.mixture.variances}}},
    };
}

inline detector::LikelihoodModel model_from_json(const nlohmann::json& j)
{
    try {
        if (j.at("format").get<std::string>() != "viterbinet-model")
            throw InvalidInput("model file: unknown format tag");
        if (j.at("version").get<int>() != kModelVersion)
            throw InvalidInput("model file: unsupported version " + j.at("version").dump());
        detector::LikelihoodModel m;
        m.constellation.points = j.at("constellation").at("points").get<std::vector<double>>();
        m.constellation.memory = j.at("constellation").at("memory").get<std::size_t>();
        const auto scaling = j.at("prior_scaling").get<std::string>();
        if (scaling == "exact_bayes")
            m.scaling = detector::PriorScaling::exact_bayes;
        else if (scaling == "divide_by_states")
            m.scaling = detector::PriorScaling::divide_by_states;
        else
            throw InvalidInput("model file: unknown prior_scaling '" + scaling + "'");
        const auto& c = j.at("classifier");
        m.classifier.input_mean = c.at("input_mean").get<double>();
        m.classifier.input_scale = c.at("input_scale").get<double>();
        const auto& layers = c.at("layers");
        if (layers.size() != 3)
            throw InvalidInput("model file: expected three layers");
        m.classifier.hidden1 = layer_from_json(layers[0]);
        m.classifier.hidden2 = layer_from_json(layers[1]);
        m.classifier.output = layer_from_json(layers[2]);
        const auto& mix = j.at("mixture");
        m.mixture.weights = mix.at("weights").get<std::vector<double>>();
        m.mixture.means = mix.at("means").get<std::vector<double>>();
        m.mixture.variances = mix.at("variances").get<std::vector<double>>();
        m.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("model file: ") + e.what());
    } catch (const InvalidParameter& e) {
        throw InvalidInput(std::string("model file: ") + e.what());
    }
}

inline void save_model(const detector::LikelihoodModel& m, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw InvalidInput("cannot open " + path + " for writing");
    out << to_json(m).dump(1) << '\n';
    if (!out)
        throw InvalidInput("failed writing " + path);
}

inline detector::LikelihoodModel load_model(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidInput("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(path + ": " + e.what());
    }
    return model_from_json(j);
}

} // namespace viterbinet::io

#endif
