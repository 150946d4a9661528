#ifndef VITERBINET_BENCH_SCENARIO_HPP
#define VITERBINET_BENCH_SCENARIO_HPP

// Experiment description loaded from an INI file. Schema (all keys optional
// unless marked):
//
// [scenario]  name, study = sweep | fading, family = gaussian | poisson |
//             alpha_stable (required), memory, seed, snr_db = list (required),
//             budget (symbols per SNR point for sweeps, blocks for fading),
//             block_length, detectors = list (required)
// [channel]   gamma = list | gamma_min + gamma_max + profiles, csi_variance,
//             alpha, beta, scale, location, grid_min, grid_max, grid_points
// [training]  samples, epochs, learning_rate, batch_size, final_rate_fraction,
//             input_scaling = moments | robust, prior_scaling = exact_bayes |
//             divide_by_states, em_restarts, em_max_iterations,
//             noisy_realizations
// [fading]    periods = list, decay, threshold, online_learning_rate,
//             online_epochs, composite_profiles, composite_stride
//
// Lists are comma separated. Comments start with ';' or '#'.

#include "viterbinet/channels.hpp"
#include "viterbinet/detector.hpp"
#include "viterbinet/error.hpp"
#include "viterbinet/mlp.hpp"
#include "viterbinet/online.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace viterbinet::bench {

enum class Study { sweep, fading };

/// Detector names accepted in `detectors`.
namespace names {
inline constexpr const char* viterbinet = "viterbinet";
inline constexpr const char* viterbi_csi = "viterbi-csi";
inline constexpr const char* viterbi_noisy_csi = "viterbi-noisy-csi";
inline constexpr const char* viterbinet_noisy_csi = "viterbinet-noisy-csi";
inline constexpr const char* viterbinet_online = "viterbinet-online";
inline constexpr const char* viterbinet_initial = "viterbinet-initial";
inline constexpr const char* viterbinet_composite = "viterbinet-composite";
inline constexpr const char* viterbi_initial = "viterbi-initial";
} // namespace names

inline const std::set<std::string>& sweep_detectors()
{
    static const std::set<std::string> s{names::viterbinet, names::viterbi_csi, names::viterbi_noisy_csi,
                                         names::viterbinet_noisy_csi};
    return s;
}

inline const std::set<std::string>& fading_detectors()
{
    static const std::set<std::string> s{names::viterbinet_online, names::viterbinet_initial,
                                         names::viterbinet_composite, names::viterbi_csi, names::viterbi_initial};
    return s;
}

struct TrainingConfig {
    std::size_t samples = 5000;
    std::size_t epochs = 100;
    double learning_rate = 1e-3;
    std::size_t batch_size = 128;
    double final_rate_fraction = 1.0;
    mlp::InputScaling input_scaling = mlp::InputScaling::moments;
    detector::PriorScaling prior_scaling = detector::PriorScaling::exact_bayes;
    std::size_t em_restarts = 5;
    std::size_t em_max_iterations = 100;
    /// Distinct noisy tap draws pooled when training on CSI uncertainty.
    std::size_t noisy_realizations = 10;
};

struct FadingConfig {
    channels::FadingSchedule schedule{};
    double threshold = 0.02;
    double online_learning_rate = 1e-4;
    std::size_t online_epochs = 20;
    /// Composite training pools channels j = stride * k, k = 1..profiles.
    std::size_t composite_profiles = 10;
    std::size_t composite_stride = 3;
};

struct Scenario {
    std::string name = "scenario";
    Study study = Study::sweep;
    channels::NoiseModel noise = channels::GaussianNoise{};
    std::size_t memory = 4;
    std::uint64_t seed = 1;
    std::vector<double> snr_db;
    std::size_t budget = 100000;
    std::size_t block_length = 10000;
    std::vector<std::string> detectors;
    std::vector<double> gammas{0.2};
    double csi_variance = 0.0;
    detector::StableGrid grid{};
    TrainingConfig training{};
    FadingConfig fading{};

    bool poisson() const { return std::holds_alternative<channels::PoissonNoise>(noise); }

    channels::Constellation constellation() const
    {
        return poisson() ? channels::Constellation::ook(memory) : channels::Constellation::bpsk(memory);
    }

    bool uses(const std::string& detector) const
    {
        return std::find(detectors.begin(), detectors.end(), detector) != detectors.end();
    }

    detector::ModelTrainingOptions training_options() const
    {
        detector::ModelTrainingOptions opt;
        opt.train.epochs = training.epochs;
        opt.train.learning_rate = training.learning_rate;
        opt.train.batch_size = training.batch_size;
        opt.train.final_rate_fraction = training.final_rate_fraction;
        opt.input_scaling = training.input_scaling;
        opt.scaling = training.prior_scaling;
        opt.em.restarts = training.em_restarts;
        opt.em.max_iters = training.em_max_iterations;
        return opt;
    }

    online::OnlineOptions online_options() const
    {
        online::OnlineOptions o;
        o.threshold = fading.threshold;
        o.retrain.learning_rate = fading.online_learning_rate;
        o.retrain.epochs = fading.online_epochs;
        o.retrain.batch_size = training.batch_size;
        return o;
    }

    /// Checks that every named detector can be built from these parameters.
    void validate() const
    {
        if (snr_db.empty())
            throw InvalidScenario("scenario '" + name + "': SNR grid is empty");
        for (double s : snr_db)
            if (!std::isfinite(s))
                throw InvalidScenario("scenario '" + name + "': non-finite SNR value");
        if (std::set<double>(snr_db.begin(), snr_db.end()).size() != snr_db.size())
            throw InvalidScenario("scenario '" + name + "': SNR grid lists a value twice");
        if (budget == 0)
            throw InvalidScenario("scenario '" + name + "': budget must be positive");
        if (memory < 1 || memory > 12)
            throw InvalidScenario("scenario '" + name + "': memory must lie in [1, 12]");
        if (detectors.empty())
            throw InvalidScenario("scenario '" + name + "': no detectors listed");
        if (training.samples <= memory)
            throw InvalidScenario("scenario '" + name + "': training.samples must exceed the memory");
        if (training.batch_size == 0)
            throw InvalidScenario("scenario '" + name + "': training.batch_size must be positive");
        if (!(training.final_rate_fraction >= 0.0 && training.final_rate_fraction <= 1.0))
            throw InvalidScenario("scenario '" + name + "': training.final_rate_fraction must lie in [0, 1]");
        if (!(csi_variance >= 0.0))
            throw InvalidScenario("scenario '" + name + "': csi_variance must be non-negative");
        if (const auto* s = std::get_if<channels::AlphaStableNoise>(&noise)) {
            s->params.validate();
            if (!(grid.max > grid.min) || grid.points < 2)
                throw InvalidScenario("scenario '" + name + "': density grid needs max > min and at least 2 points");
        }
        const auto& allowed = study == Study::sweep ? sweep_detectors() : fading_detectors();
        std::set<std::string> seen;
        for (const auto& d : detectors) {
            if (!allowed.count(d))
                throw InvalidScenario("scenario '" + name + "': detector '" + d + "' is not available in a " +
                                      (study == Study::sweep ? "sweep" : "fading") + " study");
            if (!seen.insert(d).second)
                throw InvalidScenario("scenario '" + name + "': detector '" + d + "' listed twice");
        }
        if (study == Study::sweep) {
            if (gammas.empty())
                throw InvalidScenario("scenario '" + name + "': no channel profiles");
            for (double g : gammas)
                if (!(g > 0.0))
                    throw InvalidScenario("scenario '" + name + "': decay values must be positive");
            if (block_length <= memory)
                throw InvalidScenario("scenario '" + name + "': block_length must exceed the memory");
            if (budget / gammas.size() <= memory)
                throw InvalidScenario("scenario '" + name + "': budget per profile must exceed the memory");
            if ((uses(names::viterbi_noisy_csi) || uses(names::viterbinet_noisy_csi)) && !(csi_variance > 0.0))
                throw InvalidScenario("scenario '" + name + "': noisy-CSI detectors need csi_variance > 0");
            if (uses(names::viterbinet_noisy_csi) && training.noisy_realizations == 0)
                throw InvalidScenario("scenario '" + name + "': noisy_realizations must be positive");
        } else {
            if (fading.schedule.periods.size() != memory)
                throw InvalidScenario("scenario '" + name + "': fading.periods needs one entry per tap");
            fading.schedule.validate();
            if (!(fading.threshold >= 0.0 && fading.threshold <= 1.0))
                throw InvalidScenario("scenario '" + name + "': fading.threshold must lie in [0, 1]");
            if (uses(names::viterbinet_composite) && (fading.composite_profiles == 0 || fading.composite_stride == 0))
                throw InvalidScenario("scenario '" + name + "': composite training needs profiles and stride");
        }
    }
};

namespace detail {

/// Line of each "section.key" (and "section" header) in the INI text.
inline std::map<std::string, std::size_t> index_lines(const std::string& text)
{
    std::map<std::string, std::size_t> lines;
    std::istringstream in(text);
    std::string line, section;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == ';' || line[first] == '#')
            continue;
        if (line[first] == '[') {
            const auto close = line.find(']', first);
            section = line.substr(first + 1, close == std::string::npos ? std::string::npos : close - first - 1);
            lines.emplace(section, n);
            continue;
        }
        const auto eq = line.find('=', first);
        if (eq == std::string::npos)
            continue;
        std::string key = line.substr(first, eq - first);
        key.erase(key.find_last_not_of(" \t") + 1);
        lines.emplace(section + "." + key, n);
    }
    return lines;
}

inline std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos)
        return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ','))
        if (auto t = trim(item); !t.empty())
            out.push_back(t);
    return out;
}

class Reader {
public:
    Reader(const boost::property_tree::ptree& tree, std::map<std::string, std::size_t> lines)
        : tree_(tree), lines_(std::move(lines)) {}

    std::size_t line(const std::string& path) const
    {
        auto it = lines_.find(path);
        return it == lines_.end() ? 0 : it->second;
    }

    [[noreturn]] void fail(const std::string& path, const std::string& msg) const
    {
        throw ConfigError(line(path), path + ": " + msg);
    }

    bool has(const std::string& path) const { return tree_.get_optional<std::string>(path).has_value(); }

    std::string text(const std::string& path) const { return trim(tree_.get<std::string>(path)); }

    double real(const std::string& path) const
    {
        const std::string s = text(path);
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(v))
            fail(path, "expected a number, got '" + s + "'");
        return v;
    }

    std::uint64_t count(const std::string& path) const
    {
        const std::string s = text(path);
        char* end = nullptr;
        errno = 0;
        if (s.empty() || s[0] == '-')
            fail(path, "expected a non-negative integer, got '" + s + "'");
        const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
        if (*end != '\0' || errno == ERANGE)
            fail(path, "expected a non-negative integer, got '" + s + "'");
        return v;
    }

    std::vector<double> reals(const std::string& path) const
    {
        std::vector<double> out;
        for (const auto& item : split_list(text(path))) {
            char* end = nullptr;
            const double v = std::strtod(item.c_str(), &end);
            if (*end != '\0' || !std::isfinite(v))
                fail(path, "expected a list of numbers, bad item '" + item + "'");
            out.push_back(v);
        }
        if (out.empty())
            fail(path, "empty list");
        return out;
    }

    std::vector<std::string> words(const std::string& path) const
    {
        auto out = split_list(text(path));
        if (out.empty())
            fail(path, "empty list");
        return out;
    }

    template <class T>
    void set(const std::string& path, T& field) const
    {
        if (!has(path))
            return;
        if constexpr (std::is_same_v<T, double>)
            field = real(path);
        else if constexpr (std::is_same_v<T, std::string>)
            field = text(path);
        else
            field = static_cast<T>(count(path));
    }

private:
    const boost::property_tree::ptree& tree_;
    std::map<std::string, std::size_t> lines_;
};

inline const std::map<std::string, std::set<std::string>>& known_keys()
{
    static const std::map<std::string, std::set<std::string>> keys{
        {"scenario", {"name", "study", "family", "memory", "seed", "snr_db", "budget", "block_length", "detectors"}},
        {"channel",
         {"gamma", "gamma_min", "gamma_max", "profiles", "csi_variance", "alpha", "beta", "scale", "location",
          "grid_min", "grid_max", "grid_points"}},
        {"training",
         {"samples", "epochs", "learning_rate", "batch_size", "final_rate_fraction", "input_scaling",
          "prior_scaling", "em_restarts", "em_max_iterations", "noisy_realizations"}},
        {"fading",
         {"periods", "decay", "threshold", "online_learning_rate", "online_epochs", "composite_profiles",
          "composite_stride"}},
    };
    return keys;
}

} // namespace detail

/// Parses INI text. `source` names the input in error messages.
inline Scenario parse_scenario(const std::string& text, const std::string& source = "config")
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(e.line(), source + ": " + e.message());
    }
    const detail::Reader r(tree, detail::index_lines(text));

    for (const auto& [section, body] : tree) {
        const auto known = detail::known_keys().find(section);
        if (known == detail::known_keys().end())
            throw ConfigError(r.line(section), source + ": unknown section [" + section + "]");
        if (body.empty() && !body.data().empty())
            throw ConfigError(r.line(section), source + ": key '" + section + "' outside any section");
        for (const auto& [key, value] : body)
            if (!known->second.count(key))
                r.fail(section + "." + key, "unknown key");
    }

    Scenario sc;
    r.set("scenario.name", sc.name);
    if (r.has("scenario.study")) {
        const auto s = r.text("scenario.study");
        if (s == "sweep")
            sc.study = Study::sweep;
        else if (s == "fading")
            sc.study = Study::fading;
        else
            r.fail("scenario.study", "expected 'sweep' or 'fading', got '" + s + "'");
    }
    if (!r.has("scenario.family"))
        throw ConfigError(r.line("scenario"), source + ": missing required key scenario.family");
    const auto family = r.text("scenario.family");
    if (family == "gaussian") {
        sc.noise = channels::GaussianNoise{};
    } else if (family == "poisson") {
        sc.noise = channels::PoissonNoise{};
    } else if (family == "alpha_stable") {
        channels::AlphaStableNoise n;
        r.set("channel.alpha", n.params.alpha);
        r.set("channel.beta", n.params.beta);
        r.set("channel.scale", n.params.scale);
        r.set("channel.location", n.params.location);
        try {
            n.params.validate();
        } catch (const InvalidParameter& e) {
            throw ConfigError(r.line("channel"), source + ": " + e.what());
        }
        sc.noise = n;
    } else {
        r.fail("scenario.family", "expected gaussian, poisson or alpha_stable, got '" + family + "'");
    }
    r.set("scenario.memory", sc.memory);
    r.set("scenario.seed", sc.seed);
    if (!r.has("scenario.snr_db"))
        throw ConfigError(r.line("scenario"), source + ": missing required key scenario.snr_db");
    sc.snr_db = r.reals("scenario.snr_db");
    r.set("scenario.budget", sc.budget);
    r.set("scenario.block_length", sc.block_length);
    if (!r.has("scenario.detectors"))
        throw ConfigError(r.line("scenario"), source + ": missing required key scenario.detectors");
    sc.detectors = r.words("scenario.detectors");

    if (r.has("channel.gamma")) {
        if (r.has("channel.gamma_min") || r.has("channel.gamma_max") || r.has("channel.profiles"))
            r.fail("channel.gamma", "give either gamma or gamma_min/gamma_max/profiles, not both");
        sc.gammas = r.reals("channel.gamma");
    } else if (r.has("channel.gamma_min") || r.has("channel.gamma_max") || r.has("channel.profiles")) {
        for (const char* k : {"channel.gamma_min", "channel.gamma_max", "channel.profiles"})
            if (!r.has(k))
                throw ConfigError(r.line("channel"), source + ": " + k + " is required with a gamma range");
        const std::size_t count = r.count("channel.profiles");
        const double lo = r.real("channel.gamma_min");
        const double hi = r.real("channel.gamma_max");
        if (count == 0 || !(lo > 0.0) || !(hi >= lo))
            r.fail("channel.profiles", "need profiles >= 1 and 0 < gamma_min <= gamma_max");
        sc.gammas = channels::gamma_grid(lo, hi, count);
    }
    r.set("channel.csi_variance", sc.csi_variance);
    r.set("channel.grid_min", sc.grid.min);
    r.set("channel.grid_max", sc.grid.max);
    r.set("channel.grid_points", sc.grid.points);

    auto& t = sc.training;
    r.set("training.samples", t.samples);
    r.set("training.epochs", t.epochs);
    r.set("training.learning_rate", t.learning_rate);
    r.set("training.batch_size", t.batch_size);
    r.set("training.final_rate_fraction", t.final_rate_fraction);
    if (r.has("training.input_scaling")) {
        const auto s = r.text("training.input_scaling");
        if (s == "moments")
            t.input_scaling = mlp::InputScaling::moments;
        else if (s == "robust")
            t.input_scaling = mlp::InputScaling::robust;
        else
            r.fail("training.input_scaling", "expected 'moments' or 'robust', got '" + s + "'");
    }
    if (r.has("training.prior_scaling")) {
        const auto s = r.text("training.prior_scaling");
        if (s == "exact_bayes")
            t.prior_scaling = detector::PriorScaling::exact_bayes;
        else if (s == "divide_by_states")
            t.prior_scaling = detector::PriorScaling::divide_by_states;
        else
            r.fail("training.prior_scaling", "expected 'exact_bayes' or 'divide_by_states', got '" + s + "'");
    }
    r.set("training.em_restarts", t.em_restarts);
    r.set("training.em_max_iterations", t.em_max_iterations);
    r.set("training.noisy_realizations", t.noisy_realizations);

    auto& f = sc.fading;
    if (r.has("fading.periods")) {
        f.schedule.periods.clear();
        for (double p : r.reals("fading.periods")) {
            if (!(p >= 1.0) || p != std::floor(p) || p > 1e9)
                r.fail("fading.periods", "periods must be positive integers");
            f.schedule.periods.push_back(static_cast<int>(p));
        }
    }
    r.set("fading.decay", f.schedule.decay);
    r.set("fading.threshold", f.threshold);
    r.set("fading.online_learning_rate", f.online_learning_rate);
    r.set("fading.online_epochs", f.online_epochs);
    r.set("fading.composite_profiles", f.composite_profiles);
    r.set("fading.composite_stride", f.composite_stride);

    try {
        sc.validate();
    } catch (const InvalidParameter& e) {
        throw ConfigError(0, source + ": " + e.what());
    }
    return sc;
}

inline Scenario load_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(0, "cannot open config file " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scenario(text.str(), path);
}

} // namespace viterbinet::bench

#endif
