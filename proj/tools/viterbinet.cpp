// Command-line front end: train a model, detect a block, run SER sweeps and
// block-fading studies, or run a short self test.

#include "viterbinet/bench/fading.hpp"
#include "viterbinet/bench/scenario.hpp"
#include "viterbinet/bench/sweep.hpp"
#include "viterbinet/bench/training.hpp"
#include "viterbinet/channels.hpp"
#include "viterbinet/detector.hpp"
#include "viterbinet/fec.hpp"
#include "viterbinet/mlp.hpp"
#include "viterbinet/model_io.hpp"
#include "viterbinet/stable.hpp"
#include "viterbinet/trellis.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace vn = viterbinet;

namespace {

struct CommonFlags {
    std::string config;
    std::string output;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> budget;
    bool quiet = false;
};

vn::bench::Scenario load(const CommonFlags& f)
{
    auto sc = vn::bench::load_scenario(f.config);
    if (f.seed)
        sc.seed = *f.seed;
    if (f.budget)
        sc.budget = *f.budget;
    sc.validate();
    return sc;
}

vn::bench::Progress progress_printer(bool quiet)
{
    if (quiet)
        return {};
    return [](const std::string& msg) { std::cerr << "  " << msg << '\n'; };
}

/// Runs `write` against the named file, or stdout when the name is empty or "-".
template <class Fn>
void with_output(const std::string& path, Fn&& write)
{
    if (path.empty() || path == "-") {
        write(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out)
        throw vn::InvalidInput("cannot open " + path + " for writing");
    write(out);
    if (!out)
        throw vn::InvalidInput("failed writing " + path);
}

std::vector<double> read_numbers(const std::string& path)
{
    std::ifstream file;
    std::istream* in = &std::cin;
    if (path != "-") {
        file.open(path);
        if (!file)
            throw vn::InvalidInput("cannot open " + path);
        in = &file;
    }
    std::vector<double> v;
    std::string token;
    while (*in >> token) {
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(token, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != token.size() || !std::isfinite(x))
            throw vn::InvalidInput(path + ": not a number: '" + token + "'");
        v.push_back(x);
    }
    return v;
}

int run_train(const CommonFlags& f, std::optional<double> snr_db, std::size_t profile_index)
{
    const auto sc = load(f);
    const auto c = sc.constellation();
    const double snr = snr_db.value_or(sc.snr_db.front());
    vn::channels::ChannelProfile profile;
    if (sc.study == vn::bench::Study::fading) {
        profile = vn::bench::fading_profile(sc, static_cast<long long>(profile_index) + 1, snr);
    } else {
        if (profile_index >= sc.gammas.size())
            throw vn::InvalidParameter("--profile is out of range for this scenario");
        profile = vn::bench::sweep_profile(sc, sc.gammas[profile_index], snr);
    }
    const auto model = vn::bench::train_on_profile(profile, c, sc.training.samples, sc.training_options(), sc.seed);
    vn::io::save_model(model, f.output);
    if (!f.quiet)
        std::cerr << "trained on " << sc.training.samples << " samples at " << snr << " dB; wrote " << f.output
                  << '\n';
    return 0;
}

int run_detect(const std::string& model_path, const std::string& input, const std::string& output,
               const std::string& truth_path)
{
    const auto model = vn::io::load_model(model_path);
    const auto y = read_numbers(input);
    if (y.size() <= model.constellation.memory)
        throw vn::InvalidInput("detect: need more outputs than the channel memory");
    const auto symbols = vn::detector::detect_block(model, y);
    with_output(output, [&](std::ostream& out) {
        for (int s : symbols)
            out << model.constellation.points[static_cast<std::size_t>(s)] << '\n';
    });
    if (!truth_path.empty()) {
        const auto truth = read_numbers(truth_path);
        if (truth.size() != symbols.size())
            throw vn::InvalidInput("detect: truth file length differs from the number of outputs");
        std::size_t errors = 0;
        for (std::size_t i = 0; i < truth.size(); ++i)
            errors += model.constellation.points[static_cast<std::size_t>(symbols[i])] != truth[i];
        std::cerr << "symbol errors: " << errors << " / " << truth.size()
                  << " (SER " << static_cast<double>(errors) / static_cast<double>(truth.size()) << ")\n";
    }
    return 0;
}

int run_sweep(const CommonFlags& f)
{
    const auto sc = load(f);
    if (sc.study != vn::bench::Study::sweep)
        throw vn::InvalidScenario("sweep: config describes a fading study; use the fading subcommand");
    const auto result = vn::bench::run_sweep(sc, progress_printer(f.quiet));
    with_output(f.output, [&](std::ostream& out) { vn::bench::write_csv(out, result.rows()); });
    return 0;
}

int run_fading(const CommonFlags& f, const std::string& log_path)
{
    const auto sc = load(f);
    if (sc.study != vn::bench::Study::fading)
        throw vn::InvalidScenario("fading: config describes a sweep; use the sweep subcommand");
    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path);
        if (!log)
            throw vn::InvalidInput("cannot open " + log_path + " for writing");
    }
    const auto result = vn::bench::run_fading(sc, log_path.empty() ? nullptr : &log, progress_printer(f.quiet));
    with_output(f.output, [&](std::ostream& out) { vn::bench::write_csv(out, result.study.rows()); });
    return 0;
}

bool check(const char* name, bool ok)
{
    std::cout << (ok ? "ok   " : "FAIL ") << name << '\n';
    return ok;
}

int run_selftest()
{
    bool all = true;

    {
        vn::Rng gen(3);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const vn::trellis::TrellisSpec spec(2, 3);
        bool same = true;
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> table(9 * spec.num_states());
            for (double& v : table)
                v = u(gen);
            const vn::trellis::CostTable costs{table};
            same = same && vn::trellis::viterbi_detect(costs, 9, spec) == vn::trellis::brute_force_ml(costs, 9, spec);
        }
        all &= check("trellis matches exhaustive search", same);
    }
    {
        vn::Rng gen(5);
        std::vector<std::uint8_t> bits(vn::fec::kInfoBits);
        for (auto& b : bits)
            b = static_cast<std::uint8_t>(gen() & 1u);
        auto code = vn::fec::rs_encode(bits);
        for (std::size_t k = 0; k < vn::fec::kCorrectable; ++k)
            code[k * 13] ^= static_cast<std::uint8_t>(1 + k);
        const auto r = vn::fec::rs_decode(code);
        all &= check("Reed-Solomon corrects 16 symbol errors", r.decode_ok && r.info_bits == bits);
    }
    {
        const vn::channels::StableParams p{2.0, 0.0, 1.0 / std::sqrt(2.0), 0.0};
        double worst = 0.0;
        for (double x = -4.0; x <= 4.0; x += 0.5)
            worst = std::max(worst, std::abs(vn::channels::stable_pdf(p, x) -
                                             std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi)));
        all &= check("stable density at alpha = 2 is Gaussian", worst < 1e-6);
    }
    {
        const auto c = vn::channels::Constellation::bpsk(4);
        const vn::channels::ChannelProfile profile{vn::channels::exp_decay_profile(0.5, 4), vn::channels::db_to_linear(10.0)};
        vn::detector::ModelTrainingOptions opt;
        opt.train.epochs = 40;
        const auto model = vn::bench::train_on_profile(profile, c, 3000, opt, 11);
        const auto s = vn::channels::random_symbols(c, 20000, 12);
        const auto y = vn::channels::transmit(c, s, profile, 13);
        const vn::detector::ModelBasedCosts csi(profile, c);
        const double learned = static_cast<double>(vn::detector::count_errors(vn::detector::detect_block(model, y), s));
        const double exact = static_cast<double>(vn::detector::count_errors(vn::detector::detect_block(csi, c, y), s));
        std::cout << "     10 dB AWGN SER: learned " << learned / 20000.0 << ", known channel " << exact / 20000.0
                  << '\n';
        all &= check("learned detector tracks the known-channel detector", learned <= 2.0 * exact + 20.0);
    }
    std::cout << (all ? "selftest passed\n" : "selftest FAILED\n");
    return all ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"ViterbiNet: learned-likelihood Viterbi symbol detection"};
    app.require_subcommand(1);

    auto add_common = [](CLI::App* sub, CommonFlags& f, bool need_output) {
        sub->add_option("-c,--config", f.config, "Scenario INI file")->required()->check(CLI::ExistingFile);
        auto* o = sub->add_option("-o,--output", f.output, need_output ? "Output file" : "Output file (default stdout)");
        if (need_output)
            o->required();
        sub->add_option("--seed", f.seed, "Override the scenario seed");
        sub->add_option("--budget", f.budget, "Override the Monte-Carlo budget (symbols or blocks)")
            ->check(CLI::PositiveNumber);
        sub->add_flag("-q,--quiet", f.quiet, "No progress messages");
    };

    CommonFlags train_f;
    std::optional<double> train_snr;
    std::size_t train_profile = 0;
    auto* train = app.add_subcommand("train", "Train a model on one channel of a scenario and save it as JSON");
    add_common(train, train_f, true);
    train->add_option("--snr-db", train_snr, "SNR in dB (default: first grid point)");
    train->add_option("--profile", train_profile,
                      "Profile index in the scenario's decay list (fading: block index minus one)");

    std::string model_path, input = "-", detect_out, truth;
    auto* detect = app.add_subcommand("detect", "Detect symbols from channel outputs with a saved model");
    detect->add_option("-m,--model", model_path, "Model JSON file")->required()->check(CLI::ExistingFile);
    detect->add_option("-i,--input", input, "Channel outputs, whitespace separated ('-' for stdin)");
    detect->add_option("-o,--output", detect_out, "Detected symbol values (default stdout)");
    detect->add_option("--truth", truth, "Transmitted symbol values; prints the symbol error rate");

    CommonFlags sweep_f;
    auto* sweep = app.add_subcommand("sweep", "Symbol error rate sweep; writes CSV");
    add_common(sweep, sweep_f, false);

    CommonFlags fading_f;
    std::string log_path;
    auto* fading = app.add_subcommand("fading", "Coded block-fading study; writes CSV and an optional JSON-lines log");
    add_common(fading, fading_f, false);
    fading->add_option("--log", log_path, "Per-block JSON-lines log of the online detector");

    app.add_subcommand("selftest", "Quick end-to-end checks");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*train)
            return run_train(train_f, train_snr, train_profile);
        if (*detect)
            return run_detect(model_path, input, detect_out, truth);
        if (*sweep)
            return run_sweep(sweep_f);
        if (*fading)
            return run_fading(fading_f, log_path);
        return run_selftest();
    } catch (const vn::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
