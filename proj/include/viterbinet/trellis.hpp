#ifndef VITERBINET_TRELLIS_HPP
#define VITERBINET_TRELLIS_HPP

// Viterbi dynamic program over the C^m window states of a finite-memory
// channel, driven by an abstract per-step cost provider.
//
// State s~ at step k is the window (s_{k-m+1}, ..., s_k), oldest symbol
// first. Its integer index is the base-C number whose most significant digit
// is the oldest symbol, so the predecessors of s~ are j*C^{m-1} + s~/C for
// j = 0..C-1 and they all share the overlap s_{k-m+1}..s_{k-1}.

#include "viterbinet/error.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace viterbinet::trellis {

class TrellisSpec {
public:
    TrellisSpec(std::size_t alphabet_size, std::size_t memory)
        : alphabet_(alphabet_size), memory_(memory)
    {
        if (alphabet_size < 2)
            throw InvalidParameter("TrellisSpec: alphabet size must be at least 2");
        if (memory < 1)
            throw InvalidParameter("TrellisSpec: memory must be at least 1");
        states_ = 1;
        for (std::size_t i = 0; i < memory; ++i) {
            if (states_ > std::numeric_limits<std::uint32_t>::max() / alphabet_size)
                throw InvalidParameter("TrellisSpec: state space too large");
            states_ *= alphabet_size;
        }
        lead_ = states_ / alphabet_size;
    }

    std::size_t alphabet_size() const noexcept { return alphabet_; }
    std::size_t memory() const noexcept { return memory_; }
    std::size_t num_states() const noexcept { return states_; }

    /// Index of the window whose symbols (oldest first) are `digits`.
    std::size_t encode(std::span<const int> digits) const
    {
        if (digits.size() != memory_)
            throw InvalidInput("TrellisSpec::encode: window length must equal the memory");
        std::size_t idx = 0;
        for (int d : digits) {
            if (d < 0 || static_cast<std::size_t>(d) >= alphabet_)
                throw InvalidInput("TrellisSpec::encode: symbol outside the alphabet");
            idx = idx * alphabet_ + static_cast<std::size_t>(d);
        }
        return idx;
    }

    std::vector<int> decode(std::size_t state) const
    {
        std::vector<int> digits(memory_);
        for (std::size_t i = memory_; i-- > 0;) {
            digits[i] = static_cast<int>(state % alphabet_);
            state /= alphabet_;
        }
        return digits;
    }

    /// (s~)_1, the symbol that leaves the window next.
    int oldest(std::size_t state) const noexcept { return static_cast<int>(state / lead_); }
    int newest(std::size_t state) const noexcept { return static_cast<int>(state % alphabet_); }

    std::size_t predecessor(std::size_t state, std::size_t j) const noexcept { return j * lead_ + state / alphabet_; }
    std::size_t successor(std::size_t state, int symbol) const noexcept
    {
        return (state % lead_) * alphabet_ + static_cast<std::size_t>(symbol);
    }

private:
    std::size_t alphabet_;
    std::size_t memory_;
    std::size_t states_ = 1;
    std::size_t lead_ = 1;
};

/// Fills the costs c_k(s~) of every state at step k (0-based).
template <class P>
concept StepCostProvider = requires(P& p, std::size_t k, std::span<double> out) {
    { p(k, out) };
};

/// Adapts a per-(step, state) cost function to StepCostProvider.
template <class F>
    requires std::invocable<F&, std::size_t, std::size_t>
struct PerStateCosts {
    F fn;
    void operator()(std::size_t k, std::span<double> out)
    {
        for (std::size_t s = 0; s < out.size(); ++s)
            out[s] = static_cast<double>(std::invoke(fn, k, s));
    }
};
template <class F>
PerStateCosts(F) -> PerStateCosts<F>;

/// Precomputed T x C^m cost table, row k holds step k.
struct CostTable {
    std::span<const double> table;
    void operator()(std::size_t k, std::span<double> out) const
    {
        std::copy_n(table.begin() + static_cast<std::ptrdiff_t>(k * out.size()), out.size(), out.begin());
    }
};

struct NoDecisionSink {
    void operator()(std::size_t, int) const noexcept {}
};

struct TrellisOptions {
    /// Keep the full T x C^m table of path costs (memory heavy for long blocks).
    bool record_path_costs = false;
};

struct TrellisRun {
    std::size_t num_states = 0;
    /// ML sequence recovered by tracing survivors back from the terminal best state.
    std::vector<int> decisions;
    /// On-the-fly decisions: position k-m+1 is taken from the best state at
    /// step k, the last m from the terminal best state.
    std::vector<int> sequential_decisions;
    /// survivors[k * S + s]: predecessor of s on its best path at step k.
    std::vector<std::uint32_t> survivors;
    /// Normalized path costs (per-step minimum subtracted), row per step; empty
    /// unless requested.
    std::vector<double> path_costs;
    /// Amount subtracted at each step.
    std::vector<double> offsets;
    double best_cost = 0.0;

    /// Un-normalized accumulated cost of state s at step k.
    double raw_path_cost(std::size_t k, std::size_t s) const
    {
        double acc = path_costs.at(k * num_states + s);
        for (std::size_t i = 0; i <= k; ++i)
            acc += offsets[i];
        return acc;
    }
};

/// Runs the Viterbi recursion for T steps. `on_decision(position, symbol)` is
/// invoked for each on-the-fly decision before costs of the next step are
/// requested. Ties pick the lowest state index.
template <StepCostProvider Costs, class Sink = NoDecisionSink>
TrellisRun viterbi_run(Costs&& costs, std::size_t T, const TrellisSpec& spec, Sink&& on_decision = {},
                       const TrellisOptions& options = {})
{
    const std::size_t m = spec.memory();
    if (T <= m)
        throw InvalidParameter("viterbi_run: block length must exceed the channel memory");
    const std::size_t S = spec.num_states();
    const std::size_t C = spec.alphabet_size();
    constexpr double inf = std::numeric_limits<double>::infinity();

    TrellisRun run;
    run.num_states = S;
    run.decisions.assign(T, 0);
    run.sequential_decisions.assign(T, 0);
    run.survivors.assign(T * S, 0);
    run.offsets.assign(T, 0.0);
    if (options.record_path_costs)
        run.path_costs.assign(T * S, 0.0);

    std::vector<double> step(S);
    std::vector<double> prev(S, 0.0);
    std::vector<double> next(S);

    std::size_t best = 0;
    for (std::size_t k = 0; k < T; ++k) {
        costs(k, std::span<double>(step));
        std::uint32_t* surv = run.survivors.data() + k * S;
        double step_min = inf;
        std::size_t step_arg = 0;
        for (std::size_t s = 0; s < S; ++s) {
            const double c = step[s];
            if (std::isnan(c) || c == -inf)
                throw InvalidInput("viterbi_run: step costs must be finite or +infinity");
            std::size_t arg = spec.predecessor(s, 0);
            double acc = prev[arg];
            for (std::size_t j = 1; j < C; ++j) {
                const std::size_t u = spec.predecessor(s, j);
                if (prev[u] < acc) {
                    acc = prev[u];
                    arg = u;
                }
            }
            surv[s] = static_cast<std::uint32_t>(arg);
            next[s] = acc + c;
            if (next[s] < step_min) {
                step_min = next[s];
                step_arg = s;
            }
        }
        if (step_min == inf)
            throw NoValidPath("viterbi_run: every state has infinite cost at step " + std::to_string(k));
        for (std::size_t s = 0; s < S; ++s)
            next[s] -= step_min;
        run.offsets[k] = step_min;
        if (options.record_path_costs)
            std::copy(next.begin(), next.end(), run.path_costs.begin() + static_cast<std::ptrdiff_t>(k * S));
        std::swap(prev, next);
        best = step_arg;

        if (k + 1 >= m) {
            const std::size_t pos = k + 1 - m;
            run.sequential_decisions[pos] = spec.oldest(best);
            on_decision(pos, run.sequential_decisions[pos]);
        }
    }

    run.best_cost = 0.0;
    for (double o : run.offsets)
        run.best_cost += o;

    const std::vector<int> tail = spec.decode(best);
    for (std::size_t i = 0; i < m; ++i)
        run.sequential_decisions[T - m + i] = tail[i];

    std::size_t state = best;
    for (std::size_t k = T; k-- > 0;) {
        run.decisions[k] = spec.newest(state);
        state = run.survivors[k * S + state];
    }
    return run;
}

/// Minimizer of sum_k c_k(window_k) over all symbol sequences.
template <StepCostProvider Costs>
std::vector<int> viterbi_detect(Costs&& costs, std::size_t T, const TrellisSpec& spec)
{
    return viterbi_run(std::forward<Costs>(costs), T, spec).decisions;
}

/// Exhaustive minimization of the same objective; the m-1 symbols preceding the
/// block are free, as in the trellis initialization. Ties go to the
/// lexicographically smallest sequence. Refuses more than 2^20 candidates.
template <StepCostProvider Costs>
std::vector<int> brute_force_ml(Costs&& costs, std::size_t T, const TrellisSpec& spec)
{
    const std::size_t m = spec.memory();
    const std::size_t C = spec.alphabet_size();
    const std::size_t S = spec.num_states();
    if (T < 1)
        throw InvalidParameter("brute_force_ml: empty block");
    const std::size_t L = T + m - 1;
    std::size_t count = 1;
    for (std::size_t i = 0; i < L; ++i) {
        count *= C;
        if (count > (std::size_t{1} << 20))
            throw InstanceTooLarge("brute_force_ml: more than 2^20 candidate sequences");
    }

    std::vector<double> table(T * S);
    for (std::size_t k = 0; k < T; ++k)
        costs(k, std::span<double>(table.data() + k * S, S));

    std::vector<int> seq(L, 0);
    std::vector<int> best_seq;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < count; ++n) {
        std::size_t v = n;
        for (std::size_t i = L; i-- > 0;) {
            seq[i] = static_cast<int>(v % C);
            v /= C;
        }
        double total = 0.0;
        for (std::size_t k = 0; k < T; ++k)
            total += table[k * S + spec.encode(std::span<const int>(seq.data() + k, m))];
        if (total < best) {
            best = total;
            best_seq = seq;
        }
    }
    if (best_seq.empty())
        throw NoValidPath("brute_force_ml: every sequence has infinite cost");
    return std::vector<int>(best_seq.begin() + static_cast<std::ptrdiff_t>(m - 1), best_seq.end());
}

} // namespace viterbinet::trellis

#endif
