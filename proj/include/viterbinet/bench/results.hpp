#ifndef VITERBINET_BENCH_RESULTS_HPP
#define VITERBINET_BENCH_RESULTS_HPP

#include "viterbinet/bench/stats.hpp"
#include "viterbinet/error.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

namespace viterbinet::bench {

/// Error counts of co-run detectors at one SNR point. only[a][b] counts
/// trials on which detector a erred and detector b did not.
struct PointTally {
    std::size_t trials = 0;
    std::vector<std::size_t> errors;
    std::vector<std::vector<std::size_t>> only;

    explicit PointTally(std::size_t detectors = 0)
        : errors(detectors, 0), only(detectors, std::vector<std::size_t>(detectors, 0)) {}

    /// Adds one batch of per-trial error flags, wrong[d][t].
    void add(const std::vector<std::vector<std::uint8_t>>& wrong)
    {
        if (wrong.size() != errors.size())
            throw InvalidInput("PointTally::add: detector count mismatch");
        const std::size_t n = wrong.empty() ? 0 : wrong.front().size();
        for (std::size_t a = 0; a < wrong.size(); ++a) {
            if (wrong[a].size() != n)
                throw InvalidInput("PointTally::add: trial count mismatch");
            for (std::size_t t = 0; t < n; ++t)
                errors[a] += wrong[a][t];
        }
        for (std::size_t a = 0; a < wrong.size(); ++a)
            for (std::size_t b = 0; b < wrong.size(); ++b)
                if (a != b)
                    for (std::size_t t = 0; t < n; ++t)
                        only[a][b] += wrong[a][t] && !wrong[b][t];
        trials += n;
    }
};

/// Seed tag for an SNR value, so a point's results do not depend on where it
/// sits in the grid.
inline std::uint64_t snr_tag(double snr_db)
{
    return std::bit_cast<std::uint64_t>(snr_db == 0.0 ? 0.0 : snr_db);
}

struct ResultRow {
    std::string scenario;
    std::string detector;
    double snr_db = 0.0;
    std::size_t trials = 0;
    std::size_t errors = 0;
    double rate = 0.0;
    double ci_low = 0.0;
    double ci_high = 1.0;
    std::uint64_t seed = 0;
};

/// Results of a study: one tally per SNR point over a fixed detector list.
struct StudyResult {
    std::string scenario;
    std::uint64_t seed = 0;
    std::vector<std::string> detectors;
    std::vector<double> snr_db;
    std::vector<PointTally> points;

    std::size_t index_of(const std::string& detector) const
    {
        const auto it = std::find(detectors.begin(), detectors.end(), detector);
        if (it == detectors.end())
            throw InvalidInput("no results for detector '" + detector + "'");
        return static_cast<std::size_t>(it - detectors.begin());
    }

    double rate(const std::string& detector, std::size_t point) const
    {
        const auto& p = points.at(point);
        return static_cast<double>(p.errors[index_of(detector)]) / static_cast<double>(p.trials);
    }

    std::size_t errors(const std::string& detector, std::size_t point) const
    {
        return points.at(point).errors[index_of(detector)];
    }

    /// Paired one-sided z statistic; positive when `a` errs less than `b`.
    double paired_z(const std::string& a, const std::string& b, std::size_t point) const
    {
        const auto& p = points.at(point);
        const auto ia = index_of(a);
        const auto ib = index_of(b);
        return mcnemar_z(p.only[ia][ib], p.only[ib][ia]);
    }

    /// Rows sorted by detector name, then SNR.
    std::vector<ResultRow> rows() const
    {
        std::vector<ResultRow> out;
        for (std::size_t i = 0; i < points.size(); ++i)
            for (std::size_t d = 0; d < detectors.size(); ++d) {
                ResultRow r;
                r.scenario = scenario;
                r.detector = detectors[d];
                r.snr_db = snr_db[i];
                r.trials = points[i].trials;
                r.errors = points[i].errors[d];
                r.rate = static_cast<double>(r.errors) / static_cast<double>(r.trials);
                const auto ci = wilson_interval(r.errors, r.trials);
                r.ci_low = ci.low;
                r.ci_high = ci.high;
                r.seed = seed;
                out.push_back(r);
            }
        std::sort(out.begin(), out.end(), [](const ResultRow& a, const ResultRow& b) {
            return std::tie(a.detector, a.snr_db) < std::tie(b.detector, b.snr_db);
        });
        return out;
    }
};

inline void write_csv(std::ostream& out, const std::vector<ResultRow>& rows)
{
    out << "scenario,detector,snr_db,trials,errors,rate,ci_low,ci_high,seed\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, ",%.6g,%zu,%zu,%.9g,%.9g,%.9g,%llu\n", r.snr_db, r.trials, r.errors, r.rate,
                      r.ci_low, r.ci_high, static_cast<unsigned long long>(r.seed));
        out << r.scenario << ',' << r.detector << buf;
    }
}

} // namespace viterbinet::bench

#endif
