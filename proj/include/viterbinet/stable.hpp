#ifndef VITERBINET_STABLE_HPP
#define VITERBINET_STABLE_HPP

// Alpha-stable distributions in Nolan's S(alpha, beta, scale, location; 0)
// parameterization: sampling by the Chambers-Mallows-Stuck transform and
// density evaluation by numerically inverting the characteristic function.

#include "viterbinet/error.hpp"
#include "viterbinet/random.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <vector>

namespace viterbinet::channels {

struct StableParams {
    double alpha = 2.0;
    double beta = 0.0;
    double scale = 1.0;
    double location = 0.0;

    void validate() const
    {
        if (!(alpha > 0.0 && alpha <= 2.0))
            throw InvalidParameter("alpha-stable: alpha must lie in (0, 2]");
        if (!(beta >= -1.0 && beta <= 1.0))
            throw InvalidParameter("alpha-stable: beta must lie in [-1, 1]");
        if (!(scale > 0.0))
            throw InvalidParameter("alpha-stable: scale must be positive");
        if (!std::isfinite(location))
            throw InvalidParameter("alpha-stable: location must be finite");
    }
};

/// One draw from S(alpha, beta, scale, location; 0).
template <class Generator>
double sample_stable(const StableParams& p, Generator& gen)
{
    using std::numbers::pi;
    std::uniform_real_distribution<double> uniform(-pi / 2.0, pi / 2.0);
    std::exponential_distribution<double> exponential(1.0);
    double v = uniform(gen);
    // the open-interval endpoint makes cos(v) vanish
    while (v <= -pi / 2.0)
        v = uniform(gen);
    const double w = exponential(gen);

    if (p.alpha == 1.0) {
        const double half = pi / 2.0 + p.beta * v;
        const double z = (2.0 / pi) * (half * std::tan(v) - p.beta * std::log((pi / 2.0) * w * std::cos(v) / half));
        return p.scale * z + p.location;
    }
    const double zeta = p.beta * std::tan(pi * p.alpha / 2.0);
    const double shift = std::atan(zeta) / p.alpha;
    const double stretch = std::pow(1.0 + zeta * zeta, 1.0 / (2.0 * p.alpha));
    const double z = stretch * std::sin(p.alpha * (v + shift)) / std::pow(std::cos(v), 1.0 / p.alpha)
        * std::pow(std::cos(v - p.alpha * (v + shift)) / w, (1.0 - p.alpha) / p.alpha);
    // z is S(alpha, beta; 1); move to the 0-parameterization
    return p.scale * (z - zeta) + p.location;
}

namespace detail {

struct InversionIntegrand {
    StableParams p;
    double x;
};

// Re[exp(-i t x) phi(t)] for t > 0.
inline double inversion_integrand(double t, void* raw)
{
    const auto& in = *static_cast<const InversionIntegrand*>(raw);
    const auto& p = in.p;
    const double ct = p.scale * t;
    double phase = (p.location - in.x) * t;
    double magnitude;
    if (p.alpha == 1.0) {
        magnitude = std::exp(-ct);
        if (ct > 0.0)
            phase -= p.beta * (2.0 / std::numbers::pi) * ct * std::log(ct);
    } else {
        const double cta = std::pow(ct, p.alpha);
        magnitude = std::exp(-cta);
        phase -= p.beta * std::tan(std::numbers::pi * p.alpha / 2.0) * (ct - cta);
    }
    return magnitude * std::cos(phase);
}

class IntegrationWorkspace {
public:
    explicit IntegrationWorkspace(std::size_t limit)
        : limit_(limit), ws_(gsl_integration_workspace_alloc(limit)) {}
    ~IntegrationWorkspace() { gsl_integration_workspace_free(ws_); }
    IntegrationWorkspace(const IntegrationWorkspace&) = delete;
    IntegrationWorkspace& operator=(const IntegrationWorkspace&) = delete;

    gsl_integration_workspace* get() const noexcept { return ws_; }
    std::size_t limit() const noexcept { return limit_; }

private:
    std::size_t limit_;
    gsl_integration_workspace* ws_;
};

} // namespace detail

struct StablePdfOptions {
    double abs_tolerance = 1e-8;
    std::size_t max_subintervals = 20000;
};

/// Density of S(alpha, beta, scale, location; 0) at x, from
/// f(x) = (1/pi) int_0^inf Re[exp(-i t x) phi(t)] dt with adaptive
/// Gauss-Kronrod quadrature. The tail is cut where |phi(t)| < 1e-17.
inline double stable_pdf(const StableParams& p, double x, const StablePdfOptions& opt = {})
{
    p.validate();
    if (!std::isfinite(x))
        throw InvalidInput("stable_pdf: non-finite abscissa");

    const double cutoff = std::pow(39.2, 1.0 / p.alpha) / p.scale;
    detail::InversionIntegrand data{p, x};
    gsl_function f;
    f.function = &detail::inversion_integrand;
    f.params = &data;

    detail::IntegrationWorkspace ws(opt.max_subintervals);
    gsl_error_handler_t* previous = gsl_set_error_handler_off();
    double result = 0.0;
    double abserr = 0.0;
    // The integral is divided by pi afterwards, so scale the tolerance.
    const int status = gsl_integration_qag(&f, 0.0, cutoff, opt.abs_tolerance * std::numbers::pi, 0.0,
                                           ws.limit(), GSL_INTEG_GAUSS21, ws.get(), &result, &abserr);
    gsl_set_error_handler(previous);
    if (status != GSL_SUCCESS) {
        std::ostringstream msg;
        msg << "stable_pdf: quadrature did not converge at x=" << x << " (alpha=" << p.alpha
            << ", beta=" << p.beta << "): " << gsl_strerror(status) << ", estimated error " << abserr / std::numbers::pi;
        throw TabulationError(msg.str());
    }
    return std::max(0.0, result / std::numbers::pi);
}

/// Density values on an equally spaced grid, looked up by nearest grid point.
class StablePdfTable {
public:
    StablePdfTable() = default;
    StablePdfTable(double grid_min, double grid_max, std::vector<double> values)
        : min_(grid_min), max_(grid_max), values_(std::move(values))
    {
        if (values_.size() < 2 || !(grid_min < grid_max))
            throw InvalidParameter("StablePdfTable: need at least two points on a non-empty range");
    }

    double grid_min() const noexcept { return min_; }
    double grid_max() const noexcept { return max_; }
    std::size_t size() const noexcept { return values_.size(); }
    const std::vector<double>& values() const noexcept { return values_; }
    double step() const noexcept { return (max_ - min_) / static_cast<double>(values_.size() - 1); }
    double abscissa(std::size_t i) const noexcept { return min_ + step() * static_cast<double>(i); }

    std::size_t nearest_index(double x) const noexcept
    {
        const double pos = std::round((x - min_) / step());
        if (!(pos > 0.0))
            return 0;
        return std::min(static_cast<std::size_t>(pos), values_.size() - 1);
    }
    /// Density at the grid point closest to x; clamps to the edges outside the grid.
    double nearest(double x) const noexcept { return values_[nearest_index(x)]; }

private:
    double min_ = 0.0;
    double max_ = 1.0;
    std::vector<double> values_;
};

inline StablePdfTable alpha_stable_pdf_table(const StableParams& p, double grid_min, double grid_max,
                                             std::size_t n_points, const StablePdfOptions& opt = {})
{
    if (n_points < 2)
        throw InvalidParameter("alpha_stable_pdf_table: n_points must be at least 2");
    if (!(grid_min < grid_max))
        throw InvalidParameter("alpha_stable_pdf_table: grid_min must be below grid_max");
    std::vector<double> values(n_points);
    const double step = (grid_max - grid_min) / static_cast<double>(n_points - 1);
    for (std::size_t i = 0; i < n_points; ++i)
        values[i] = stable_pdf(p, grid_min + step * static_cast<double>(i), opt);
    return StablePdfTable(grid_min, grid_max, std::move(values));
}

} // namespace viterbinet::channels

#endif
