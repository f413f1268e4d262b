#include "itseval/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "itseval/dist.hpp"
#include "itseval/error.hpp"

namespace itseval::diagnostics {

namespace {

// Mean-removed autocovariances at lags 0..m, divided by n.
std::vector<double> autocovariances(std::span<const double> x, int m) {
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> c(static_cast<std::size_t>(m) + 1, 0.0);
    for (int lag = 0; lag <= m; ++lag) {
        double s = 0.0;
        for (std::ptrdiff_t t = lag; t < n; ++t)
            s += (x[static_cast<std::size_t>(t)] - mean) *
                 (x[static_cast<std::size_t>(t - lag)] - mean);
        c[static_cast<std::size_t>(lag)] = s / static_cast<double>(n);
    }
    return c;
}

}  // namespace

double durbin_watson(std::span<const double> residuals) {
    if (residuals.size() < 2)
        throw InputError("durbin_watson: need at least two residuals");
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < residuals.size(); ++t) {
        den += residuals[t] * residuals[t];
        if (t > 0) {
            const double d = residuals[t] - residuals[t - 1];
            num += d * d;
        }
    }
    if (den == 0.0)
        throw InputError("durbin_watson: residuals are identically zero");
    return num / den;
}

std::vector<double> acf(std::span<const double> series, int max_lag) {
    const auto n = static_cast<int>(series.size());
    if (max_lag < 0 || max_lag >= n)
        throw InputError("acf: max_lag must lie in [0, n)");
    auto c = autocovariances(series, max_lag);
    if (c[0] <= 0.0)
        throw InputError("acf: series is constant (zero variance)");
    std::vector<double> r(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) r[k] = c[k] / c[0];
    r[0] = 1.0;
    return r;
}

std::vector<double> pacf(std::span<const double> series, int max_lag) {
    const auto n = static_cast<int>(series.size());
    if (max_lag < 1 || max_lag >= n)
        throw InputError("pacf: max_lag must lie in [1, n)");
    auto r = acf(series, max_lag);

    std::vector<double> out(static_cast<std::size_t>(max_lag), 0.0);
    std::vector<double> phi(static_cast<std::size_t>(max_lag), 0.0);
    std::vector<double> prev(static_cast<std::size_t>(max_lag), 0.0);
    double err = 1.0;
    for (int k = 1; k <= max_lag; ++k) {
        double acc = r[static_cast<std::size_t>(k)];
        for (int j = 1; j < k; ++j)
            acc -= prev[static_cast<std::size_t>(j - 1)] * r[static_cast<std::size_t>(k - j)];
        const double kappa = err != 0.0 ? acc / err : 0.0;
        phi[static_cast<std::size_t>(k - 1)] = kappa;
        for (int j = 1; j < k; ++j)
            phi[static_cast<std::size_t>(j - 1)] =
                prev[static_cast<std::size_t>(j - 1)] -
                kappa * prev[static_cast<std::size_t>(k - j - 1)];
        err *= 1.0 - kappa * kappa;
        std::copy(phi.begin(), phi.begin() + k, prev.begin());
        out[static_cast<std::size_t>(k - 1)] = kappa;
    }
    return out;
}

std::vector<std::pair<double, double>> qq_points(std::span<const double> residuals) {
    const auto n = static_cast<int>(residuals.size());
    if (n < 3) throw InputError("qq_points: need at least three residuals");

    double mean = 0.0;
    for (double v : residuals) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : residuals) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1));
    if (sd == 0.0)
        throw InputError("qq_points: residuals have zero variance");

    std::vector<double> sorted(residuals.begin(), residuals.end());
    std::sort(sorted.begin(), sorted.end());

    std::vector<std::pair<double, double>> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
        const double prob = (i - 0.5) / n;
        pts.emplace_back(dist::normal_quantile(prob),
                         (sorted[static_cast<std::size_t>(i - 1)] - mean) / sd);
    }
    return pts;
}

DiagnosticsReport make_report(std::span<const double> residuals, int max_lag) {
    DiagnosticsReport rep;
    rep.dw = durbin_watson(residuals);
    rep.acf = acf(residuals, max_lag);
    rep.pacf = pacf(residuals, max_lag);
    rep.band = 2.0 / std::sqrt(static_cast<double>(residuals.size()));
    rep.qq = qq_points(residuals);
    return rep;
}

}  // namespace itseval::diagnostics
