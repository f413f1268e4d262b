#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace itseval::diagnostics {

/// Residual diagnostics bundle for one fitted model.
struct DiagnosticsReport {
    double dw = 0.0;
    std::vector<double> acf;   // lags 0..L, acf[0] = 1
    std::vector<double> pacf;  // lags 1..L
    double band = 0.0;         // +-2/sqrt(n) reference band
    std::vector<std::pair<double, double>> qq;  // (theoretical, sample) quantiles
};

/// Durbin-Watson statistic sum((e_t - e_{t-1})^2) / sum(e_t^2).
double durbin_watson(std::span<const double> residuals);

/// Sample autocorrelations at lags 0..max_lag, lag-0 denominator.
std::vector<double> acf(std::span<const double> series, int max_lag);

/// Partial autocorrelations at lags 1..max_lag via Durbin-Levinson.
std::vector<double> pacf(std::span<const double> series, int max_lag);

/// Normal q-q pairs: standardized order statistics against standard
/// normal quantiles at probabilities (i - 0.5)/n.
std::vector<std::pair<double, double>> qq_points(std::span<const double> residuals);

/// Full report at the given lag depth.
DiagnosticsReport make_report(std::span<const double> residuals, int max_lag);

}  // namespace itseval::diagnostics
