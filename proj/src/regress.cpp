#include "itseval/regress.hpp"

#include <algorithm>
#include <cmath>

#include "itseval/dist.hpp"
#include "itseval/error.hpp"

namespace itseval::regress {

namespace {

constexpr double kRankTol = 1e-10;
constexpr double kLogitTol = 1e-10;
constexpr int kLogitMaxIter = 100;
constexpr double kSeparationEta = 30.0;
constexpr double kFglsTol = 1e-8;
constexpr int kFglsMaxIter = 50;

struct LsSolution {
    Eigen::VectorXd beta;
    Eigen::MatrixXd xtx_inv;  // (X'X)^-1, permutation applied
};

// QR solve with a pivoted rank check that names a dependent column.
LsSolution solve_ls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const std::vector<std::string>& names) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(kRankTol);
    const Eigen::Index k = X.cols();
    if (qr.rank() < k) {
        const Eigen::Index bad = qr.colsPermutation().indices()(qr.rank());
        throw FitError("design matrix is rank deficient: column '" +
                       names[static_cast<std::size_t>(bad)] +
                       "' is linearly dependent on the others");
    }
    LsSolution s;
    s.beta = qr.solve(y);
    Eigen::MatrixXd r_inv = qr.matrixR()
                                .topLeftCorner(k, k)
                                .triangularView<Eigen::Upper>()
                                .solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::MatrixXd inv = r_inv * r_inv.transpose();
    const auto& perm = qr.colsPermutation();
    s.xtx_inv = perm * inv * perm.transpose();
    return s;
}

double gaussian_loglik(double ssr, Eigen::Index m) {
    const double s2 = ssr / static_cast<double>(m);
    return -0.5 * static_cast<double>(m) * (std::log(2.0 * M_PI * s2) + 1.0);
}

}  // namespace

Eigen::Index DesignMatrix::column(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<Eigen::Index>(i);
    throw Error("design matrix has no column '" + name + "'");
}

bool DesignMatrix::has_column(const std::string& name) const {
    return std::find(names.begin(), names.end(), name) != names.end();
}

DesignMatrix DesignMatrix::without_columns(const std::vector<std::string>& drop) const {
    DesignMatrix out;
    out.offset = offset;
    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (std::find(drop.begin(), drop.end(), names[i]) == drop.end()) {
            keep.push_back(static_cast<Eigen::Index>(i));
            out.names.push_back(names[i]);
        }
    }
    out.X.resize(X.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j)
        out.X.col(static_cast<Eigen::Index>(j)) = X.col(keep[j]);
    return out;
}

void DesignMatrix::check_full_rank() const {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(kRankTol);
    if (qr.rank() < X.cols()) {
        const Eigen::Index bad = qr.colsPermutation().indices()(qr.rank());
        throw FitError("design matrix is rank deficient: column '" +
                       names[static_cast<std::size_t>(bad)] +
                       "' is linearly dependent on the others");
    }
}

std::vector<CoefficientReport> ArFitResult::coefficient_table(double level) const {
    std::vector<CoefficientReport> out;
    const double q = dist::t_quantile(0.5 + level / 2.0, static_cast<double>(dof));
    for (std::size_t i = 0; i < names.size(); ++i) {
        CoefficientReport r;
        r.name = names[i];
        r.estimate = beta(static_cast<Eigen::Index>(i));
        const double v = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
        r.se = v > 0.0 ? std::sqrt(v) : 0.0;
        r.ci_low = r.estimate - q * r.se;
        r.ci_high = r.estimate + q * r.se;
        r.t_value = r.se > 0.0 ? r.estimate / r.se : 0.0;
        r.p_value = r.se > 0.0
                        ? dist::t_two_sided_p(r.t_value, static_cast<double>(dof))
                        : 0.0;
        out.push_back(r);
    }
    return out;
}

ArFitResult ols(const DesignMatrix& design, const Eigen::VectorXd& y) {
    const Eigen::Index n = design.rows();
    const Eigen::Index k = design.cols();
    if (n != y.size())
        throw InputError("ols: design has " + std::to_string(n) + " rows but y has " +
                         std::to_string(y.size()));
    if (n <= k)
        throw InputError("ols: need more observations than regressors");

    const LsSolution s = solve_ls(design.X, y, design.names);

    ArFitResult fit;
    fit.names = design.names;
    fit.beta = s.beta;
    fit.residuals_raw = y - design.X * s.beta;
    fit.residuals_whitened = fit.residuals_raw;
    const double ssr = fit.residuals_raw.squaredNorm();
    fit.dof = static_cast<int>(n - k);
    fit.sigma2 = ssr / static_cast<double>(fit.dof);
    fit.cov = fit.sigma2 * s.xtx_inv;
    fit.cov = 0.5 * (fit.cov + fit.cov.transpose()).eval();
    fit.loglik = gaussian_loglik(ssr, n);
    fit.converged = true;
    fit.iterations = 1;
    return fit;
}

LogitFitResult fit_logit(const DesignMatrix& design, const Eigen::VectorXd& y,
                         const std::optional<Eigen::VectorXd>& offset_arg) {
    const Eigen::Index n = design.rows();
    const Eigen::Index k = design.cols();
    if (n != y.size())
        throw InputError("fit_logit: row count mismatch between design and response");

    int ones = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (y(i) != 0.0 && y(i) != 1.0)
            throw InputError("fit_logit: response must be 0/1");
        if (y(i) == 1.0) ++ones;
    }
    if (ones == 0 || ones == n)
        throw FitError("fit_logit: response has a single class, model is not identifiable");

    std::optional<Eigen::VectorXd> offset = offset_arg;
    if (!offset && design.offset) offset = design.offset;
    Eigen::VectorXd off = offset ? *offset : Eigen::VectorXd::Zero(n);
    if (off.size() != n) throw InputError("fit_logit: offset length mismatch");

    design.check_full_rank();

    LogitFitResult fit;
    fit.names = design.names;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
    Eigen::MatrixXd xtx_inv;

    for (int it = 1; it <= kLogitMaxIter; ++it) {
        const Eigen::VectorXd eta = design.X * beta + off;
        if (eta.cwiseAbs().maxCoeff() > kSeparationEta)
            throw FitError(
                "fit_logit: estimates diverge (perfect separation); "
                "reduce the covariate set");
        const Eigen::VectorXd p = (1.0 + (-eta.array()).exp()).inverse().matrix();
        const Eigen::VectorXd w = (p.array() * (1.0 - p.array())).cwiseMax(1e-10).matrix();
        const Eigen::VectorXd sw = w.cwiseSqrt();
        // Working response without the offset: X beta + (y - p) / w.
        const Eigen::VectorXd z = design.X * beta + ((y - p).array() / w.array()).matrix();
        const Eigen::MatrixXd wx = sw.asDiagonal() * design.X;
        const Eigen::VectorXd wz = sw.asDiagonal() * z;
        const LsSolution s = solve_ls(wx, wz, design.names);
        const double delta = (s.beta - beta).cwiseAbs().maxCoeff();
        beta = s.beta;
        xtx_inv = s.xtx_inv;
        fit.iterations = it;
        if (delta < kLogitTol) {
            fit.converged = true;
            break;
        }
    }

    const Eigen::VectorXd eta = design.X * beta + off;
    if (eta.cwiseAbs().maxCoeff() > kSeparationEta)
        throw FitError(
            "fit_logit: estimates diverge (perfect separation); "
            "reduce the covariate set");

    fit.beta = beta;
    fit.cov = xtx_inv;  // (X'WX)^-1 at the optimum
    fit.cov = 0.5 * (fit.cov + fit.cov.transpose()).eval();
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double pi = 1.0 / (1.0 + std::exp(-eta(i)));
        ll += y(i) == 1.0 ? std::log(pi) : std::log1p(-pi);
    }
    fit.loglik = ll;
    return fit;
}

std::vector<double> yule_walker(const Eigen::VectorXd& series, int p) {
    const Eigen::Index n = series.size();
    if (p < 0) throw InputError("yule_walker: order must be non-negative");
    if (p == 0) return {};
    if (n <= p) throw InputError("yule_walker: series shorter than AR order");

    const double mean = series.mean();
    std::vector<double> c(static_cast<std::size_t>(p) + 1, 0.0);
    for (int lag = 0; lag <= p; ++lag) {
        double s = 0.0;
        for (Eigen::Index t = lag; t < n; ++t)
            s += (series(t) - mean) * (series(t - lag) - mean);
        c[static_cast<std::size_t>(lag)] = s / static_cast<double>(n);
    }
    if (c[0] <= 0.0)
        throw FitError("yule_walker: series has zero variance");

    // Durbin-Levinson on the autocovariances.
    std::vector<double> phi(static_cast<std::size_t>(p), 0.0);
    std::vector<double> prev(static_cast<std::size_t>(p), 0.0);
    double err = c[0];
    for (int k = 1; k <= p; ++k) {
        double acc = c[static_cast<std::size_t>(k)];
        for (int j = 1; j < k; ++j)
            acc -= prev[static_cast<std::size_t>(j - 1)] * c[static_cast<std::size_t>(k - j)];
        const double kappa = acc / err;
        if (std::fabs(kappa) >= 1.0 - 1e-12)
            throw FitError("yule_walker: AR(" + std::to_string(p) +
                           ") estimate is not stationary; try a lower order");
        phi[static_cast<std::size_t>(k - 1)] = kappa;
        for (int j = 1; j < k; ++j)
            phi[static_cast<std::size_t>(j - 1)] =
                prev[static_cast<std::size_t>(j - 1)] -
                kappa * prev[static_cast<std::size_t>(k - j - 1)];
        err *= 1.0 - kappa * kappa;
        std::copy(phi.begin(), phi.begin() + k, prev.begin());
    }
    return phi;
}

ArFitResult fit_ar(const DesignMatrix& design, const Eigen::VectorXd& y, int p) {
    if (p < 0) throw InputError("fit_ar: order must be non-negative");
    const Eigen::Index n = design.rows();
    const Eigen::Index k = design.cols();
    if (n != y.size())
        throw InputError("fit_ar: row count mismatch between design and response");
    if (n <= k + p)
        throw InputError("fit_ar: need more observations than regressors plus AR order");
    if (p == 0) return ols(design, y);

    Eigen::VectorXd beta = solve_ls(design.X, y, design.names).beta;
    std::vector<double> phi;
    LsSolution white;
    Eigen::MatrixXd xs;
    Eigen::VectorXd ys;
    bool converged = false;
    int iterations = 0;

    for (int it = 1; it <= kFglsMaxIter; ++it) {
        const Eigen::VectorXd e = y - design.X * beta;
        phi = yule_walker(e, p);

        // Quasi-difference, dropping the first p observations.
        const Eigen::Index m = n - p;
        xs = design.X.bottomRows(m);
        ys = y.tail(m);
        for (int j = 1; j <= p; ++j) {
            const double f = phi[static_cast<std::size_t>(j - 1)];
            xs -= f * design.X.block(p - j, 0, m, k);
            ys -= f * y.segment(p - j, m);
        }
        white = solve_ls(xs, ys, design.names);
        const double delta = (white.beta - beta).cwiseAbs().maxCoeff();
        beta = white.beta;
        iterations = it;
        if (delta < kFglsTol) {
            converged = true;
            break;
        }
    }

    ArFitResult fit;
    fit.names = design.names;
    fit.beta = beta;
    fit.phi = phi;
    fit.residuals_raw = y - design.X * beta;
    fit.residuals_whitened = ys - xs * beta;
    const Eigen::Index m = n - p;
    const double ssr = fit.residuals_whitened.squaredNorm();
    fit.dof = static_cast<int>(m - k);
    fit.sigma2 = ssr / static_cast<double>(fit.dof);
    fit.cov = fit.sigma2 * white.xtx_inv;
    fit.cov = 0.5 * (fit.cov + fit.cov.transpose()).eval();
    fit.loglik = gaussian_loglik(ssr, m);
    fit.converged = converged;
    fit.iterations = iterations;
    return fit;
}

AnovaResult anova_compare(const ArFitResult& smaller, const ArFitResult& larger) {
    if (smaller.residuals_raw.size() != larger.residuals_raw.size())
        throw InputError("anova_compare: fits are on different responses");
    for (const auto& name : smaller.names)
        if (std::find(larger.names.begin(), larger.names.end(), name) == larger.names.end())
            throw InputError("anova_compare: models are not nested (regressor '" + name +
                             "' missing from the larger model)");
    if (smaller.order() > larger.order())
        throw InputError("anova_compare: models are not nested (AR order decreases)");

    AnovaResult r;
    r.dof = static_cast<int>(larger.n_params() - smaller.n_params());
    r.statistic = 2.0 * (larger.loglik - smaller.loglik);
    if (r.dof == 0)
        r.p_value = 1.0;
    else
        r.p_value = dist::chi2_sf(std::max(r.statistic, 0.0), static_cast<double>(r.dof));
    return r;
}

}  // namespace itseval::regress
