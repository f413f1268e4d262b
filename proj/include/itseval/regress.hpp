#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace itseval::regress {

/// A named design matrix. The optional offset enters the linear predictor
/// with its coefficient fixed at 1 (used by the logit exposure term).
struct DesignMatrix {
    Eigen::MatrixXd X;
    std::vector<std::string> names;
    std::optional<Eigen::VectorXd> offset;

    [[nodiscard]] Eigen::Index rows() const { return X.rows(); }
    [[nodiscard]] Eigen::Index cols() const { return X.cols(); }

    /// Index of a named column; throws if absent.
    [[nodiscard]] Eigen::Index column(const std::string& name) const;
    [[nodiscard]] bool has_column(const std::string& name) const;

    /// Copy with the given columns removed.
    [[nodiscard]] DesignMatrix without_columns(const std::vector<std::string>& drop) const;

    /// Throws FitError (naming a dependent column) unless full column rank.
    void check_full_rank() const;
};

/// Per-coefficient inference derived from a fit.
struct CoefficientReport {
    std::string name;
    double estimate = 0.0;
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double t_value = 0.0;
    double p_value = 1.0;
};

/// Linear regression result, possibly with AR(p) errors. p = 0 is plain OLS.
struct ArFitResult {
    std::vector<std::string> names;
    Eigen::VectorXd beta;
    Eigen::MatrixXd cov;          // covariance of beta from the whitened regression
    std::vector<double> phi;      // AR parameters, empty for p = 0
    double sigma2 = 0.0;          // innovation variance (unbiased estimate)
    double loglik = 0.0;          // Gaussian log-likelihood of the innovations
    int dof = 0;                  // residual degrees of freedom of the whitened fit
    Eigen::VectorXd residuals_raw;       // y - X beta, length n
    Eigen::VectorXd residuals_whitened;  // innovations, length n - p
    bool converged = true;
    int iterations = 0;

    [[nodiscard]] int order() const { return static_cast<int>(phi.size()); }
    [[nodiscard]] std::size_t n_params() const { return names.size() + phi.size(); }

    /// 1 - level two-sided CIs and p-values from the t distribution.
    [[nodiscard]] std::vector<CoefficientReport> coefficient_table(double level = 0.95) const;
};

struct LogitFitResult {
    std::vector<std::string> names;
    Eigen::VectorXd beta;
    Eigen::MatrixXd cov;
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct AnovaResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

/// Ordinary least squares. Deterministic; rank-checked.
ArFitResult ols(const DesignMatrix& design, const Eigen::VectorXd& y);

/// Logistic regression by iteratively reweighted least squares.
/// Throws FitError on single-class response or perfect separation.
LogitFitResult fit_logit(const DesignMatrix& design, const Eigen::VectorXd& y,
                         const std::optional<Eigen::VectorXd>& offset = std::nullopt);

/// Yule-Walker AR(p) coefficients of a series via Durbin-Levinson.
/// Throws FitError if the estimate is not stationary.
std::vector<double> yule_walker(const Eigen::VectorXd& series, int p);

/// Linear regression with AR(p) errors by iterated feasible GLS:
/// OLS for beta, Yule-Walker on the residuals for phi, quasi-differencing,
/// and re-estimation until the coefficients settle. The first p
/// observations are dropped in the whitened regression; inference comes
/// from that regression.
ArFitResult fit_ar(const DesignMatrix& design, const Eigen::VectorXd& y, int p);

/// Likelihood-ratio comparison of nested fits on the same response.
AnovaResult anova_compare(const ArFitResult& smaller, const ArFitResult& larger);

}  // namespace itseval::regress
