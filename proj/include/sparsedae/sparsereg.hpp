#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace sparsedae {

enum class Solver { LassoStlsq, Stlsq, Stols };

/// Sparse-fit hyperparameters. `alpha` is the l1 weight, `threshold` the
/// coefficient cutoff applied in normalized-column units; coefficients are
/// un-normalized only at report time.
struct SparseFitConfig {
    Solver solver = Solver::LassoStlsq;
    double alpha = 1e-3;
    double threshold = 0.05;
    int max_iter = 2000;
    double tol = 1e-8;
};

struct FitResult {
    Eigen::VectorXd coefficients;  // one entry per regressor column
    std::vector<int> support;      // indices of nonzero coefficients
    double r2 = 0.0;
    double residual_norm = 0.0;
    bool converged = true;
};

/// R^2 = 1 - sum (y - yhat)^2 / sum (y - ybar)^2. Throws DegenerateTarget
/// when y has zero variance; may be negative for bad fits.
double score_r2(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

double score_aic(Eigen::Index n, double rss, int support_size);
double score_bic(Eigen::Index n, double rss, int support_size);

/// Minimum-norm least squares via SVD with a singular-value cutoff.
FitResult fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Coordinate-descent minimizer of  (1/2N)||y - Xp||^2 + alpha ||p||_1.
/// Converged when the KKT residuals are within tol; otherwise returns the
/// last iterate with converged = false.
FitResult fit_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha, int max_iter,
                    double tol);

/// Sequentially thresholded fit: {sparse fit (lasso, or OLS when alpha = 0)
/// -> zero all |p_j| < threshold -> OLS refit on survivors} until the
/// support is stable; the returned coefficients are the final OLS refit.
FitResult fit_stlsq(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha,
                    double threshold, int max_iter);

/// OLS, soft-threshold each coefficient by `threshold`, OLS refit on the
/// surviving support.
FitResult fit_stols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double threshold);

/// Dispatch on cfg.solver.
FitResult sparse_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const SparseFitConfig& cfg);

}  // namespace sparsedae
