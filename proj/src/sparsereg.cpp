#include "sparsedae/sparsereg.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "sparsedae/errors.hpp"

namespace sparsedae {

namespace {

const char* kModule = "sparsereg";

void check_inputs(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::string& op) {
    if (X.rows() < 1 || X.cols() < 1) throw Error(kModule, op, "EmptyProblem", "X must be nonempty");
    if (X.rows() != y.size())
        throw Error(kModule, op, "ShapeMismatch", "X rows must match y length");
    if (!X.allFinite() || !y.allFinite())
        throw Error(kModule, op, "NonFiniteValue", "inputs contain non-finite entries");
}

std::vector<int> nonzero_support(const Eigen::VectorXd& p) {
    std::vector<int> support;
    for (Eigen::Index j = 0; j < p.size(); ++j)
        if (p(j) != 0.0) support.push_back(static_cast<int>(j));
    return support;
}

void finalize(FitResult& fit, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    fit.support = nonzero_support(fit.coefficients);
    const Eigen::VectorXd residual = y - X * fit.coefficients;
    fit.residual_norm = residual.norm();
    fit.r2 = score_r2(y, X * fit.coefficients);
}

/// OLS restricted to a column subset; zeros elsewhere.
Eigen::VectorXd ols_on_support(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const std::vector<int>& support) {
    Eigen::MatrixXd sub(X.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t k = 0; k < support.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = X.col(support[k]);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(sub, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-12);
    const Eigen::VectorXd coeffs = svd.solve(y);
    Eigen::VectorXd full = Eigen::VectorXd::Zero(X.cols());
    for (std::size_t k = 0; k < support.size(); ++k) full(support[k]) = coeffs(static_cast<Eigen::Index>(k));
    return full;
}

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

}  // namespace

double score_r2(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
    const std::string op = "score_r2";
    if (y.size() < 2) throw Error(kModule, op, "TooFewSamples", "need at least 2 samples");
    if (y.size() != yhat.size()) throw Error(kModule, op, "ShapeMismatch", "length mismatch");
    const double mean = y.mean();
    const double tss = (y.array() - mean).square().sum();
    if (tss <= 0.0)
        throw DegenerateTargetError(kModule, op, "target has zero variance");
    const double rss = (y - yhat).squaredNorm();
    return 1.0 - rss / tss;
}

double score_aic(Eigen::Index n, double rss, int support_size) {
    return static_cast<double>(n) * std::log(rss / static_cast<double>(n)) + 2.0 * support_size;
}

double score_bic(Eigen::Index n, double rss, int support_size) {
    return static_cast<double>(n) * std::log(rss / static_cast<double>(n)) +
           support_size * std::log(static_cast<double>(n));
}

FitResult fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    check_inputs(X, y, "fit_ols");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-12);
    FitResult fit;
    fit.coefficients = svd.solve(y);
    finalize(fit, X, y);
    return fit;
}

FitResult fit_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha, int max_iter,
                    double tol) {
    const std::string op = "fit_lasso";
    check_inputs(X, y, op);
    if (alpha < 0.0) throw Error(kModule, op, "NegativeAlpha", "alpha must be >= 0");
    if (max_iter < 1) throw Error(kModule, op, "BadMaxIter", "max_iter must be >= 1");
    if (!(tol > 0.0)) throw Error(kModule, op, "BadTol", "tol must be > 0");

    const Eigen::Index n = X.rows();
    const Eigen::Index j_count = X.cols();
    const double inv_n = 1.0 / static_cast<double>(n);

    // Coordinate descent on the Gram formulation: correlations
    // g_j = x_j^T (y - Xp) / N are maintained incrementally.
    const Eigen::MatrixXd gram = (X.transpose() * X) * inv_n;
    const Eigen::VectorXd xty = (X.transpose() * y) * inv_n;

    Eigen::VectorXd p = Eigen::VectorXd::Zero(j_count);
    Eigen::VectorXd g = xty;

    FitResult fit;
    fit.converged = false;
    for (int sweep = 0; sweep < max_iter; ++sweep) {
        for (Eigen::Index j = 0; j < j_count; ++j) {
            const double diag = gram(j, j);
            if (diag <= 0.0) continue;   // all-zero column
            const double old = p(j);
            const double next = soft_threshold(g(j) + diag * old, alpha) / diag;
            if (next != old) {
                p(j) = next;
                g.noalias() -= gram.col(j) * (next - old);
            }
        }
        double violation = 0.0;
        for (Eigen::Index j = 0; j < j_count; ++j) {
            if (gram(j, j) <= 0.0) continue;
            const double v = p(j) == 0.0
                                 ? std::max(std::abs(g(j)) - alpha, 0.0)
                                 : std::abs(g(j) - alpha * (p(j) > 0.0 ? 1.0 : -1.0));
            violation = std::max(violation, v);
        }
        if (violation <= tol) {
            fit.converged = true;
            break;
        }
    }
    fit.coefficients = p;
    finalize(fit, X, y);
    return fit;
}

FitResult fit_stlsq(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha,
                    double threshold, int max_iter) {
    const std::string op = "fit_stlsq";
    check_inputs(X, y, op);
    if (threshold < 0.0) throw Error(kModule, op, "NegativeThreshold", "threshold must be >= 0");

    std::vector<int> active(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) active[j] = static_cast<int>(j);

    bool converged = true;
    FitResult refit;
    for (int iter = 0; iter < std::max(max_iter, 1); ++iter) {
        Eigen::MatrixXd sub(X.rows(), static_cast<Eigen::Index>(active.size()));
        for (std::size_t k = 0; k < active.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = X.col(active[k]);

        const FitResult inner = alpha > 0.0 ? fit_lasso(sub, y, alpha, 2000, 1e-8)
                                            : fit_ols(sub, y);
        converged = inner.converged;

        std::vector<int> survivors;
        for (std::size_t k = 0; k < active.size(); ++k)
            if (std::abs(inner.coefficients(static_cast<Eigen::Index>(k))) >= threshold ||
                (threshold == 0.0 && inner.coefficients(static_cast<Eigen::Index>(k)) != 0.0))
                survivors.push_back(active[k]);
        if (threshold == 0.0) survivors = active;  // nothing can be zeroed
        if (survivors.empty())
            throw NoRelationError(kModule, op, "thresholding emptied the support");

        refit.coefficients = ols_on_support(X, y, survivors);
        if (survivors == active) break;
        active = std::move(survivors);
    }
    refit.converged = converged;
    finalize(refit, X, y);
    return refit;
}

FitResult fit_stols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double threshold) {
    const std::string op = "fit_stols";
    check_inputs(X, y, op);
    if (threshold < 0.0) throw Error(kModule, op, "NegativeThreshold", "threshold must be >= 0");
    if (threshold == 0.0) return fit_ols(X, y);

    const FitResult ols = fit_ols(X, y);
    std::vector<int> survivors;
    for (Eigen::Index j = 0; j < X.cols(); ++j)
        if (soft_threshold(ols.coefficients(j), threshold) != 0.0)
            survivors.push_back(static_cast<int>(j));
    if (survivors.empty())
        throw NoRelationError(kModule, op, "soft thresholding emptied the support");

    FitResult fit;
    fit.coefficients = ols_on_support(X, y, survivors);
    finalize(fit, X, y);
    return fit;
}

FitResult sparse_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const SparseFitConfig& cfg) {
    switch (cfg.solver) {
        case Solver::LassoStlsq:
            return fit_stlsq(X, y, cfg.alpha, cfg.threshold, cfg.max_iter);
        case Solver::Stlsq:
            return fit_stlsq(X, y, 0.0, cfg.threshold, cfg.max_iter);
        case Solver::Stols:
            return fit_stols(X, y, cfg.threshold);
    }
    throw Error(kModule, "sparse_fit", "BadSolver", "unknown solver");
}

}  // namespace sparsedae
