#pragma once

// Independent reference computations used by the tests: numerical
// quadrature, finite differences, a generic quasi-Newton minimizer and
// loop-level re-implementations of the likelihoods and criteria.

#include <armadillo>
#include <cstdint>
#include <functional>
#include <vector>

#include "sfda/logit.hpp"
#include "sfda/selection.hpp"
#include "sfda/smoother.hpp"

namespace oracle {

using Objective = std::function<double(const arma::vec&)>;

/// Integral over the real line of two unit-height Gaussians sharing a width.
double gaussian_product_integral(double mu_i, double mu_j, double eta);

arma::vec fd_gradient(const Objective& f, const arma::vec& x, double h);
arma::mat fd_hessian(const Objective& f, const arma::vec& x, double h);

struct Minimum {
    arma::vec x;
    double value = 0.0;
    int iterations = 0;
};

/// Quasi-Newton (BFGS) with central-difference gradients.
Minimum minimize(const Objective& f, const arma::vec& x0, double step = 1e-2,
                 double grad_tol = 1e-9, int max_iter = 5000);

/// Regularized Gaussian log-likelihood of one curve at (omega, sigma2).
double smoothing_loglik(const arma::mat& phi, const arma::vec& x, const arma::mat& penalty,
                        double zeta, const arma::vec& omega, double sigma2);

/// Contribution of observation i, with the penalty split evenly over the N points.
double smoothing_loglik_point(const arma::mat& phi, const arma::vec& x, const arma::mat& penalty,
                              double zeta, const arma::vec& omega, double sigma2, arma::uword i);

/// Labeled + pseudo-labeled multinomial log-likelihood minus the block penalty,
/// summed row by row.
double loop_penalized_loglik(const sfda::ClassifierDesign& d, const arma::mat& beta,
                             const arma::mat& pseudo, double lambda, const arma::mat& K);

/// log f(y_alpha | z_alpha) for a labeled row.
double loop_row_loglik(const sfda::ClassifierDesign& d, arma::uword row, const arma::mat& beta);

struct LoopCriteria {
    double gic = 0.0;
    double gbic_laplace = 0.0;
    double gbic_printed = 0.0;
    arma::mat Q;
    arma::mat R;
};

/// GIC and both GBIC forms from scalar loops over labeled rows.
LoopCriteria loop_criteria(const sfda::ClassifierDesign& d, const arma::mat& beta, double lambda,
                           const arma::mat& K);

/// Random classifier design with n rows, the first n1 labeled, covering
/// every class among the labeled rows.
sfda::ClassifierDesign random_design(arma::uword n, arma::uword n1, arma::uword m, int L,
                                     std::uint64_t seed, double spread = 1.0);

double max_rel_diff(const arma::mat& a, const arma::mat& b, double floor = 1e-12);

} // namespace oracle
