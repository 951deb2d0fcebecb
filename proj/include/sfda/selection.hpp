#pragma once

// Choosing the regularization parameter of the functional logistic model by
// the generalized information criterion (GIC) or the generalized Bayesian
// information criterion (GBIC). Both criteria are evaluated on the labeled
// rows only.

#include <armadillo>
#include <optional>
#include <string>
#include <vector>

#include "sfda/logit.hpp"

namespace sfda {

enum class Criterion { GIC, GBIC };

// Printed: the lambda and 2*pi/n1 terms weighted by (m+1-d) and d.
// Laplace: weights from the Laplace approximation of the marginal likelihood
// under the rank-d Gaussian prior, i.e. -(L-1) d log(lambda) and
// -(L-1)(m+1-d) log(2*pi/n1). The two differ only in those two terms.
enum class GbicForm { Laplace, Printed };

std::string to_string(GbicForm f);
GbicForm parse_gbic_form(const std::string& s);

std::string to_string(Criterion c);
Criterion parse_criterion(const std::string& s);

struct CriterionInputs {
    arma::mat A;  // n1 x (m+1)(L-1): Z tiled
    arma::mat B;  // one-hot responses expanded over each block
    arma::mat C;  // posteriors expanded over each block
    arma::mat D;  // block diag Z' diag(pi_k) Z
    arma::mat E;  // block diag K
    arma::mat Z;  // n1 x (m+1)
};

struct CriterionMatrices {
    CriterionInputs inputs;
    arma::mat Q;
    arma::mat R;
};

CriterionMatrices criterion_matrices(const SemiLogisticFit& fit, const ClassifierDesign& design,
                                     const BlockPenalty& penalty);

struct CriterionReport {
    Criterion kind = Criterion::GIC;
    double value = 0.0;
    double lambda = 0.0;
    double loglik_term = 0.0;   // -2 sum log f over labeled rows
    double trace_term = 0.0;    // GIC: 2 tr(Q R^-1)
    double penalty_term = 0.0;  // GBIC: n1 lambda sum beta' K beta
    double log_det_r = 0.0;     // GBIC
    double log_det_k = 0.0;     // GBIC: log |K|_+
    arma::uword rank_k = 0;     // GBIC: d
    double condition_estimate = 0.0;  // reciprocal condition of R
};

/// -2 sum_{alpha <= n1} log f(y_alpha | x_alpha; beta)
double labeled_deviance(const SemiLogisticFit& fit, const ClassifierDesign& design);

CriterionReport gic_classifier(const SemiLogisticFit& fit, const ClassifierDesign& design,
                               const BlockPenalty& penalty);
CriterionReport gbic_classifier(const SemiLogisticFit& fit, const ClassifierDesign& design,
                                const BlockPenalty& penalty, GbicForm form = GbicForm::Laplace);
CriterionReport score_fit(Criterion kind, const SemiLogisticFit& fit,
                          const ClassifierDesign& design, const BlockPenalty& penalty,
                          GbicForm form = GbicForm::Laplace);

struct LambdaPoint {
    double lambda = 0.0;
    std::optional<SemiLogisticFit> fit;
    std::optional<CriterionReport> gic;
    std::optional<CriterionReport> gbic;
    std::string failure;  // empty when the fit and both criteria succeeded
};

/// em_fit and both criteria at every grid value, in grid order.
std::vector<LambdaPoint> scan_lambda(const ClassifierDesign& design, const BlockPenalty& penalty,
                                     const std::vector<double>& lambda_grid,
                                     const EmOptions& opts = {},
                                     GbicForm gbic_form = GbicForm::Laplace);

struct LambdaSelection {
    SemiLogisticFit fit;
    CriterionReport report;
    std::size_t grid_index = 0;
};

/// Minimizer of the chosen criterion over a finished scan; ties go to the
/// larger lambda. Throws NumericalFailure when no grid point has a score.
LambdaSelection pick_lambda(const std::vector<LambdaPoint>& scan, Criterion kind);

LambdaSelection select_lambda(const ClassifierDesign& design, const BlockPenalty& penalty,
                              const std::vector<double>& lambda_grid, Criterion kind,
                              const EmOptions& opts = {},
                              GbicForm gbic_form = GbicForm::Laplace);

std::vector<double> default_lambda_grid();

} // namespace sfda
