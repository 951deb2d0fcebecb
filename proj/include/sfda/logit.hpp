#pragma once

// Semi-supervised functional logistic model: linear predictors
// beta_k' z_alpha with z_alpha = (1, w_alpha' J)', class L as reference,
// penalized multinomial log-likelihood with soft pseudo-labels for the
// unlabeled rows, Fisher scoring and the EM wrapper.

#include <armadillo>
#include <limits>
#include <string>
#include <vector>

#include "sfda/basis.hpp"
#include "sfda/smoother.hpp"

namespace sfda {

struct ClassifierDesign {
    arma::mat Z;                      // n x (m+1), labeled rows first
    arma::uword n_labeled = 0;
    arma::mat Y;                      // n_labeled x (L-1) one-hot, class L = zero row
    int L = 2;
    std::vector<std::size_t> source_rows;  // row of Z -> row of the dataset

    arma::uword n() const { return Z.n_rows; }
    arma::uword n_unlabeled() const { return Z.n_rows - n_labeled; }
    arma::uword width() const { return Z.n_cols; }

    /// Only the labeled rows.
    ClassifierDesign labeled_view() const;
};

struct CoefficientBlock {
    arma::mat beta;  // (L-1) x (m+1); column 0 holds the intercepts

    /// (beta_1', ..., beta_{L-1}')'
    arma::vec stacked() const { return arma::vectorise(beta.t()); }
    static CoefficientBlock from_stacked(const arma::vec& theta, arma::uword classes_minus_one);
};

enum class KstarKind { Identity, Custom };

struct BlockPenalty {
    arma::mat K;  // (m+1) x (m+1), zero first row and column
    KstarKind kind = KstarKind::Identity;
    arma::uword rank = 0;

    static BlockPenalty identity(arma::uword m);
    /// Wraps a symmetric PSD m x m K*. Throws InvalidArgument otherwise.
    static BlockPenalty from_kstar(const arma::mat& kstar);
};

struct SemiLogisticFit {
    CoefficientBlock beta;
    double lambda = 0.0;
    int em_iterations = 0;
    std::vector<double> objective_trace;
    arma::mat pseudo_labels;  // (n - n1) x (L-1)
    bool converged = false;
    int mstep_iterations = 0; // summed over every M-step, Step 1 included
};

/// Rows (1, w_alpha' J) for every row of W.
arma::mat predictor_rows(const arma::mat& W, const CrossProductMatrix& J);

/// Design from a functional dataset. Labeled rows are moved to the front
/// (stable order). L defaults to the largest label present.
ClassifierDesign build_design(const FunctionalDataset& data, const CrossProductMatrix& J,
                              int num_classes = 0);

/// n x L posterior class probabilities.
arma::mat posteriors(const arma::mat& Z, const CoefficientBlock& beta);
inline arma::mat posteriors(const ClassifierDesign& d, const CoefficientBlock& beta)
{
    return posteriors(d.Z, beta);
}

/// Labeled term + unlabeled term with pseudo-labels - (n1 lambda / 2) sum_k beta_k' K beta_k.
double penalized_loglik(const ClassifierDesign& design, const CoefficientBlock& beta,
                        const arma::mat& pseudo_labels, double lambda, const BlockPenalty& penalty);

struct ScoreInformation {
    arma::vec gradient;     // (m+1)(L-1)
    arma::mat information;  // expected negative Hessian
};

ScoreInformation score_and_information(const ClassifierDesign& design,
                                       const CoefficientBlock& beta,
                                       const arma::mat& pseudo_labels, double lambda,
                                       const BlockPenalty& penalty);

struct MStepOptions {
    int max_iter = 100;
    double grad_tol = 1e-8;   // relative to 1 + |objective|
    double min_step = 0x1p-30;
};

struct MStepResult {
    CoefficientBlock beta;
    int iterations = 0;
    std::vector<double> objective_path;  // objective at every accepted iterate
    double gradient_norm = 0.0;
};

/// Fisher scoring with step halving; the objective never decreases.
MStepResult fisher_scoring_mstep(const ClassifierDesign& design, const CoefficientBlock& beta0,
                                 const arma::mat& pseudo_labels, double lambda,
                                 const BlockPenalty& penalty, const MStepOptions& opts = {});

struct EmOptions {
    int max_em = 500;
    double tol = 1e-5;
    MStepOptions mstep;
};

/// Step 1 fits the labeled rows alone; then E-step (soft pseudo-labels) and
/// M-step alternate until the objective changes by less than `tol`.
SemiLogisticFit em_fit(const ClassifierDesign& design, double lambda, const BlockPenalty& penalty,
                       const EmOptions& opts = {});

struct Prediction {
    std::vector<int> classes;  // 1..L
    arma::mat posteriors;      // rows sum to one
};

/// Argmax posterior class; ties go to the lowest class index.
Prediction predict(const CoefficientBlock& beta, const arma::mat& Z);

/// Fraction of rows where predicted class differs from truth.
double error_rate(const std::vector<int>& predicted, const std::vector<int>& truth);

} // namespace sfda
