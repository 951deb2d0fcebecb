#include "sfda/logit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sfda/errors.hpp"

namespace sfda {

namespace {

// n x (L-1) linear predictors
arma::mat linear_predictors(const arma::mat& Z, const CoefficientBlock& beta)
{
    return Z * beta.beta.t();
}

// log(1 + sum_k exp(eta_k)) per row
arma::vec log_normalizer(const arma::mat& eta)
{
    arma::vec out(eta.n_rows);
    for (arma::uword a = 0; a < eta.n_rows; ++a) {
        const double top = std::max(0.0, eta.row(a).max());
        double s = std::exp(-top);
        for (arma::uword k = 0; k < eta.n_cols; ++k) {
            s += std::exp(eta(a, k) - top);
        }
        out[a] = top + std::log(s);
    }
    return out;
}

void check_shapes(const ClassifierDesign& d, const CoefficientBlock& beta, const arma::mat& pseudo)
{
    if (beta.beta.n_cols != d.width() || beta.beta.n_rows != static_cast<arma::uword>(d.L - 1)) {
        throw InvalidArgument("coefficient block does not match the design");
    }
    if (d.n_unlabeled() > 0 &&
        (pseudo.n_rows != d.n_unlabeled() || pseudo.n_cols != static_cast<arma::uword>(d.L - 1))) {
        throw InvalidArgument("pseudo-labels must be (n - n1) x (L - 1)");
    }
}

// responses for every row: Y for labeled rows, pseudo-labels for the rest
arma::mat responses(const ClassifierDesign& d, const arma::mat& pseudo)
{
    if (d.n_unlabeled() == 0) {
        return d.Y;
    }
    return arma::join_cols(d.Y, pseudo);
}

arma::uword rank_psd(const arma::mat& m)
{
    const arma::vec ev = arma::eig_sym(m);
    return static_cast<arma::uword>(arma::accu(ev > 1e-10));
}

} // namespace

ClassifierDesign ClassifierDesign::labeled_view() const
{
    ClassifierDesign out;
    out.Z = Z.rows(0, n_labeled - 1);
    out.n_labeled = n_labeled;
    out.Y = Y;
    out.L = L;
    out.source_rows.assign(source_rows.begin(), source_rows.begin() + n_labeled);
    return out;
}

CoefficientBlock CoefficientBlock::from_stacked(const arma::vec& theta, arma::uword classes_minus_one)
{
    const arma::uword width = theta.n_elem / classes_minus_one;
    return CoefficientBlock{arma::reshape(theta, width, classes_minus_one).t()};
}

BlockPenalty BlockPenalty::identity(arma::uword m)
{
    BlockPenalty p;
    p.K = arma::zeros(m + 1, m + 1);
    p.K.submat(1, 1, m, m) = arma::eye(m, m);
    p.kind = KstarKind::Identity;
    p.rank = m;
    return p;
}

BlockPenalty BlockPenalty::from_kstar(const arma::mat& kstar)
{
    if (!kstar.is_square() || !kstar.is_symmetric(1e-12)) {
        throw InvalidArgument("K* must be square and symmetric");
    }
    const arma::vec ev = arma::eig_sym(kstar);
    if (ev.min() < -1e-10) {
        throw InvalidArgument("K* must be positive semi-definite");
    }
    const arma::uword m = kstar.n_rows;
    BlockPenalty p;
    p.K = arma::zeros(m + 1, m + 1);
    p.K.submat(1, 1, m, m) = kstar;
    p.kind = KstarKind::Custom;
    p.rank = rank_psd(p.K);
    return p;
}

arma::mat predictor_rows(const arma::mat& W, const CrossProductMatrix& J)
{
    if (W.n_cols != J.matrix.n_rows) {
        throw InvalidArgument("coefficient width does not match J");
    }
    return arma::join_rows(arma::ones(W.n_rows), W * J.matrix);
}

ClassifierDesign build_design(const FunctionalDataset& data, const CrossProductMatrix& J,
                              int num_classes)
{
    if (data.coefficients.n_cols != J.matrix.n_rows || !J.matrix.is_square()) {
        throw InvalidArgument("build_design: dataset and J disagree on m");
    }
    if (data.labels.size() != data.coefficients.n_rows) {
        throw InvalidArgument("build_design: one label slot per curve required");
    }
    int max_label = 0;
    std::vector<std::size_t> order;
    for (std::size_t a = 0; a < data.labels.size(); ++a) {
        if (data.labels[a]) {
            if (*data.labels[a] < 1) {
                throw InvalidArgument("build_design: labels must be >= 1");
            }
            max_label = std::max(max_label, *data.labels[a]);
            order.push_back(a);
        }
    }
    if (order.empty()) {
        throw InvalidArgument("build_design: no labeled rows");
    }
    const std::size_t n_labeled = order.size();
    for (std::size_t a = 0; a < data.labels.size(); ++a) {
        if (!data.labels[a]) {
            order.push_back(a);
        }
    }
    const int L = num_classes > 0 ? num_classes : max_label;
    if (L < 2) {
        throw InvalidArgument("build_design: need at least two classes");
    }
    if (max_label > L) {
        throw InvalidArgument("build_design: label exceeds the number of classes");
    }

    ClassifierDesign d;
    d.L = L;
    d.n_labeled = n_labeled;
    d.source_rows = order;
    const arma::mat all = predictor_rows(data.coefficients, J);
    d.Z.set_size(all.n_rows, all.n_cols);
    for (std::size_t r = 0; r < order.size(); ++r) {
        d.Z.row(r) = all.row(order[r]);
    }
    d.Y.zeros(n_labeled, L - 1);
    for (std::size_t r = 0; r < n_labeled; ++r) {
        const int g = *data.labels[order[r]];
        if (g < L) {
            d.Y(r, g - 1) = 1.0;
        }
    }
    return d;
}

arma::mat posteriors(const arma::mat& Z, const CoefficientBlock& beta)
{
    if (beta.beta.n_cols != Z.n_cols) {
        throw InvalidArgument("posteriors: coefficient width does not match design");
    }
    const arma::mat eta = linear_predictors(Z, beta);
    const arma::uword L = eta.n_cols + 1;
    arma::mat p(eta.n_rows, L);
    for (arma::uword a = 0; a < eta.n_rows; ++a) {
        const double top = std::max(0.0, eta.row(a).max());
        double s = 0.0;
        for (arma::uword k = 0; k + 1 < L; ++k) {
            p(a, k) = std::exp(eta(a, k) - top);
            s += p(a, k);
        }
        p(a, L - 1) = std::exp(-top);
        s += p(a, L - 1);
        p.row(a) /= s;
    }
    return p;
}

double penalized_loglik(const ClassifierDesign& design, const CoefficientBlock& beta,
                        const arma::mat& pseudo_labels, double lambda, const BlockPenalty& penalty)
{
    check_shapes(design, beta, pseudo_labels);
    const arma::mat eta = linear_predictors(design.Z, beta);
    const arma::mat r = responses(design, pseudo_labels);
    const double fit = arma::accu(r % eta) - arma::accu(log_normalizer(eta));
    double pen = 0.0;
    for (arma::uword k = 0; k < beta.beta.n_rows; ++k) {
        const arma::vec bk = beta.beta.row(k).t();
        pen += arma::dot(bk, penalty.K * bk);
    }
    return fit - 0.5 * static_cast<double>(design.n_labeled) * lambda * pen;
}

ScoreInformation score_and_information(const ClassifierDesign& design,
                                       const CoefficientBlock& beta,
                                       const arma::mat& pseudo_labels, double lambda,
                                       const BlockPenalty& penalty)
{
    check_shapes(design, beta, pseudo_labels);
    const arma::uword q = design.width();
    const arma::uword classes = static_cast<arma::uword>(design.L - 1);
    const arma::mat pi = posteriors(design.Z, beta);
    const arma::mat r = responses(design, pseudo_labels);
    const double ridge = static_cast<double>(design.n_labeled) * lambda;

    ScoreInformation out;
    out.gradient.set_size(q * classes);
    out.information.set_size(q * classes, q * classes);
    for (arma::uword k = 0; k < classes; ++k) {
        const arma::vec resid = r.col(k) - pi.col(k);
        out.gradient.subvec(k * q, (k + 1) * q - 1) =
            design.Z.t() * resid - ridge * penalty.K * beta.beta.row(k).t();
        for (arma::uword l = k; l < classes; ++l) {
            arma::vec w = -pi.col(k) % pi.col(l);
            if (k == l) {
                w += pi.col(k);
            }
            arma::mat block = design.Z.t() * (design.Z.each_col() % w);
            if (k == l) {
                block += ridge * penalty.K;
            }
            out.information.submat(k * q, l * q, (k + 1) * q - 1, (l + 1) * q - 1) = block;
            if (l != k) {
                out.information.submat(l * q, k * q, (l + 1) * q - 1, (k + 1) * q - 1) = block.t();
            }
        }
    }
    return out;
}

MStepResult fisher_scoring_mstep(const ClassifierDesign& design, const CoefficientBlock& beta0,
                                 const arma::mat& pseudo_labels, double lambda,
                                 const BlockPenalty& penalty, const MStepOptions& opts)
{
    const arma::uword classes = static_cast<arma::uword>(design.L - 1);
    MStepResult out;
    out.beta = beta0;
    double obj = penalized_loglik(design, out.beta, pseudo_labels, lambda, penalty);
    out.objective_path.push_back(obj);

    for (int it = 0; it < opts.max_iter; ++it) {
        const ScoreInformation si =
            score_and_information(design, out.beta, pseudo_labels, lambda, penalty);
        out.gradient_norm = arma::norm(si.gradient, "inf");
        if (out.gradient_norm <= opts.grad_tol * (1.0 + std::abs(obj))) {
            return out;
        }
        arma::vec direction;
        if (!arma::solve(direction, si.information, si.gradient, arma::solve_opts::no_approx)) {
            throw NumericalFailure("Fisher scoring: information matrix is singular",
                                   arma::rcond(si.information));
        }
        const arma::vec theta = out.beta.stacked();
        double step = 1.0;
        bool accepted = false;
        while (step >= opts.min_step) {
            CoefficientBlock trial = CoefficientBlock::from_stacked(theta + step * direction, classes);
            const double trial_obj = penalized_loglik(design, trial, pseudo_labels, lambda, penalty);
            if (std::isfinite(trial_obj) && trial_obj >= obj) {
                out.beta = std::move(trial);
                obj = trial_obj;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // at the roundoff floor of the objective; accept a loosely stationary point
            if (out.gradient_norm <= std::sqrt(opts.grad_tol) * (1.0 + std::abs(obj))) {
                return out;
            }
            std::ostringstream os;
            os << "Fisher scoring: objective cannot be improved (gradient max-norm "
               << out.gradient_norm << ", objective " << obj << ", iteration " << it << ")";
            const arma::vec last = out.beta.stacked();
            throw NonConvergence(os.str(), std::vector<double>(last.begin(), last.end()), it);
        }
        ++out.iterations;
        out.objective_path.push_back(obj);
    }
    return out;
}

SemiLogisticFit em_fit(const ClassifierDesign& design, double lambda, const BlockPenalty& penalty,
                       const EmOptions& opts)
{
    if (design.n_labeled == 0) {
        throw InvalidArgument("em_fit: no labeled rows");
    }
    if (penalty.K.n_rows != design.width()) {
        throw InvalidArgument("em_fit: penalty does not match the design width");
    }
    const arma::uword classes = static_cast<arma::uword>(design.L - 1);
    SemiLogisticFit fit;
    fit.lambda = lambda;

    const ClassifierDesign labeled = design.labeled_view();
    const CoefficientBlock start{arma::zeros(classes, design.width())};
    MStepResult step1 = fisher_scoring_mstep(labeled, start, arma::mat(), lambda, penalty, opts.mstep);
    fit.beta = std::move(step1.beta);
    fit.mstep_iterations = step1.iterations;

    const arma::uword n1 = design.n_labeled;
    auto e_step = [&](const CoefficientBlock& b) -> arma::mat {
        if (design.n_unlabeled() == 0) {
            return arma::mat(0, classes);
        }
        const arma::mat pi = posteriors(design.Z.rows(n1, design.n() - 1), b);
        return pi.cols(0, classes - 1);
    };

    fit.pseudo_labels = e_step(fit.beta);
    fit.objective_trace.push_back(penalized_loglik(design, fit.beta, fit.pseudo_labels, lambda, penalty));
    if (design.n_unlabeled() == 0) {
        fit.converged = true;
        return fit;
    }

    for (int k = 1; k <= opts.max_em; ++k) {
        MStepResult ms;
        try {
            ms = fisher_scoring_mstep(design, fit.beta, fit.pseudo_labels, lambda, penalty, opts.mstep);
        } catch (const NonConvergence& e) {
            throw NonConvergence(std::string(e.what()) + " [EM iteration " + std::to_string(k) + "]",
                                 e.last_iterate(), k);
        } catch (const NumericalFailure& e) {
            throw NumericalFailure(std::string(e.what()) + " [EM iteration " + std::to_string(k) + "]",
                                   e.condition());
        }
        fit.beta = std::move(ms.beta);
        fit.mstep_iterations += ms.iterations;
        fit.pseudo_labels = e_step(fit.beta);
        fit.objective_trace.push_back(
            penalized_loglik(design, fit.beta, fit.pseudo_labels, lambda, penalty));
        fit.em_iterations = k;
        const double change = std::abs(fit.objective_trace[k] - fit.objective_trace[k - 1]);
        if (change < opts.tol) {
            fit.converged = true;
            break;
        }
    }
    return fit;
}

Prediction predict(const CoefficientBlock& beta, const arma::mat& Z)
{
    if (Z.n_cols != beta.beta.n_cols) {
        throw InvalidArgument("predict: curves were not mapped through the model's basis");
    }
    Prediction out;
    out.posteriors = posteriors(Z, beta);
    out.classes.resize(Z.n_rows);
    for (arma::uword a = 0; a < Z.n_rows; ++a) {
        arma::uword best = 0;
        for (arma::uword k = 1; k < out.posteriors.n_cols; ++k) {
            if (out.posteriors(a, k) > out.posteriors(a, best)) {
                best = k;
            }
        }
        out.classes[a] = static_cast<int>(best) + 1;
    }
    return out;
}

double error_rate(const std::vector<int>& predicted, const std::vector<int>& truth)
{
    if (predicted.size() != truth.size() || truth.empty()) {
        throw InvalidArgument("error_rate: size mismatch or empty");
    }
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        wrong += predicted[i] != truth[i] ? 1 : 0;
    }
    return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

} // namespace sfda
