#include "sfda/selection.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "sfda/errors.hpp"

namespace sfda {

namespace {

constexpr double kEigenTol = 1e-10;

arma::mat labeled_rows(const ClassifierDesign& d)
{
    if (d.n_labeled == 0) {
        throw InvalidArgument("criterion: no labeled rows");
    }
    return d.Z.rows(0, d.n_labeled - 1);
}

void check_fit(const SemiLogisticFit& fit, const ClassifierDesign& d, const BlockPenalty& penalty)
{
    if (fit.beta.beta.n_rows != static_cast<arma::uword>(d.L - 1) ||
        fit.beta.beta.n_cols != d.width() || penalty.K.n_rows != d.width() ||
        d.Y.n_rows != d.n_labeled) {
        throw InvalidArgument("criterion: fit, design and penalty disagree on (m, L, n1)");
    }
}

arma::mat block_diag(const std::vector<arma::mat>& blocks)
{
    arma::uword total = 0;
    for (const auto& b : blocks) {
        total += b.n_rows;
    }
    arma::mat out(total, total, arma::fill::zeros);
    arma::uword off = 0;
    for (const auto& b : blocks) {
        out.submat(off, off, off + b.n_rows - 1, off + b.n_cols - 1) = b;
        off += b.n_rows;
    }
    return out;
}

} // namespace

std::string to_string(Criterion c) { return c == Criterion::GIC ? "gic" : "gbic"; }

Criterion parse_criterion(const std::string& s)
{
    std::string lower;
    for (char ch : s) {
        lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    if (lower == "gic") {
        return Criterion::GIC;
    }
    if (lower == "gbic") {
        return Criterion::GBIC;
    }
    throw InvalidArgument("unknown criterion '" + s + "' (expected gic or gbic)");
}

std::string to_string(GbicForm f) { return f == GbicForm::Laplace ? "laplace" : "printed"; }

GbicForm parse_gbic_form(const std::string& s)
{
    if (s == "laplace") {
        return GbicForm::Laplace;
    }
    if (s == "printed") {
        return GbicForm::Printed;
    }
    throw InvalidArgument("unknown GBIC form '" + s + "' (expected laplace or printed)");
}

CriterionMatrices criterion_matrices(const SemiLogisticFit& fit, const ClassifierDesign& design,
                                     const BlockPenalty& penalty)
{
    check_fit(fit, design, penalty);
    const arma::uword classes = static_cast<arma::uword>(design.L - 1);
    const arma::uword q = design.width();
    const double n1 = static_cast<double>(design.n_labeled);
    const double lambda = fit.lambda;

    CriterionMatrices out;
    CriterionInputs& in = out.inputs;
    in.Z = labeled_rows(design);
    const arma::mat pi = posteriors(in.Z, fit.beta);

    in.A = arma::repmat(in.Z, 1, classes);
    in.B.set_size(design.n_labeled, q * classes);
    in.C.set_size(design.n_labeled, q * classes);
    std::vector<arma::mat> d_blocks;
    std::vector<arma::mat> e_blocks;
    for (arma::uword k = 0; k < classes; ++k) {
        in.B.cols(k * q, (k + 1) * q - 1) = arma::repmat(design.Y.col(k), 1, q);
        in.C.cols(k * q, (k + 1) * q - 1) = arma::repmat(pi.col(k), 1, q);
        d_blocks.push_back(in.Z.t() * (in.Z.each_col() % pi.col(k)));
        e_blocks.push_back(penalty.K);
    }
    in.D = block_diag(d_blocks);
    in.E = block_diag(e_blocks);

    const arma::mat score = (in.B - in.C) % in.A;
    const arma::vec theta = fit.beta.stacked();
    out.Q = (score.t() - lambda * in.E * theta * arma::ones<arma::rowvec>(design.n_labeled)) * score / n1;
    const arma::mat ca = in.C % in.A;
    out.R = -ca.t() * ca / n1 + in.D / n1 + lambda * in.E;
    return out;
}

double labeled_deviance(const SemiLogisticFit& fit, const ClassifierDesign& design)
{
    const arma::mat z = labeled_rows(design);
    const arma::mat pi = posteriors(z, fit.beta);
    double sum = 0.0;
    for (arma::uword a = 0; a < design.n_labeled; ++a) {
        arma::uword cls = static_cast<arma::uword>(design.L - 1);
        for (arma::uword k = 0; k < design.Y.n_cols; ++k) {
            if (design.Y(a, k) == 1.0) {
                cls = k;
            }
        }
        sum += std::log(pi(a, cls));
    }
    return -2.0 * sum;
}

CriterionReport gic_classifier(const SemiLogisticFit& fit, const ClassifierDesign& design,
                               const BlockPenalty& penalty)
{
    const CriterionMatrices cm = criterion_matrices(fit, design, penalty);
    CriterionReport rep;
    rep.kind = Criterion::GIC;
    rep.lambda = fit.lambda;
    rep.condition_estimate = arma::rcond(cm.R);
    if (!(rep.condition_estimate > 1e-15)) {
        std::ostringstream os;
        os << "GIC: R(beta) is numerically singular (rcond " << rep.condition_estimate << ")";
        throw NumericalFailure(os.str(), rep.condition_estimate);
    }
    rep.loglik_term = labeled_deviance(fit, design);
    rep.trace_term = 2.0 * arma::trace(arma::solve(cm.R, cm.Q));
    rep.value = rep.loglik_term + rep.trace_term;
    if (!std::isfinite(rep.value)) {
        throw NumericalFailure("GIC: non-finite value", rep.condition_estimate);
    }
    return rep;
}

CriterionReport gbic_classifier(const SemiLogisticFit& fit, const ClassifierDesign& design,
                                const BlockPenalty& penalty, GbicForm form)
{
    if (!(fit.lambda > 0.0)) {
        throw InvalidArgument("GBIC: lambda must be positive");
    }
    const CriterionMatrices cm = criterion_matrices(fit, design, penalty);
    const double classes = static_cast<double>(design.L - 1);
    const double n1 = static_cast<double>(design.n_labeled);
    const double width = static_cast<double>(design.width());

    CriterionReport rep;
    rep.kind = Criterion::GBIC;
    rep.lambda = fit.lambda;
    rep.condition_estimate = arma::rcond(cm.R);

    const arma::vec ev = arma::eig_sym(penalty.K);
    for (double e : ev) {
        if (e > kEigenTol) {
            rep.log_det_k += std::log(e);
            ++rep.rank_k;
        }
    }
    arma::mat upper;
    const arma::mat r_sym = arma::symmatu(cm.R);
    if (!arma::chol(upper, r_sym)) {
        std::ostringstream os;
        os << "GBIC: R(beta) is not positive definite (rcond " << rep.condition_estimate << ")";
        throw NumericalFailure(os.str(), rep.condition_estimate);
    }
    rep.log_det_r = 2.0 * arma::accu(arma::log(upper.diag()));

    double quad = 0.0;
    for (arma::uword k = 0; k < fit.beta.beta.n_rows; ++k) {
        const arma::vec bk = fit.beta.beta.row(k).t();
        quad += arma::dot(bk, penalty.K * bk);
    }
    const double d = static_cast<double>(rep.rank_k);
    const double lambda_weight = form == GbicForm::Laplace ? d : width - d;
    const double scale_weight = form == GbicForm::Laplace ? width - d : d;
    rep.loglik_term = labeled_deviance(fit, design);
    rep.penalty_term = n1 * fit.lambda * quad;
    rep.value = rep.loglik_term + rep.penalty_term - classes * rep.log_det_k + rep.log_det_r -
                classes * lambda_weight * std::log(fit.lambda) -
                classes * scale_weight * std::log(2.0 * std::numbers::pi / n1);
    if (!std::isfinite(rep.value)) {
        throw NumericalFailure("GBIC: non-finite value", rep.condition_estimate);
    }
    return rep;
}

CriterionReport score_fit(Criterion kind, const SemiLogisticFit& fit,
                          const ClassifierDesign& design, const BlockPenalty& penalty, GbicForm form)
{
    return kind == Criterion::GIC ? gic_classifier(fit, design, penalty)
                                  : gbic_classifier(fit, design, penalty, form);
}

std::vector<LambdaPoint> scan_lambda(const ClassifierDesign& design, const BlockPenalty& penalty,
                                     const std::vector<double>& lambda_grid, const EmOptions& opts,
                                     GbicForm gbic_form)
{
    if (lambda_grid.empty()) {
        throw InvalidArgument("select_lambda: empty lambda grid");
    }
    std::vector<LambdaPoint> out;
    out.reserve(lambda_grid.size());
    for (double lambda : lambda_grid) {
        if (!(lambda > 0.0)) {
            throw InvalidArgument("select_lambda: grid values must be positive");
        }
        LambdaPoint p;
        p.lambda = lambda;
        try {
            p.fit = em_fit(design, lambda, penalty, opts);
        } catch (const std::runtime_error& e) {
            p.failure = e.what();
            out.push_back(std::move(p));
            continue;
        }
        for (Criterion kind : {Criterion::GIC, Criterion::GBIC}) {
            try {
                auto rep = score_fit(kind, *p.fit, design, penalty, gbic_form);
                (kind == Criterion::GIC ? p.gic : p.gbic) = rep;
            } catch (const std::runtime_error& e) {
                p.failure += (p.failure.empty() ? "" : "; ") + to_string(kind) + ": " + e.what();
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

LambdaSelection pick_lambda(const std::vector<LambdaPoint>& scan, Criterion kind)
{
    const LambdaPoint* best = nullptr;
    std::size_t best_index = 0;
    for (std::size_t i = 0; i < scan.size(); ++i) {
        const auto& rep = kind == Criterion::GIC ? scan[i].gic : scan[i].gbic;
        if (!rep) {
            continue;
        }
        const auto& best_rep = best ? (kind == Criterion::GIC ? best->gic : best->gbic) : rep;
        if (best == nullptr || rep->value < best_rep->value ||
            (rep->value == best_rep->value && scan[i].lambda > best->lambda)) {
            best = &scan[i];
            best_index = i;
        }
    }
    if (best == nullptr) {
        std::string msg = "select_lambda: every grid point failed";
        for (const auto& p : scan) {
            std::ostringstream os;
            os << "\n  lambda=" << p.lambda << ": " << p.failure;
            msg += os.str();
        }
        throw NumericalFailure(msg);
    }
    return LambdaSelection{*best->fit, kind == Criterion::GIC ? *best->gic : *best->gbic, best_index};
}

LambdaSelection select_lambda(const ClassifierDesign& design, const BlockPenalty& penalty,
                              const std::vector<double>& lambda_grid, Criterion kind,
                              const EmOptions& opts, GbicForm gbic_form)
{
    return pick_lambda(scan_lambda(design, penalty, lambda_grid, opts, gbic_form), kind);
}

std::vector<double> default_lambda_grid() { return log_grid(1e-8, 1.0, 25); }

} // namespace sfda
