#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "sfda/errors.hpp"
#include "sfda/selection.hpp"

using namespace sfda;

namespace {

SemiLogisticFit fit_with(const arma::mat& beta, double lambda)
{
    SemiLogisticFit f;
    f.beta = CoefficientBlock{beta};
    f.lambda = lambda;
    return f;
}

// Labeled log-likelihood of row `row` minus its 1/n1 share of the penalty.
double row_objective(const ClassifierDesign& d, arma::uword row, const arma::mat& beta,
                     double lambda, const arma::mat& K)
{
    double quad = 0.0;
    for (arma::uword k = 0; k < beta.n_rows; ++k) {
        quad += arma::as_scalar(beta.row(k) * K * beta.row(k).t());
    }
    return oracle::loop_row_loglik(d, row, beta) - 0.5 * lambda * quad;
}

} // namespace

TEST_CASE("criterion inputs collapse to single blocks for two classes")
{
    const auto d = oracle::random_design(12, 9, 3, 2, 4);
    const auto pen = BlockPenalty::identity(3);
    const arma::mat beta{{0.2, -0.5, 0.3, 0.1}};
    const auto cm = criterion_matrices(fit_with(beta, 0.01), d, pen);
    const auto& in = cm.inputs;
    const arma::mat Z = d.Z.rows(0, 8);
    const arma::vec pi = posteriors(Z, CoefficientBlock{beta}).col(0);
    CHECK(arma::approx_equal(in.A, Z, "absdiff", 0.0));
    CHECK(arma::approx_equal(in.Z, Z, "absdiff", 0.0));
    CHECK(arma::approx_equal(in.B, d.Y.col(0) * arma::ones(1, 4), "absdiff", 0.0));
    CHECK(arma::approx_equal(in.C, pi * arma::ones(1, 4), "absdiff", 1e-15));
    CHECK(arma::approx_equal(in.D, Z.t() * arma::diagmat(pi) * Z, "reldiff", 1e-12));
    CHECK(arma::approx_equal(in.E, pen.K, "absdiff", 0.0));

    // Hadamard identity
    const arma::mat CA = in.C % in.A;
    CHECK(arma::approx_equal(CA.t() * CA, Z.t() * arma::diagmat(arma::square(pi)) * Z, "reldiff", 1e-12));
}

TEST_CASE("criterion matrices for three classes have the tiled layout")
{
    const auto d = oracle::random_design(20, 14, 4, 3, 8);
    const auto pen = BlockPenalty::identity(4);
    const auto cm = criterion_matrices(fit_with(arma::zeros(2, 5), 0.1), d, pen);
    CHECK(cm.inputs.A.n_rows == 14);
    CHECK(cm.inputs.A.n_cols == 10);
    CHECK(cm.Q.n_rows == 10);
    CHECK(cm.R.n_cols == 10);
    CHECK(arma::approx_equal(cm.inputs.E.submat(5, 5, 9, 9), pen.K, "absdiff", 0.0));
    CHECK(arma::all(arma::vectorise(cm.inputs.E.submat(0, 5, 4, 9)) == 0.0));
}

TEST_CASE("zero coefficients drop the correction term from Q")
{
    const auto d = oracle::random_design(15, 15, 3, 3, 6);
    const auto pen = BlockPenalty::identity(3);
    const auto cm = criterion_matrices(fit_with(arma::zeros(2, 4), 0.5), d, pen);
    const auto& in = cm.inputs;
    CHECK(arma::abs(in.C - 1.0 / 3.0).max() <= 1e-15);
    const arma::mat G = (in.B - in.C) % in.A;
    CHECK(arma::approx_equal(cm.Q, G.t() * G / 15.0, "reldiff", 1e-13));
}

TEST_CASE("R is the finite-difference negative Hessian of the labeled objective")
{
    const auto d = oracle::random_design(8, 5, 3, 3, 77);
    const auto pen = BlockPenalty::identity(3);
    const double lambda = 0.05;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01(0.0, 0.5);
    arma::mat beta(2, 4);
    for (auto& x : beta) {
        x = n01(rng);
    }
    const auto cm = criterion_matrices(fit_with(beta, lambda), d, pen);
    oracle::Objective f = [&](const arma::vec& th) {
        const arma::mat b = CoefficientBlock::from_stacked(th, 2).beta;
        double s = 0.0;
        for (arma::uword a = 0; a < d.n_labeled; ++a) {
            s += row_objective(d, a, b, lambda, pen.K);
        }
        return s / static_cast<double>(d.n_labeled);
    };
    const arma::mat H = oracle::fd_hessian(f, CoefficientBlock{beta}.stacked(), 1e-4);
    const double scale = arma::abs(H).max();
    CHECK(oracle::max_rel_diff(cm.R, -H, 1e-3 * scale) <= 1e-5);
    CHECK(cm.R.is_symmetric(1e-12));
}

TEST_CASE("Q and R match finite-difference assembly at a fitted optimum")
{
    struct Case {
        arma::uword n1;
        arma::uword m;
        int L;
        double lambda;
    };
    for (const auto& c : {Case{30, 4, 2, 1e-3}, Case{24, 3, 3, 1e-2}, Case{30, 5, 3, 1e-3}}) {
        const auto d = oracle::random_design(c.n1, c.n1, c.m, c.L, 100 + c.m);
        const auto pen = BlockPenalty::identity(c.m);
        const auto fit = em_fit(d, c.lambda, pen);
        const auto cm = criterion_matrices(fit, d, pen);
        const arma::vec theta = fit.beta.stacked();
        const arma::uword dim = theta.n_elem;
        arma::mat Q(dim, dim, arma::fill::zeros);
        arma::mat H(dim, dim, arma::fill::zeros);
        for (arma::uword a = 0; a < c.n1; ++a) {
            oracle::Objective fa = [&](const arma::vec& th) {
                return row_objective(d, a, CoefficientBlock::from_stacked(th, c.L - 1).beta, c.lambda,
                                     pen.K);
            };
            const arma::vec psi = oracle::fd_gradient(fa, theta, 1e-6);
            Q += psi * psi.t();
            H += oracle::fd_hessian(fa, theta, 1e-4);
        }
        Q /= static_cast<double>(c.n1);
        const arma::mat R = -H / static_cast<double>(c.n1);
        CHECK_MESSAGE(oracle::max_rel_diff(cm.Q, Q, 1e-3 * arma::abs(Q).max()) <= 1e-5,
                      "Q, L=" << c.L << " m=" << c.m);
        CHECK_MESSAGE(oracle::max_rel_diff(cm.R, R, 1e-3 * arma::abs(R).max()) <= 1e-5,
                      "R, L=" << c.L << " m=" << c.m);
        CHECK(arma::eig_sym(arma::symmatu(cm.R)).min() > 0.0);
    }
}

TEST_CASE("criteria agree with a loop-level reimplementation")
{
    struct Case {
        arma::uword n;
        arma::uword n1;
        arma::uword m;
        int L;
        double lambda;
    };
    for (const auto& c : {Case{30, 30, 4, 2, 1e-3}, Case{50, 30, 4, 2, 1e-3}, Case{40, 25, 3, 3, 1e-2},
                          Case{30, 30, 5, 3, 1e-4}}) {
        const auto d = oracle::random_design(c.n, c.n1, c.m, c.L, 500 + c.n);
        const auto pen = BlockPenalty::identity(c.m);
        const auto fit = em_fit(d, c.lambda, pen);
        const auto loop = oracle::loop_criteria(d, fit.beta.beta, c.lambda, pen.K);
        const auto gic = gic_classifier(fit, d, pen);
        const auto laplace = gbic_classifier(fit, d, pen, GbicForm::Laplace);
        const auto printed = gbic_classifier(fit, d, pen, GbicForm::Printed);
        CHECK(std::abs(gic.value - loop.gic) <= 1e-8 * std::abs(loop.gic));
        CHECK(std::abs(laplace.value - loop.gbic_laplace) <= 1e-8 * std::abs(loop.gbic_laplace));
        CHECK(std::abs(printed.value - loop.gbic_printed) <= 1e-8 * std::abs(loop.gbic_printed));
        CHECK(gic.kind == Criterion::GIC);
        CHECK(laplace.kind == Criterion::GBIC);
        CHECK(gic.lambda == c.lambda);
        CHECK(std::isfinite(gic.value));

        // only the labeled rows enter
        const auto view = d.labeled_view();
        CHECK(gic_classifier(fit, view, pen).value == gic.value);
        CHECK(gbic_classifier(fit, view, pen).value == laplace.value);
    }
}

TEST_CASE("identity penalty GBIC terms")
{
    const auto d = oracle::random_design(30, 30, 4, 2, 71);
    const auto pen = BlockPenalty::identity(4);
    const double lambda = 1e-3;
    const auto fit = em_fit(d, lambda, pen);
    const auto printed = gbic_classifier(fit, d, pen, GbicForm::Printed);
    const auto laplace = gbic_classifier(fit, d, pen, GbicForm::Laplace);
    CHECK(printed.log_det_k == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(printed.log_det_k) <= 1e-12);
    CHECK(printed.rank_k == 4);

    const double n1 = 30.0;
    const double common = printed.loglik_term + printed.penalty_term + printed.log_det_r;
    const double log2pi_n = std::log(2.0 * std::numbers::pi / n1);
    // printed form: lambda enters once, the 2*pi/n1 term m times
    CHECK(printed.value == doctest::Approx(common - 1.0 * std::log(lambda) - 4.0 * log2pi_n).epsilon(1e-12));
    CHECK(laplace.value == doctest::Approx(common - 4.0 * std::log(lambda) - 1.0 * log2pi_n).epsilon(1e-12));
}

TEST_CASE("GIC refuses a singular R")
{
    const auto d = oracle::random_design(3, 3, 5, 2, 1);
    const auto pen = BlockPenalty::identity(5);
    CHECK_THROWS_AS(gic_classifier(fit_with(arma::zeros(1, 6), 0.0), d, pen), NumericalFailure);
    CHECK_THROWS_AS(gbic_classifier(fit_with(arma::zeros(1, 6), 0.0), d, pen), InvalidArgument);
}

TEST_CASE("lambda selection")
{
    const auto d = oracle::random_design(60, 30, 4, 2, 91);
    const auto pen = BlockPenalty::identity(4);
    const auto single = select_lambda(d, pen, {1e-2}, Criterion::GIC);
    CHECK(single.fit.lambda == 1e-2);
    CHECK(single.grid_index == 0);
    const auto direct = em_fit(d, 1e-2, pen);
    CHECK(arma::approx_equal(single.fit.beta.beta, direct.beta.beta, "absdiff", 0.0));

    const auto grid = log_grid(1e-6, 1.0, 7);
    for (Criterion kind : {Criterion::GIC, Criterion::GBIC}) {
        const auto sel = select_lambda(d, pen, grid, kind);
        double best = std::numeric_limits<double>::infinity();
        for (double lam : grid) {
            best = std::min(best, score_fit(kind, em_fit(d, lam, pen), d, pen).value);
        }
        CHECK(sel.report.value == best);
        CHECK(sel.report.kind == kind);
    }

    // ties go to the larger lambda
    std::vector<LambdaPoint> scan(3);
    for (int i = 0; i < 3; ++i) {
        scan[i].lambda = std::pow(10.0, -i);
        scan[i].fit = fit_with(arma::zeros(1, 5), scan[i].lambda);
        CriterionReport r;
        r.value = i == 1 ? 5.0 : 3.0;
        r.lambda = scan[i].lambda;
        scan[i].gic = r;
        scan[i].gbic = r;
    }
    CHECK(pick_lambda(scan, Criterion::GIC).report.lambda == 1.0);

    std::vector<LambdaPoint> failed(2);
    failed[0].failure = "boom";
    failed[1].failure = "bang";
    CHECK_THROWS_AS(pick_lambda(failed, Criterion::GBIC), NumericalFailure);
}

TEST_CASE("criterion names")
{
    CHECK(parse_criterion("gic") == Criterion::GIC);
    CHECK(parse_criterion("gbic") == Criterion::GBIC);
    CHECK(to_string(Criterion::GBIC) == "gbic");
    CHECK_THROWS_AS(parse_criterion("aic"), InvalidArgument);
    CHECK(parse_gbic_form("printed") == GbicForm::Printed);
    CHECK(to_string(GbicForm::Laplace) == "laplace");
    CHECK_THROWS_AS(parse_gbic_form("other"), InvalidArgument);

    const auto g = default_lambda_grid();
    CHECK(g.size() == 25);
    CHECK(g.front() == 1e-8);
    CHECK(g.back() == 1.0);
}
