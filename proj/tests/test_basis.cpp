#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "sfda/basis.hpp"
#include "sfda/errors.hpp"

using namespace sfda;

TEST_CASE("knots pin the data range at positions 3 and m")
{
    const auto g = place_knots(-2.0, 2.0, 7);
    REQUIRE(g.knots.size() == 11);
    CHECK(g.spacing == doctest::Approx(1.0));
    CHECK(g.knots.front() == doctest::Approx(-5.0));
    CHECK(g.knots.back() == doctest::Approx(5.0));
    CHECK(g.knots[3] == -2.0);
    CHECK(g.knots[7] == 2.0);
    CHECK(g.num_basis() == 7);

    CHECK_THROWS_AS(place_knots(0.0, 1.0, 3), InvalidArgument);
    CHECK_THROWS_AS(place_knots(1.0, 1.0, 6), InvalidArgument);
}

TEST_CASE("centers and width follow the knot rule")
{
    const auto b = make_basis(0.0, 1.0, 5);
    const std::vector<double> expected{-0.5, 0.0, 0.5, 1.0, 1.5};
    for (int k = 0; k < 5; ++k) {
        CHECK(b.centers(k) == doctest::Approx(expected[k]).epsilon(1e-14));
    }
    CHECK(b.width == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

    const auto b2 = make_basis(0.0, 2.0, 8);
    CHECK(b2.grid.spacing == doctest::Approx(0.4));
    CHECK(b2.width == doctest::Approx(0.8 / 3.0));
    CHECK(b2.width == 2.0 * b2.grid.spacing / 3.0);

    CHECK(make_basis(0.0, 2.0, 8).same_parameters(b2));
    CHECK_FALSE(make_basis(0.0, 2.0, 9).same_parameters(b2));
}

TEST_CASE("basis evaluation")
{
    const auto b = make_basis(0.0, 1.0, 5);
    for (int k = 0; k < 5; ++k) {
        CHECK(eval_basis(b, b.centers(k))(k) == 1.0);
        CHECK(eval_basis(b, b.centers(k) + b.width)(k) == doctest::Approx(std::exp(-0.5)));
    }
    const arma::vec v = eval_basis(b, 0.25);
    for (int k = 0; k < 5; ++k) {
        const double d = 0.25 - b.centers(k);
        CHECK(v(k) == doctest::Approx(std::exp(-d * d / (2.0 * b.width * b.width))));
        CHECK(v(k) > 0.0);
        CHECK(v(k) <= 1.0);
    }
    CHECK(v(1) == doctest::Approx(std::exp(-0.25 * 0.25 * 9.0 / 2.0)));
}

TEST_CASE("design matrix rows are basis evaluations")
{
    const auto b = make_basis(-1.0, 3.0, 6);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 3.0);
    std::vector<double> t(17);
    for (auto& x : t) {
        x = u(rng);
    }
    const arma::mat phi = design_matrix(b, t);
    REQUIRE(phi.n_rows == 17);
    REQUIRE(phi.n_cols == 6);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(arma::approx_equal(phi.row(i).t(), eval_basis(b, t[i]), "absdiff", 0.0));
    }
    const std::vector<double> centers(b.centers.begin(), b.centers.end());
    const arma::mat at_centers = design_matrix(b, centers);
    CHECK(arma::all(at_centers.diag() == 1.0));
    CHECK_THROWS_AS(design_matrix(b, std::vector<double>{}), InvalidArgument);
}

TEST_CASE("second difference penalty")
{
    const arma::mat k3 = second_difference_penalty(3).matrix;
    const arma::mat expected{{1, -2, 1}, {-2, 4, -2}, {1, -2, 1}};
    CHECK(arma::approx_equal(k3, expected, "absdiff", 0.0));
    CHECK_THROWS_AS(second_difference_penalty(2), InvalidArgument);

    for (int m = 3; m <= 12; ++m) {
        const arma::mat K = second_difference_penalty(m).matrix;
        const arma::vec ones(m, arma::fill::ones);
        const arma::vec ramp = arma::regspace(1.0, static_cast<double>(m));
        CHECK(arma::abs(K * ones).max() <= 1e-12);
        CHECK(arma::abs(K * ramp).max() <= 1e-12);
        CHECK(arma::rank(K) == static_cast<arma::uword>(m - 2));
    }

    std::mt19937_64 rng(11);
    std::normal_distribution<double> n01;
    const arma::mat K = second_difference_penalty(8).matrix;
    for (int rep = 0; rep < 20; ++rep) {
        arma::vec w(8);
        for (auto& x : w) {
            x = n01(rng);
        }
        double direct = 0.0;
        for (int i = 0; i + 2 < 8; ++i) {
            const double d2 = w(i) - 2.0 * w(i + 1) + w(i + 2);
            direct += d2 * d2;
        }
        CHECK(arma::as_scalar(w.t() * K * w) == doctest::Approx(direct).epsilon(1e-12));
        CHECK(direct >= 0.0);
    }
}

TEST_CASE("cross product matrix closed form")
{
    const auto b = make_basis(0.0, 1.0, 5);
    const arma::mat J = cross_product_matrix(b).matrix;
    const double eta = b.width;
    for (int i = 0; i < 5; ++i) {
        CHECK(J(i, i) == doctest::Approx(std::sqrt(std::numbers::pi * eta * eta)));
    }
    // eta = 1/3 and adjacent centers are 0.5 apart
    CHECK(J(0, 1) == doctest::Approx(std::sqrt(std::numbers::pi / 9.0) * std::exp(-0.5625)));
    CHECK(J.is_symmetric());
}

TEST_CASE("cross product matrix agrees with quadrature")
{
    for (int m = 4; m <= 20; ++m) {
        const auto b = make_basis(-1.5, 2.5, m);
        const arma::mat J = cross_product_matrix(b).matrix;
        double worst = 0.0;
        for (int i = 0; i < m; ++i) {
            for (int j = i; j < m; ++j) {
                const double q = oracle::gaussian_product_integral(b.centers(i), b.centers(j), b.width);
                worst = std::max(worst, std::abs(J(i, j) - q) / q);
            }
        }
        CHECK_MESSAGE(worst <= 1e-6, "m=" << m << " worst relative error " << worst);
    }
}

TEST_CASE("basis construction is bitwise deterministic")
{
    const auto a = make_basis(0.3, 7.1, 11);
    const auto b = make_basis(0.3, 7.1, 11);
    CHECK(a.same_parameters(b));
    CHECK(a.grid.knots == b.grid.knots);
}
