#include "sfda/basis.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "sfda/errors.hpp"

namespace sfda {

bool GaussianBasis::same_parameters(const GaussianBasis& other) const
{
    return m == other.m && width == other.width && centers.n_elem == other.centers.n_elem &&
           arma::all(centers == other.centers);
}

KnotGrid place_knots(double t_min, double t_max, int m)
{
    if (m < 4) {
        throw InvalidArgument("place_knots: need m >= 4, got " + std::to_string(m));
    }
    if (!(t_min < t_max)) {
        throw InvalidArgument("place_knots: need t_min < t_max");
    }
    KnotGrid grid;
    grid.t_min = t_min;
    grid.t_max = t_max;
    grid.spacing = (t_max - t_min) / static_cast<double>(m - 3);
    grid.knots.resize(static_cast<std::size_t>(m) + 4);
    for (int j = 0; j < m + 4; ++j) {
        grid.knots[j] = t_min + static_cast<double>(j - 3) * grid.spacing;
    }
    grid.knots[3] = t_min;
    grid.knots[m] = t_max;
    return grid;
}

GaussianBasis build_basis(const KnotGrid& grid)
{
    const int m = grid.num_basis();
    if (m < 4) {
        throw InvalidArgument("build_basis: knot grid too short");
    }
    GaussianBasis basis;
    basis.m = m;
    basis.grid = grid;
    basis.centers.set_size(m);
    for (int k = 0; k < m; ++k) {
        basis.centers[k] = grid.knots[k + 2];
    }
    basis.width = 2.0 * grid.spacing / 3.0;
    return basis;
}

GaussianBasis make_basis(double t_min, double t_max, int m)
{
    return build_basis(place_knots(t_min, t_max, m));
}

arma::vec eval_basis(const GaussianBasis& basis, double t)
{
    const double scale = 1.0 / (2.0 * basis.width * basis.width);
    arma::vec out(basis.m);
    for (int k = 0; k < basis.m; ++k) {
        const double d = t - basis.centers[k];
        out[k] = std::exp(-d * d * scale);
    }
    return out;
}

arma::mat design_matrix(const GaussianBasis& basis, std::span<const double> times)
{
    if (times.empty()) {
        throw InvalidArgument("design_matrix: no time points");
    }
    const double scale = 1.0 / (2.0 * basis.width * basis.width);
    arma::mat phi(times.size(), basis.m);
    for (int k = 0; k < basis.m; ++k) {
        const double mu = basis.centers[k];
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double d = times[i] - mu;
            phi(i, k) = std::exp(-d * d * scale);
        }
    }
    return phi;
}

PenaltyMatrix second_difference_penalty(int m)
{
    if (m < 3) {
        throw InvalidArgument("second_difference_penalty: need m >= 3, got " + std::to_string(m));
    }
    arma::mat d2(m - 2, m, arma::fill::zeros);
    for (int r = 0; r < m - 2; ++r) {
        d2(r, r) = 1.0;
        d2(r, r + 1) = -2.0;
        d2(r, r + 2) = 1.0;
    }
    return PenaltyMatrix{2, d2.t() * d2};
}

CrossProductMatrix cross_product_matrix(const GaussianBasis& basis)
{
    const double eta2 = basis.width * basis.width;
    const double diag = std::sqrt(std::numbers::pi * eta2);
    arma::mat j(basis.m, basis.m);
    for (int a = 0; a < basis.m; ++a) {
        for (int b = 0; b < basis.m; ++b) {
            const double d = basis.centers[a] - basis.centers[b];
            j(a, b) = diag * std::exp(-d * d / (4.0 * eta2));
        }
    }
    return CrossProductMatrix{j};
}

} // namespace sfda
