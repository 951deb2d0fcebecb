#pragma once

// Gaussian radial basis systems on equally spaced knots, plus the matrices
// that depend only on the basis: design matrix, second-difference roughness
// penalty and the cross-product (inner product) matrix J.

#include <armadillo>
#include <span>
#include <vector>

namespace sfda {

struct KnotGrid {
    std::vector<double> knots;  // m + 4 values, 0-based
    double t_min = 0.0;
    double t_max = 0.0;
    double spacing = 0.0;

    int num_basis() const { return static_cast<int>(knots.size()) - 4; }
};

struct GaussianBasis {
    int m = 0;
    arma::vec centers;
    double width = 0.0;
    KnotGrid grid;

    // Same m, centers and width, bit for bit.
    bool same_parameters(const GaussianBasis& other) const;
};

struct PenaltyMatrix {
    int order = 2;
    arma::mat matrix;
};

struct CrossProductMatrix {
    arma::mat matrix;
};

/// Equally spaced knots with knots[3] == t_min and knots[m] == t_max.
/// Throws InvalidArgument when m < 4 or t_min >= t_max.
KnotGrid place_knots(double t_min, double t_max, int m);

/// Centers at knots[2..m+1], shared width 2 * spacing / 3.
GaussianBasis build_basis(const KnotGrid& grid);

/// Convenience: place_knots followed by build_basis.
GaussianBasis make_basis(double t_min, double t_max, int m);

arma::vec eval_basis(const GaussianBasis& basis, double t);

/// N x m matrix whose row i is eval_basis(basis, times[i]).
arma::mat design_matrix(const GaussianBasis& basis, std::span<const double> times);

/// D2' D2 where D2 is the (m-2) x m stencil (1, -2, 1). Requires m >= 3.
PenaltyMatrix second_difference_penalty(int m);

/// Closed-form integral over the real line of phi_i(t) phi_j(t).
CrossProductMatrix cross_product_matrix(const GaussianBasis& basis);

} // namespace sfda
