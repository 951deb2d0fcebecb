#pragma once

// Penalized Gaussian-basis smoothing of discretely observed curves and the
// GIC-driven choice of basis size and smoothing parameter.

#include <armadillo>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sfda/basis.hpp"

namespace sfda {

struct RawCurve {
    std::string id;
    std::vector<double> times;
    std::vector<double> values;
};

using BasisPtr = std::shared_ptr<const GaussianBasis>;

struct SmoothFit {
    arma::vec coefficients;
    double noise_variance = 0.0;
    double zeta = 0.0;
    BasisPtr basis;
    double gic = std::numeric_limits<double>::quiet_NaN();
    int fixed_point_iters = 0;
};

/// (m+1) x (m+1) influence matrices of the smoothing GIC; the last row and
/// column belong to the noise variance.
struct SmoothingGicTerms {
    arma::mat Q;
    arma::mat R;
    double trace = 0.0;  // tr(Q R^-1)
    double rcond = 0.0;
    double value = 0.0;
};

inline constexpr double kNoiseVarianceFloor = 1e-12;

struct FixedPointOptions {
    int max_iter = 100;
    double rel_tol = 1e-10;
};

// Precomputes everything about one curve against one basis that does not
// depend on the smoothing parameter.
class CurveSmoother {
public:
    CurveSmoother(const RawCurve& curve, BasisPtr basis);

    SmoothFit fit(double zeta, const FixedPointOptions& opts = {}) const;
    SmoothingGicTerms gic_terms(const SmoothFit& fit) const;

    const arma::mat& design() const { return phi_; }
    const arma::mat& penalty() const { return penalty_; }
    const arma::vec& values() const { return x_; }

private:
    arma::vec solve_coefficients(double ridge) const;

    BasisPtr basis_;
    arma::vec x_;
    arma::mat phi_;
    arma::mat gram_;
    arma::vec phi_t_x_;
    arma::mat penalty_;
};

SmoothFit fit_penalized(const RawCurve& curve, BasisPtr basis, double zeta,
                        const FixedPointOptions& opts = {});

/// Smoothing GIC of a fit produced from `curve`.
double gic_smoothing(const SmoothFit& fit, const RawCurve& curve);

/// Q and R of the smoothing GIC, for diagnostics and tests.
SmoothingGicTerms smoothing_gic_terms(const SmoothFit& fit, const RawCurve& curve);

/// Minimizes the smoothing GIC over m_grid x zeta_grid for one curve. Each m
/// gets a basis placed on the curve's own time range. Ties go to the smaller
/// m, then the smaller zeta.
SmoothFit select_smoothing(const RawCurve& curve, const std::vector<int>& m_grid,
                           const std::vector<double>& zeta_grid);

struct FunctionalDataset {
    BasisPtr basis;
    arma::mat coefficients;                 // n x m, row alpha = w_alpha
    std::vector<std::optional<int>> labels; // 1..L, nullopt = unlabeled
    arma::vec noise_variances;
    arma::vec zetas;
    std::vector<std::string> curve_ids;
    std::vector<int> per_curve_best_m;      // diagnostics only

    std::size_t size() const { return curve_ids.size(); }
};

/// Smooths every curve against a basis built on the pooled time range. The
/// common m minimizes the summed per-curve optimal GIC; each curve keeps its
/// own GIC-optimal zeta at that m. `labels` may be empty (all unlabeled).
FunctionalDataset functionalize(const std::vector<RawCurve>& curves,
                                const std::vector<std::optional<int>>& labels,
                                const std::vector<int>& m_grid,
                                const std::vector<double>& zeta_grid);

/// Smooths curves against a fixed basis, choosing zeta per curve by GIC.
FunctionalDataset smooth_with_basis(const std::vector<RawCurve>& curves,
                                    const std::vector<std::optional<int>>& labels,
                                    BasisPtr basis, const std::vector<double>& zeta_grid);

std::vector<int> default_m_grid();
std::vector<double> default_zeta_grid();

/// `count` log-spaced points from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int count);

} // namespace sfda
