#include "sfda/smoother.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sfda/errors.hpp"

namespace sfda {

namespace {

constexpr double kMinRcond = 1e-14;

void check_curve(const RawCurve& curve)
{
    if (curve.times.size() != curve.values.size()) {
        throw InvalidArgument("curve " + curve.id + ": times and values differ in length");
    }
    if (curve.times.empty()) {
        throw InvalidArgument("curve " + curve.id + ": no observations");
    }
}

std::pair<double, double> time_range(const std::vector<RawCurve>& curves)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& c : curves) {
        for (double t : c.times) {
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
    }
    return {lo, hi};
}

struct Candidate {
    SmoothFit fit;
    bool ok = false;
};

// GIC-optimal zeta for one curve at one basis; ties go to the smaller zeta.
Candidate best_zeta(const RawCurve& curve, const BasisPtr& basis,
                    const std::vector<double>& zeta_grid, std::vector<std::string>* failures)
{
    Candidate best;
    const CurveSmoother smoother(curve, basis);
    for (double zeta : zeta_grid) {
        try {
            SmoothFit fit = smoother.fit(zeta);
            fit.gic = smoother.gic_terms(fit).value;
            if (!std::isfinite(fit.gic)) {
                throw NumericalFailure("non-finite GIC");
            }
            if (!best.ok || fit.gic < best.fit.gic) {
                best.fit = std::move(fit);
                best.ok = true;
            }
        } catch (const std::runtime_error& e) {
            if (failures != nullptr) {
                std::ostringstream os;
                os << "curve " << curve.id << " m=" << basis->m << " zeta=" << zeta << ": "
                   << e.what();
                failures->push_back(os.str());
            }
        }
    }
    return best;
}

std::vector<int> sorted_unique(std::vector<int> v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::vector<double> sorted_unique(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

} // namespace

CurveSmoother::CurveSmoother(const RawCurve& curve, BasisPtr basis) : basis_(std::move(basis))
{
    check_curve(curve);
    if (curve.times.size() <= static_cast<std::size_t>(basis_->m)) {
        std::ostringstream os;
        os << "curve " << curve.id << ": need more observations (" << curve.times.size()
           << ") than basis functions (" << basis_->m << ")";
        throw InvalidArgument(os.str());
    }
    x_ = arma::vec(curve.values);
    phi_ = design_matrix(*basis_, curve.times);
    gram_ = phi_.t() * phi_;
    phi_t_x_ = phi_.t() * x_;
    penalty_ = second_difference_penalty(basis_->m).matrix;
}

arma::vec CurveSmoother::solve_coefficients(double ridge) const
{
    arma::mat system = gram_ + ridge * penalty_;
    arma::mat upper;
    if (!arma::chol(upper, system)) {
        const double bump = 1e-10 * arma::max(system.diag());
        system.diag() += bump;
        if (!arma::chol(upper, system)) {
            throw NumericalFailure("smoothing system is singular after ridge augmentation",
                                   arma::rcond(system));
        }
    }
    const arma::vec y = arma::solve(arma::trimatl(upper.t()), phi_t_x_);
    return arma::solve(arma::trimatu(upper), y);
}

SmoothFit CurveSmoother::fit(double zeta, const FixedPointOptions& opts) const
{
    if (!(zeta >= 0.0)) {
        throw InvalidArgument("fit_penalized: zeta must be non-negative");
    }
    const double n = static_cast<double>(x_.n_elem);
    auto noise = [&](const arma::vec& w) {
        const arma::vec r = x_ - phi_ * w;
        return std::max(arma::dot(r, r) / n, kNoiseVarianceFloor);
    };

    // start from a ridge-stabilized least-squares residual variance
    arma::mat start_system = gram_;
    start_system.diag() += 1e-8;
    arma::vec w;
    if (!arma::solve(w, start_system, phi_t_x_, arma::solve_opts::likely_sympd)) {
        throw NumericalFailure("least-squares start failed");
    }
    double sigma2 = noise(w);

    SmoothFit out;
    out.basis = basis_;
    out.zeta = zeta;
    for (int it = 1; it <= opts.max_iter; ++it) {
        const arma::vec w_next = solve_coefficients(n * zeta * sigma2);
        const double sigma2_next = noise(w_next);
        const double dw = arma::norm(w_next - w, "inf") / std::max(arma::norm(w_next, "inf"), 1e-300);
        const double ds = std::abs(sigma2_next - sigma2) / sigma2_next;
        w = w_next;
        sigma2 = sigma2_next;
        if (it > 1 && dw <= opts.rel_tol && ds <= opts.rel_tol) {
            out.coefficients = w;
            out.noise_variance = sigma2;
            out.fixed_point_iters = it;
            return out;
        }
        if (zeta == 0.0) {
            // coefficients no longer depend on sigma2
            out.coefficients = w;
            out.noise_variance = sigma2;
            out.fixed_point_iters = it;
            return out;
        }
    }
    std::vector<double> last(w.begin(), w.end());
    last.push_back(sigma2);
    throw NonConvergence("fit_penalized: fixed point did not converge", std::move(last),
                         opts.max_iter);
}

SmoothingGicTerms CurveSmoother::gic_terms(const SmoothFit& fit) const
{
    const arma::uword m = phi_.n_cols;
    const double n = static_cast<double>(x_.n_elem);
    const double s2 = fit.noise_variance;
    const double s4 = s2 * s2;
    const double s6 = s4 * s2;
    const arma::vec e = x_ - phi_ * fit.coefficients;
    const arma::vec e2 = e % e;
    const arma::vec e3 = e2 % e;

    const arma::vec phi_e = phi_.t() * e;    // Phi' Lambda 1
    const arma::vec phi_e3 = phi_.t() * e3;  // Phi' Lambda^3 1
    const arma::mat phi_scaled = phi_.each_col() % e;
    const arma::vec k_w = penalty_ * fit.coefficients;

    arma::mat q(m + 1, m + 1);
    q.submat(0, 0, m - 1, m - 1) = phi_scaled.t() * phi_scaled / s2 - fit.zeta * k_w * phi_e.t();
    const arma::vec cross = phi_e3 / (2.0 * s4) - phi_e / (2.0 * s2);
    q.submat(0, m, m - 1, m) = cross;
    q.submat(m, 0, m, m - 1) = cross.t();
    q(m, m) = arma::dot(e2, e2) / (4.0 * s6) - n / (4.0 * s2);
    q /= n * s2;

    arma::mat r(m + 1, m + 1);
    r.submat(0, 0, m - 1, m - 1) = gram_ + n * fit.zeta * s2 * penalty_;
    r.submat(0, m, m - 1, m) = phi_e / s2;
    r.submat(m, 0, m, m - 1) = phi_e.t() / s2;
    r(m, m) = n / (2.0 * s2);
    r /= n * s2;

    SmoothingGicTerms out;
    out.rcond = arma::rcond(r);
    if (!(out.rcond >= kMinRcond)) {
        std::ostringstream os;
        os << "smoothing GIC: R is numerically singular (rcond " << out.rcond << ")";
        throw NumericalFailure(os.str(), out.rcond);
    }
    out.trace = arma::trace(arma::solve(r, q));
    out.value = n * std::log(2.0 * std::numbers::pi * s2) + n + 2.0 * out.trace;
    out.Q = std::move(q);
    out.R = std::move(r);
    return out;
}

SmoothFit fit_penalized(const RawCurve& curve, BasisPtr basis, double zeta,
                        const FixedPointOptions& opts)
{
    return CurveSmoother(curve, std::move(basis)).fit(zeta, opts);
}

double gic_smoothing(const SmoothFit& fit, const RawCurve& curve)
{
    return smoothing_gic_terms(fit, curve).value;
}

SmoothingGicTerms smoothing_gic_terms(const SmoothFit& fit, const RawCurve& curve)
{
    return CurveSmoother(curve, fit.basis).gic_terms(fit);
}

SmoothFit select_smoothing(const RawCurve& curve, const std::vector<int>& m_grid,
                           const std::vector<double>& zeta_grid)
{
    check_curve(curve);
    if (m_grid.empty() || zeta_grid.empty()) {
        throw InvalidArgument("select_smoothing: empty grid");
    }
    const auto [lo, hi] = time_range({curve});
    std::vector<std::string> failures;
    Candidate best;
    for (int m : sorted_unique(m_grid)) {
        try {
            auto basis = std::make_shared<const GaussianBasis>(make_basis(lo, hi, m));
            Candidate c = best_zeta(curve, basis, sorted_unique(zeta_grid), &failures);
            if (c.ok && (!best.ok || c.fit.gic < best.fit.gic)) {
                best = std::move(c);
            }
        } catch (const InvalidArgument& e) {
            failures.push_back("m=" + std::to_string(m) + ": " + e.what());
        }
    }
    if (!best.ok) {
        std::string msg = "select_smoothing: every grid point failed for curve " + curve.id;
        for (const auto& f : failures) {
            msg += "\n  " + f;
        }
        throw NumericalFailure(msg);
    }
    return best.fit;
}

namespace {

FunctionalDataset assemble(const std::vector<RawCurve>& curves,
                           const std::vector<std::optional<int>>& labels, const BasisPtr& basis,
                           std::vector<SmoothFit>& fits)
{
    FunctionalDataset out;
    out.basis = basis;
    out.coefficients.set_size(curves.size(), basis->m);
    out.noise_variances.set_size(curves.size());
    out.zetas.set_size(curves.size());
    out.labels = labels.empty() ? std::vector<std::optional<int>>(curves.size()) : labels;
    for (std::size_t a = 0; a < curves.size(); ++a) {
        out.coefficients.row(a) = fits[a].coefficients.t();
        out.noise_variances[a] = fits[a].noise_variance;
        out.zetas[a] = fits[a].zeta;
        out.curve_ids.push_back(curves[a].id);
    }
    return out;
}

void check_labels(const std::vector<RawCurve>& curves, const std::vector<std::optional<int>>& labels)
{
    if (!labels.empty() && labels.size() != curves.size()) {
        throw InvalidArgument("labels and curves differ in count");
    }
    for (const auto& l : labels) {
        if (l && *l < 1) {
            throw InvalidArgument("class labels must be positive integers");
        }
    }
}

} // namespace

FunctionalDataset functionalize(const std::vector<RawCurve>& curves,
                                const std::vector<std::optional<int>>& labels,
                                const std::vector<int>& m_grid,
                                const std::vector<double>& zeta_grid)
{
    if (curves.empty()) {
        throw InvalidArgument("functionalize: no curves");
    }
    if (m_grid.empty() || zeta_grid.empty()) {
        throw InvalidArgument("functionalize: empty grid");
    }
    check_labels(curves, labels);
    for (const auto& c : curves) {
        check_curve(c);
    }
    const auto [lo, hi] = time_range(curves);
    const std::vector<double> zetas = sorted_unique(zeta_grid);

    std::vector<std::string> failures;
    BasisPtr best_basis;
    std::vector<SmoothFit> best_fits;
    double best_total = std::numeric_limits<double>::infinity();
    std::vector<double> best_gic_per_curve(curves.size(), std::numeric_limits<double>::infinity());
    std::vector<int> best_m_per_curve(curves.size(), 0);

    for (int m : sorted_unique(m_grid)) {
        BasisPtr basis;
        try {
            basis = std::make_shared<const GaussianBasis>(make_basis(lo, hi, m));
        } catch (const InvalidArgument& e) {
            failures.push_back("m=" + std::to_string(m) + ": " + e.what());
            continue;
        }
        std::vector<SmoothFit> fits;
        fits.reserve(curves.size());
        double total = 0.0;
        bool feasible = true;
        for (std::size_t a = 0; a < curves.size() && feasible; ++a) {
            Candidate c;
            try {
                c = best_zeta(curves[a], basis, zetas, nullptr);
            } catch (const InvalidArgument& e) {
                failures.push_back(std::string("m=") + std::to_string(m) + ": " + e.what());
            }
            if (!c.ok) {
                failures.push_back("m=" + std::to_string(m) + ": no usable zeta for curve " +
                                   curves[a].id);
                feasible = false;
                break;
            }
            if (c.fit.gic < best_gic_per_curve[a]) {
                best_gic_per_curve[a] = c.fit.gic;
                best_m_per_curve[a] = m;
            }
            total += c.fit.gic;
            fits.push_back(std::move(c.fit));
        }
        if (feasible && total < best_total) {
            best_total = total;
            best_basis = basis;
            best_fits = std::move(fits);
        }
    }
    if (!best_basis) {
        std::string msg = "functionalize: no basis size worked for every curve";
        for (const auto& f : failures) {
            msg += "\n  " + f;
        }
        throw NumericalFailure(msg);
    }
    FunctionalDataset out = assemble(curves, labels, best_basis, best_fits);
    out.per_curve_best_m = std::move(best_m_per_curve);
    return out;
}

FunctionalDataset smooth_with_basis(const std::vector<RawCurve>& curves,
                                    const std::vector<std::optional<int>>& labels,
                                    BasisPtr basis, const std::vector<double>& zeta_grid)
{
    if (zeta_grid.empty()) {
        throw InvalidArgument("smooth_with_basis: empty zeta grid");
    }
    check_labels(curves, labels);
    const std::vector<double> zetas = sorted_unique(zeta_grid);
    std::vector<SmoothFit> fits;
    fits.reserve(curves.size());
    for (const auto& c : curves) {
        std::vector<std::string> failures;
        Candidate best = best_zeta(c, basis, zetas, &failures);
        if (!best.ok) {
            std::string msg = "smooth_with_basis: every zeta failed for curve " + c.id;
            for (const auto& f : failures) {
                msg += "\n  " + f;
            }
            throw NumericalFailure(msg);
        }
        fits.push_back(std::move(best.fit));
    }
    FunctionalDataset out = assemble(curves, labels, basis, fits);
    out.per_curve_best_m.assign(curves.size(), basis->m);
    return out;
}

std::vector<int> default_m_grid()
{
    std::vector<int> g;
    for (int m = 5; m <= 15; ++m) {
        g.push_back(m);
    }
    return g;
}

std::vector<double> default_zeta_grid() { return log_grid(1e-8, 1.0, 20); }

std::vector<double> log_grid(double lo, double hi, int count)
{
    if (count < 1 || !(lo > 0.0) || !(hi >= lo)) {
        throw InvalidArgument("log_grid: need count >= 1 and 0 < lo <= hi");
    }
    if (count == 1) {
        return {lo};
    }
    std::vector<double> g(count);
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (int i = 0; i < count; ++i) {
        g[i] = std::pow(10.0, a + (b - a) * i / (count - 1));
    }
    g.front() = lo;
    g.back() = hi;
    return g;
}

} // namespace sfda
