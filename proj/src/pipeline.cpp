#include "sfda/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "sfda/errors.hpp"
#include "sfda/io.hpp"

namespace sfda {

std::string to_string(Method m) { return m == Method::SFLDA ? "sflda" : "flda"; }

Method parse_method(const std::string& s)
{
    std::string lower;
    for (char ch : s) {
        lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    if (lower == "sflda") {
        return Method::SFLDA;
    }
    if (lower == "flda") {
        return Method::FLDA;
    }
    throw InvalidArgument("unknown method '" + s + "' (expected sflda or flda)");
}

FitOutcome fit_pipeline(const std::vector<RawCurve>& curves,
                        const std::vector<std::optional<int>>& labels, const FitOptions& opts)
{
    if (labels.size() != curves.size()) {
        throw InvalidArgument("fit: one label slot per curve required");
    }
    std::set<int> classes;
    for (const auto& l : labels) {
        if (l) {
            classes.insert(*l);
        }
    }
    if (classes.size() < 2) {
        throw InvalidArgument("fit: labeled curves must cover at least two classes");
    }

    FitOutcome out;
    out.data = functionalize(curves, labels, opts.m_grid, opts.zeta_grid);
    const CrossProductMatrix J = cross_product_matrix(*out.data.basis);

    FunctionalDataset view = out.data;
    if (opts.method == Method::FLDA) {
        // keep labeled rows only
        std::vector<arma::uword> keep;
        for (std::size_t a = 0; a < view.labels.size(); ++a) {
            if (view.labels[a]) {
                keep.push_back(a);
            }
        }
        const arma::uvec idx(keep);
        FunctionalDataset f;
        f.basis = view.basis;
        f.coefficients = view.coefficients.rows(idx);
        f.noise_variances = view.noise_variances.elem(idx);
        f.zetas = view.zetas.elem(idx);
        for (auto a : keep) {
            f.labels.push_back(view.labels[a]);
            f.curve_ids.push_back(view.curve_ids[a]);
        }
        view = std::move(f);
    }
    out.design = build_design(view, J, opts.num_classes);
    const BlockPenalty penalty = BlockPenalty::identity(static_cast<arma::uword>(out.data.basis->m));
    out.scan = scan_lambda(out.design, penalty, opts.lambda_grid, opts.em, opts.gbic_form);
    out.selection = pick_lambda(out.scan, opts.criterion);

    const Prediction train_pred =
        predict(out.selection.fit.beta, out.design.Z.rows(0, out.design.n_labeled - 1));
    std::vector<int> truth;
    for (arma::uword r = 0; r < out.design.n_labeled; ++r) {
        truth.push_back(*view.labels[out.design.source_rows[r]]);
    }
    out.training_error = error_rate(train_pred.classes, truth);

    Model& m = out.model;
    m.basis = *out.data.basis;
    m.m_grid = opts.m_grid;
    m.zeta_grid = opts.zeta_grid;
    m.lambda_grid = opts.lambda_grid;
    m.train_ids = out.data.curve_ids;
    m.train_zetas.assign(out.data.zetas.begin(), out.data.zetas.end());
    m.J = J.matrix;
    m.L = out.design.L;
    m.beta = out.selection.fit.beta.beta;
    m.lambda = out.selection.fit.lambda;
    m.method = opts.method;
    m.criterion = opts.criterion;
    m.criterion_value = out.selection.report.value;
    m.em_iterations = out.selection.fit.em_iterations;
    m.converged = out.selection.fit.converged;
    m.n_labeled = out.design.n_labeled;
    m.n_unlabeled = out.design.n_unlabeled();
    return out;
}

CurvePredictions predict_curves(const Model& model, const std::vector<RawCurve>& curves)
{
    CurvePredictions out;
    out.posteriors.set_size(0, static_cast<arma::uword>(model.L));
    if (curves.empty()) {
        return out;
    }
    const auto basis = std::make_shared<const GaussianBasis>(model.basis);
    const double lo = model.basis.grid.knots.front();
    const double hi = model.basis.grid.knots.back();
    for (const auto& c : curves) {
        const auto [mn, mx] = std::minmax_element(c.times.begin(), c.times.end());
        if (mn != c.times.end() && (*mn < lo || *mx > hi)) {
            std::ostringstream os;
            os << "curve " << c.id << ": times [" << *mn << ", " << *mx
               << "] extend beyond the basis knot span [" << lo << ", " << hi << "]";
            out.warnings.push_back(os.str());
        }
    }
    arma::mat W(curves.size(), static_cast<arma::uword>(model.basis.m));
    for (std::size_t a = 0; a < curves.size(); ++a) {
        try {
            W.row(a) = smooth_with_basis({curves[a]}, {}, basis, model.zeta_grid).coefficients.row(0);
        } catch (const NumericalFailure& e) {
            // no zeta has a usable GIC; keep the most heavily smoothed fit
            const double zeta = *std::max_element(model.zeta_grid.begin(), model.zeta_grid.end());
            W.row(a) = fit_penalized(curves[a], basis, zeta).coefficients.t();
            out.warnings.push_back("curve " + curves[a].id + ": smoothing GIC unusable, used zeta=" +
                                   format_double(zeta));
        }
        out.ids.push_back(curves[a].id);
    }
    const arma::mat Z = predictor_rows(W, CrossProductMatrix{model.J});
    Prediction p = predict(CoefficientBlock{model.beta}, Z);
    out.classes = std::move(p.classes);
    out.posteriors = std::move(p.posteriors);
    return out;
}

void write_predictions_csv(const std::filesystem::path& path, const CurvePredictions& p, int L)
{
    std::ofstream out = open_output(path);
    out << "curve_id,predicted";
    for (int k = 1; k <= L; ++k) {
        out << ",p" << k;
    }
    out << '\n';
    for (std::size_t a = 0; a < p.ids.size(); ++a) {
        out << p.ids[a] << ',' << p.classes[a];
        for (int k = 0; k < L; ++k) {
            out << ',' << format_double(p.posteriors(a, k));
        }
        out << '\n';
    }
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

} // namespace sfda
