#pragma once

// End-to-end fitting and prediction on raw curves, plus the persisted model.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sfda/logit.hpp"
#include "sfda/selection.hpp"
#include "sfda/smoother.hpp"

namespace sfda {

enum class Method { SFLDA, FLDA };

std::string to_string(Method m);
Method parse_method(const std::string& s);

inline constexpr int kModelFormatVersion = 1;

struct Model {
    int format_version = kModelFormatVersion;
    GaussianBasis basis;
    std::vector<int> m_grid;
    std::vector<double> zeta_grid;
    std::vector<double> lambda_grid;
    std::vector<std::string> train_ids;
    std::vector<double> train_zetas;
    arma::mat J;
    int L = 2;
    arma::mat beta;  // (L-1) x (m+1)
    double lambda = 0.0;
    Method method = Method::SFLDA;
    Criterion criterion = Criterion::GIC;
    double criterion_value = 0.0;
    int em_iterations = 0;
    bool converged = false;
    std::size_t n_labeled = 0;
    std::size_t n_unlabeled = 0;
};

/// JSON text, doubles written with round-trip precision.
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);
std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text);

struct FitOptions {
    std::vector<int> m_grid = default_m_grid();
    std::vector<double> zeta_grid = default_zeta_grid();
    std::vector<double> lambda_grid = default_lambda_grid();
    Criterion criterion = Criterion::GIC;
    Method method = Method::SFLDA;
    EmOptions em;
    GbicForm gbic_form = GbicForm::Laplace;
    int num_classes = 0;  // 0: largest label present
};

struct FitOutcome {
    Model model;
    FunctionalDataset data;
    ClassifierDesign design;
    LambdaSelection selection;
    std::vector<LambdaPoint> scan;
    double training_error = 0.0;  // on the labeled curves
};

/// Smooths every curve, then fits the classifier with lambda chosen by the
/// requested criterion. FLDA ignores the unlabeled curves when fitting.
FitOutcome fit_pipeline(const std::vector<RawCurve>& curves,
                        const std::vector<std::optional<int>>& labels, const FitOptions& opts);

struct CurvePredictions {
    std::vector<std::string> ids;
    std::vector<int> classes;
    arma::mat posteriors;
    std::vector<std::string> warnings;
};

/// Smooths new curves with the model's basis (zeta re-selected per curve)
/// and classifies them.
CurvePredictions predict_curves(const Model& model, const std::vector<RawCurve>& curves);

void write_predictions_csv(const std::filesystem::path& path, const CurvePredictions& p, int L);

} // namespace sfda
