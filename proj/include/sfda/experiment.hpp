#pragma once

// Monte Carlo experiment runner: repetitions x label fractions x methods x
// criteria on the simulated designs, with test error on held-out curves.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sfda/pipeline.hpp"
#include "sfda/simgen.hpp"

namespace sfda {

struct ExperimentSpec {
    CaseKind case_kind = CaseKind::Case1;
    std::vector<double> fractions{0.05, 0.10, 0.20, 0.30, 0.40, 0.50, 0.60};
    int repetitions = 50;
    std::vector<Criterion> criteria{Criterion::GIC};
    std::vector<Method> methods{Method::SFLDA};
    std::vector<double> lambda_grid = default_lambda_grid();
    std::vector<int> m_grid = default_m_grid();
    std::vector<double> zeta_grid = default_zeta_grid();
    std::uint64_t base_seed = 1;
    int n = 600;
    int train_size = 300;
    int workers = 1;
    EmOptions em;
    GbicForm gbic_form = GbicForm::Laplace;
    std::optional<double> noise_variance;  // overrides the case default
};

struct RepetitionRecord {
    int repetition = 0;
    std::uint64_t seed = 0;
    Method method = Method::SFLDA;
    Criterion criterion = Criterion::GIC;
    double fraction = 0.0;
    bool ok = false;
    double test_error = 0.0;
    double lambda = 0.0;
    std::size_t n_labeled = 0;
    std::size_t n_unlabeled = 0;
    std::size_t n_test = 0;
    int m = 0;
    int em_iterations = 0;
    bool converged = false;
    std::string failure;
};

struct CellSummary {
    Method method = Method::SFLDA;
    Criterion criterion = Criterion::GIC;
    double fraction = 0.0;
    double mean_error = 0.0;
    double std_error = 0.0;
    double mean_lambda = 0.0;
    double geomean_lambda = 0.0;
    int reps_ok = 0;
    int reps_failed = 0;
};

struct ExperimentReport {
    ExperimentSpec spec;
    std::vector<CellSummary> cells;         // method, criterion, fraction order
    std::vector<RepetitionRecord> records;  // repetition-major
    double runtime_seconds = 0.0;
};

using ProgressFn = std::function<void(int finished, int total)>;

ExperimentReport run_experiment(const ExperimentSpec& spec, const ProgressFn& progress = {});

/// Every record for one repetition (all fractions, methods and criteria).
std::vector<RepetitionRecord> run_repetition(const ExperimentSpec& spec, int repetition);

std::vector<CellSummary> summarize(const ExperimentSpec& spec,
                                   const std::vector<RepetitionRecord>& records);

std::string report_csv(const ExperimentReport& report);
std::string records_csv(const ExperimentReport& report);

/// report.csv, records.csv and one plot series per (method, criterion).
void write_experiment(const std::filesystem::path& dir, const ExperimentReport& report);

std::string plot_series_name(Method m, Criterion c);

} // namespace sfda
