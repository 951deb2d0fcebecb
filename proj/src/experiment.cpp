#include "sfda/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "sfda/errors.hpp"
#include "sfda/io.hpp"

namespace sfda {

namespace {

std::vector<RawCurve> pick_curves(const std::vector<RawCurve>& curves,
                                  const std::vector<std::size_t>& idx)
{
    std::vector<RawCurve> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) {
        out.push_back(curves[i]);
    }
    return out;
}

void check_spec(const ExperimentSpec& spec)
{
    if (spec.repetitions < 1) {
        throw InvalidArgument("experiment: repetitions must be >= 1");
    }
    if (spec.fractions.empty() || spec.methods.empty() || spec.criteria.empty()) {
        throw InvalidArgument("experiment: fractions, methods and criteria must be non-empty");
    }
    for (double f : spec.fractions) {
        if (!(f > 0.0 && f <= 1.0)) {
            throw InvalidArgument("experiment: fractions must lie in (0, 1]");
        }
    }
}

} // namespace

std::string plot_series_name(Method m, Criterion c)
{
    return "plot_" + to_string(m) + "_" + to_string(c) + ".dat";
}

std::vector<RepetitionRecord> run_repetition(const ExperimentSpec& spec, int repetition)
{
    const std::uint64_t seed = derive_seed(spec.base_seed, static_cast<std::uint64_t>(repetition));
    SimConfig config;
    config.case_kind = spec.case_kind;
    config.n = spec.n;
    config.train_size = spec.train_size;
    config.seed = seed;
    config.noise_variance = spec.noise_variance;
    const SimulatedDataset sim = generate(config);
    const auto [train, test] = split_train_test(sim.true_labels, spec.train_size, seed);

    std::vector<RepetitionRecord> out;
    auto blank = [&](Method method, Criterion crit, double fraction) {
        RepetitionRecord r;
        r.repetition = repetition;
        r.seed = seed;
        r.method = method;
        r.criterion = crit;
        r.fraction = fraction;
        r.n_test = test.size();
        return r;
    };
    auto fail_all = [&](const std::string& why) {
        out.clear();
        for (double f : spec.fractions) {
            for (Method method : spec.methods) {
                for (Criterion crit : spec.criteria) {
                    auto r = blank(method, crit, f);
                    r.failure = why;
                    out.push_back(r);
                }
            }
        }
        return out;
    };

    // smoothing does not look at labels, so it is shared by every fraction
    FunctionalDataset train_data;
    FunctionalDataset test_data;
    try {
        train_data = functionalize(pick_curves(sim.curves, train), {}, spec.m_grid, spec.zeta_grid);
        test_data = smooth_with_basis(pick_curves(sim.curves, test), {}, train_data.basis, spec.zeta_grid);
    } catch (const std::exception& e) {
        return fail_all(std::string("smoothing: ") + e.what());
    }
    const CrossProductMatrix J = cross_product_matrix(*train_data.basis);
    const arma::mat z_test = predictor_rows(test_data.coefficients, J);
    std::vector<int> test_truth;
    for (std::size_t i : test) {
        test_truth.push_back(sim.true_labels[i]);
    }
    const BlockPenalty penalty = BlockPenalty::identity(static_cast<arma::uword>(train_data.basis->m));

    for (double fraction : spec.fractions) {
        auto [labeled, unlabeled] = choose_labeled(train, sim.true_labels, fraction, seed);
        {
            std::set<std::size_t> fitted(labeled.begin(), labeled.end());
            fitted.insert(unlabeled.begin(), unlabeled.end());
            for (std::size_t i : test) {
                if (fitted.count(i)) {
                    throw std::logic_error("experiment: test curve leaked into fitting");
                }
            }
        }
        const std::set<std::size_t> labeled_set(labeled.begin(), labeled.end());
        for (Method method : spec.methods) {
            FunctionalDataset view;
            view.basis = train_data.basis;
            std::vector<arma::uword> rows;
            for (std::size_t r = 0; r < train.size(); ++r) {
                const bool is_labeled = labeled_set.count(train[r]) > 0;
                if (is_labeled || method == Method::SFLDA) {
                    rows.push_back(r);
                    view.labels.push_back(is_labeled ? std::optional<int>(sim.true_labels[train[r]])
                                                     : std::nullopt);
                    view.curve_ids.push_back(train_data.curve_ids[r]);
                }
            }
            view.coefficients = train_data.coefficients.rows(arma::uvec(rows));

            std::vector<LambdaPoint> scan;
            std::string scan_failure;
            ClassifierDesign design;
            try {
                design = build_design(view, J, 2);
                scan = scan_lambda(design, penalty, spec.lambda_grid, spec.em, spec.gbic_form);
            } catch (const std::exception& e) {
                scan_failure = e.what();
            }
            for (Criterion crit : spec.criteria) {
                RepetitionRecord rec = blank(method, crit, fraction);
                rec.m = train_data.basis->m;
                rec.n_labeled = labeled.size();
                rec.n_unlabeled = method == Method::SFLDA ? unlabeled.size() : 0;
                if (!scan_failure.empty()) {
                    rec.failure = scan_failure;
                    out.push_back(rec);
                    continue;
                }
                try {
                    const LambdaSelection sel = pick_lambda(scan, crit);
                    const Prediction p = predict(sel.fit.beta, z_test);
                    rec.test_error = error_rate(p.classes, test_truth);
                    rec.lambda = sel.fit.lambda;
                    rec.em_iterations = sel.fit.em_iterations;
                    rec.converged = sel.fit.converged;
                    rec.ok = true;
                } catch (const std::exception& e) {
                    rec.failure = e.what();
                }
                out.push_back(rec);
            }
        }
    }
    return out;
}

std::vector<CellSummary> summarize(const ExperimentSpec& spec,
                                   const std::vector<RepetitionRecord>& records)
{
    std::vector<CellSummary> cells;
    for (Method method : spec.methods) {
        for (Criterion crit : spec.criteria) {
            for (double fraction : spec.fractions) {
                CellSummary c;
                c.method = method;
                c.criterion = crit;
                c.fraction = fraction;
                std::vector<double> errors;
                double lambda_sum = 0.0;
                double log_lambda_sum = 0.0;
                for (const auto& r : records) {
                    if (r.method != method || r.criterion != crit || r.fraction != fraction) {
                        continue;
                    }
                    if (!r.ok) {
                        ++c.reps_failed;
                        continue;
                    }
                    errors.push_back(r.test_error);
                    lambda_sum += r.lambda;
                    log_lambda_sum += std::log(r.lambda);
                }
                c.reps_ok = static_cast<int>(errors.size());
                if (c.reps_ok > 0) {
                    double mean = 0.0;
                    for (double e : errors) {
                        mean += e;
                    }
                    mean /= c.reps_ok;
                    double ss = 0.0;
                    for (double e : errors) {
                        ss += (e - mean) * (e - mean);
                    }
                    c.mean_error = mean;
                    c.std_error = c.reps_ok > 1 ? std::sqrt(ss / (c.reps_ok - 1)) / std::sqrt(c.reps_ok) : 0.0;
                    c.mean_lambda = lambda_sum / c.reps_ok;
                    c.geomean_lambda = std::exp(log_lambda_sum / c.reps_ok);
                }
                cells.push_back(c);
            }
        }
    }
    return cells;
}

ExperimentReport run_experiment(const ExperimentSpec& spec, const ProgressFn& progress)
{
    check_spec(spec);
    const auto started = std::chrono::steady_clock::now();
    std::vector<std::vector<RepetitionRecord>> per_rep(static_cast<std::size_t>(spec.repetitions));
    std::atomic<int> next{0};
    std::atomic<int> finished{0};
    std::mutex progress_mutex;
    std::exception_ptr fatal;
    std::mutex fatal_mutex;

    auto worker = [&] {
        for (int r = next++; r < spec.repetitions; r = next++) {
            try {
                per_rep[static_cast<std::size_t>(r)] = run_repetition(spec, r);
            } catch (...) {
                std::lock_guard lock(fatal_mutex);
                if (!fatal) {
                    fatal = std::current_exception();
                }
            }
            const int done = ++finished;
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(done, spec.repetitions);
            }
        }
    };
    const int workers = std::clamp(spec.workers, 1, spec.repetitions);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
    }
    if (fatal) {
        std::rethrow_exception(fatal);
    }

    ExperimentReport report;
    report.spec = spec;
    for (auto& recs : per_rep) {
        report.records.insert(report.records.end(), recs.begin(), recs.end());
    }
    report.cells = summarize(spec, report.records);
    for (const auto& c : report.cells) {
        if (c.reps_ok == 0) {
            std::string why;
            for (const auto& r : report.records) {
                if (r.method == c.method && r.criterion == c.criterion && r.fraction == c.fraction) {
                    why = r.failure;
                    break;
                }
            }
            throw NumericalFailure("experiment: every repetition failed for " + to_string(c.method) +
                                   "/" + to_string(c.criterion) + " at fraction " +
                                   format_double(c.fraction) + ": " + why);
        }
    }
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

std::string report_csv(const ExperimentReport& report)
{
    std::ostringstream os;
    os << "method,criterion,fraction,mean_error,std_error,mean_lambda,geomean_lambda,reps_ok,reps_failed\n";
    for (const auto& c : report.cells) {
        os << to_string(c.method) << ',' << to_string(c.criterion) << ',' << format_double(c.fraction)
           << ',' << format_double(c.mean_error) << ',' << format_double(c.std_error) << ','
           << format_double(c.mean_lambda) << ',' << format_double(c.geomean_lambda) << ','
           << c.reps_ok << ',' << c.reps_failed << '\n';
    }
    return os.str();
}

std::string records_csv(const ExperimentReport& report)
{
    std::ostringstream os;
    os << "repetition,seed,method,criterion,fraction,ok,test_error,lambda,n_labeled,n_unlabeled,"
          "n_test,m,em_iterations,converged,failure\n";
    for (const auto& r : report.records) {
        std::string failure = r.failure;
        std::replace(failure.begin(), failure.end(), ',', ';');
        std::replace(failure.begin(), failure.end(), '\n', ' ');
        os << r.repetition << ',' << r.seed << ',' << to_string(r.method) << ','
           << to_string(r.criterion) << ',' << format_double(r.fraction) << ',' << (r.ok ? 1 : 0)
           << ',' << format_double(r.test_error) << ',' << format_double(r.lambda) << ','
           << r.n_labeled << ',' << r.n_unlabeled << ',' << r.n_test << ',' << r.m << ','
           << r.em_iterations << ',' << (r.converged ? 1 : 0) << ',' << failure << '\n';
    }
    return os.str();
}

void write_experiment(const std::filesystem::path& dir, const ExperimentReport& report)
{
    auto write = [&](const std::filesystem::path& p, const std::string& text) {
        std::ofstream out = open_output(p);
        out << text;
        if (!out) {
            throw IoError("failed writing " + p.string());
        }
    };
    write(dir / "report.csv", report_csv(report));
    write(dir / "records.csv", records_csv(report));
    for (Method m : report.spec.methods) {
        for (Criterion c : report.spec.criteria) {
            std::ostringstream os;
            os << "# fraction mean_error std_error\n";
            for (const auto& cell : report.cells) {
                if (cell.method == m && cell.criterion == c) {
                    os << format_double(cell.fraction) << ' ' << format_double(cell.mean_error) << ' '
                       << format_double(cell.std_error) << '\n';
                }
            }
            write(dir / plot_series_name(m, c), os.str());
        }
    }
}

} // namespace sfda
