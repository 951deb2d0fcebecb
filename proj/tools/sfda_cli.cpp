// sfda: semi-supervised functional logistic discrimination from the command line.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "sfda/errors.hpp"
#include "sfda/experiment.hpp"
#include "sfda/io.hpp"
#include "sfda/pipeline.hpp"
#include "sfda/simgen.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

double to_double(const std::string& s)
{
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) {
        throw sfda::InvalidArgument("not a number: " + s);
    }
    return v;
}

// "a,b,c" or "log:lo:hi:count"
std::vector<double> parse_real_grid(const std::string& s)
{
    if (s.rfind("log:", 0) == 0) {
        const auto parts = split(s.substr(4), ':');
        if (parts.size() != 3) {
            throw sfda::InvalidArgument("expected log:lo:hi:count, got " + s);
        }
        return sfda::log_grid(to_double(parts[0]), to_double(parts[1]), std::stoi(parts[2]));
    }
    std::vector<double> out;
    for (const auto& p : split(s, ',')) {
        out.push_back(to_double(p));
    }
    if (out.empty()) {
        throw sfda::InvalidArgument("empty grid: " + s);
    }
    return out;
}

// "5-15" or "5,7,9"
std::vector<int> parse_int_grid(const std::string& s)
{
    std::vector<int> out;
    const auto dash = s.find('-');
    if (dash != std::string::npos && s.find(',') == std::string::npos) {
        const int lo = std::stoi(s.substr(0, dash));
        const int hi = std::stoi(s.substr(dash + 1));
        for (int m = lo; m <= hi; ++m) {
            out.push_back(m);
        }
    } else {
        for (const auto& p : split(s, ',')) {
            out.push_back(std::stoi(p));
        }
    }
    if (out.empty()) {
        throw sfda::InvalidArgument("empty grid: " + s);
    }
    return out;
}

// values above 1 are percentages
std::vector<double> parse_fractions(const std::string& s)
{
    std::vector<double> out;
    for (const auto& p : split(s, ',')) {
        const double v = to_double(p);
        out.push_back(v > 1.0 ? v / 100.0 : v);
    }
    return out;
}

struct GridFlags {
    std::string m_grid = "5-15";
    std::string zeta_grid = "log:1e-8:1:20";
    std::string lambda_grid = "log:1e-8:1:25";

    void add(CLI::App* app, bool with_lambda)
    {
        app->add_option("--m-grid", m_grid, "basis sizes, '5-15' or '5,7,9'")->capture_default_str();
        app->add_option("--zeta-grid", zeta_grid, "smoothing parameters, list or log:lo:hi:count")
            ->capture_default_str();
        if (with_lambda) {
            app->add_option("--lambda-grid", lambda_grid, "regularization parameters, list or log:lo:hi:count")
                ->capture_default_str();
        }
    }
};

int run_simulate(int case_no, std::uint64_t seed, int n, int train_size,
                 const std::optional<double>& fraction, const fs::path& out_dir)
{
    sfda::SimConfig cfg;
    cfg.case_kind = case_no == 1 ? sfda::CaseKind::Case1 : sfda::CaseKind::Case2;
    cfg.seed = seed;
    cfg.n = n;
    cfg.train_size = std::min(train_size, n);
    const sfda::SimulatedDataset sim = sfda::generate(cfg);

    if (!fraction) {
        std::vector<std::string> ids;
        std::vector<std::optional<int>> labels;
        for (std::size_t a = 0; a < sim.curves.size(); ++a) {
            ids.push_back(sim.curves[a].id);
            labels.emplace_back(sim.true_labels[a]);
        }
        sfda::write_curves_csv(out_dir / "curves.csv", sim.curves);
        sfda::write_labels_csv(out_dir / "labels.csv", ids, labels);
        std::cout << "wrote " << sim.curves.size() << " curves to " << out_dir.string() << "\n";
        return 0;
    }

    const sfda::SimulatedDataset part = sfda::partition(sim, *fraction, seed, cfg.train_size);
    const std::set<std::size_t> labeled(part.partition.train_labeled.begin(),
                                        part.partition.train_labeled.end());
    std::vector<std::size_t> train = part.partition.train_labeled;
    train.insert(train.end(), part.partition.train_unlabeled.begin(), part.partition.train_unlabeled.end());
    std::sort(train.begin(), train.end());

    std::vector<sfda::RawCurve> train_curves;
    std::vector<sfda::RawCurve> test_curves;
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    std::vector<std::optional<int>> train_labels;
    std::vector<std::optional<int>> test_labels;
    for (std::size_t a : train) {
        train_curves.push_back(sim.curves[a]);
        train_ids.push_back(sim.curves[a].id);
        train_labels.push_back(labeled.count(a) ? std::optional<int>(sim.true_labels[a]) : std::nullopt);
    }
    for (std::size_t a : part.partition.test) {
        test_curves.push_back(sim.curves[a]);
        test_ids.push_back(sim.curves[a].id);
        test_labels.emplace_back(sim.true_labels[a]);
    }
    sfda::write_curves_csv(out_dir / "curves.csv", train_curves);
    sfda::write_labels_csv(out_dir / "labels.csv", train_ids, train_labels);
    sfda::write_curves_csv(out_dir / "test_curves.csv", test_curves);
    sfda::write_labels_csv(out_dir / "test_labels.csv", test_ids, test_labels);
    std::cout << "wrote " << train_curves.size() << " training curves (" << labeled.size()
              << " labeled) and " << test_curves.size() << " test curves to " << out_dir.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Semi-supervised functional logistic discrimination"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a simulated two-class curve dataset");
    int sim_case = 1;
    std::uint64_t sim_seed = 1;
    int sim_n = 600;
    int sim_train = 300;
    std::optional<double> sim_fraction;
    fs::path sim_out;
    sim->add_option("--case", sim_case, "simulation design (1 or 2)")->required()->check(CLI::IsMember({1, 2}));
    sim->add_option("--seed", sim_seed, "random seed")->capture_default_str();
    sim->add_option("--n", sim_n, "number of curves (even)")->capture_default_str();
    sim->add_option("--train-size", sim_train, "training curves when splitting (capped at --n)")
        ->capture_default_str();
    sim->add_option("--label-fraction", sim_fraction,
                    "split train/test and hide all but this fraction of training labels");
    sim->add_option("--out", sim_out, "output directory")->required();

    // smooth
    auto* smooth = app.add_subcommand("smooth", "functionalize curves and write basis coefficients");
    std::vector<fs::path> smooth_curves;
    fs::path smooth_out;
    bool smooth_drop = false;
    GridFlags smooth_grids;
    smooth->add_option("--curves", smooth_curves, "curve CSV file(s)")->required();
    smooth->add_option("--out", smooth_out, "coefficient CSV to write")->required();
    smooth->add_flag("--drop-missing", smooth_drop, "drop curves with missing values");
    smooth_grids.add(smooth, false);

    // fit
    auto* fit = app.add_subcommand("fit", "fit the classifier and write a model file");
    std::vector<fs::path> fit_curves;
    std::vector<fs::path> fit_labels;
    fs::path fit_model;
    std::string fit_criterion = "gic";
    std::string fit_method = "sflda";
    std::string fit_gbic_form = "laplace";
    bool fit_drop = false;
    int fit_max_em = 500;
    GridFlags fit_grids;
    fit->add_option("--curves", fit_curves, "curve CSV file(s)")->required();
    fit->add_option("--labels", fit_labels, "label CSV file(s)")->required();
    fit->add_option("--model", fit_model, "model file to write")->required();
    fit->add_option("--criterion", fit_criterion, "gic or gbic")->capture_default_str();
    fit->add_option("--method", fit_method, "sflda (labeled + unlabeled) or flda (labeled only)")
        ->capture_default_str();
    fit->add_option("--gbic-form", fit_gbic_form, "laplace or printed")->capture_default_str();
    fit->add_option("--max-em", fit_max_em, "EM iteration cap")->capture_default_str();
    fit->add_flag("--drop-missing", fit_drop, "drop curves with missing values");
    fit_grids.add(fit, true);

    // predict
    auto* pred = app.add_subcommand("predict", "classify curves with a fitted model");
    fs::path pred_model;
    std::vector<fs::path> pred_curves;
    std::vector<fs::path> pred_labels;
    fs::path pred_out;
    bool pred_drop = false;
    pred->add_option("--model", pred_model, "model file")->required();
    pred->add_option("--curves", pred_curves, "curve CSV file(s)")->required();
    pred->add_option("--labels", pred_labels, "optional label CSV to report the error rate");
    pred->add_option("--out", pred_out, "predictions CSV to write")->required();
    pred->add_flag("--drop-missing", pred_drop, "drop curves with missing values");

    // experiment
    auto* exp = app.add_subcommand("experiment", "Monte Carlo comparison over label fractions");
    int exp_case = 1;
    std::string exp_fractions = "5,10,20,30,40,50,60";
    int exp_reps = 50;
    std::string exp_methods = "sflda";
    std::string exp_criteria = "gic";
    std::uint64_t exp_seed = 1;
    int exp_workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    fs::path exp_out = "experiment_out";
    bool exp_quiet = false;
    std::string exp_gbic_form = "laplace";
    std::optional<double> exp_noise;
    GridFlags exp_grids;
    exp->add_option("--case", exp_case, "simulation design (1 or 2)")->required()->check(CLI::IsMember({1, 2}));
    exp->add_option("--fractions", exp_fractions, "label fractions; values above 1 are percentages")
        ->capture_default_str();
    exp->add_option("--reps", exp_reps, "repetitions")->capture_default_str()->check(CLI::PositiveNumber);
    exp->add_option("--method", exp_methods, "comma list of sflda, flda")->capture_default_str();
    exp->add_option("--criterion", exp_criteria, "comma list of gic, gbic")->capture_default_str();
    exp->add_option("--seed", exp_seed, "base seed")->capture_default_str();
    exp->add_option("--workers", exp_workers, "parallel repetitions")->capture_default_str();
    exp->add_option("--out", exp_out, "output directory")->capture_default_str();
    exp->add_option("--gbic-form", exp_gbic_form, "laplace or printed")->capture_default_str();
    exp->add_option("--noise-variance", exp_noise, "override the design's noise variance");
    exp->add_flag("--quiet", exp_quiet, "no progress output");
    exp_grids.add(exp, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*sim) {
            return run_simulate(sim_case, sim_seed, sim_n, sim_train, sim_fraction, sim_out);
        }
        if (*smooth) {
            const auto in = sfda::ingest_csv(smooth_curves, {}, smooth_drop);
            for (const auto& id : in.dropped_ids) {
                std::cerr << "dropped " << id << " (missing values)\n";
            }
            const auto data = sfda::functionalize(in.curves, {}, parse_int_grid(smooth_grids.m_grid),
                                                  parse_real_grid(smooth_grids.zeta_grid));
            std::ofstream out = sfda::open_output(smooth_out);
            out << "curve_id,zeta,noise_variance";
            for (int k = 1; k <= data.basis->m; ++k) {
                out << ",w" << k;
            }
            out << '\n';
            for (std::size_t a = 0; a < data.size(); ++a) {
                out << data.curve_ids[a] << ',' << sfda::format_double(data.zetas[a]) << ','
                    << sfda::format_double(data.noise_variances[a]);
                for (int k = 0; k < data.basis->m; ++k) {
                    out << ',' << sfda::format_double(data.coefficients(a, k));
                }
                out << '\n';
            }
            std::cout << "m=" << data.basis->m << " width=" << data.basis->width << " curves=" << data.size()
                      << "\n";
            return 0;
        }
        if (*fit) {
            const auto in = sfda::ingest_csv(fit_curves, fit_labels, fit_drop);
            for (const auto& id : in.dropped_ids) {
                std::cerr << "dropped " << id << " (missing values)\n";
            }
            sfda::FitOptions opts;
            opts.m_grid = parse_int_grid(fit_grids.m_grid);
            opts.zeta_grid = parse_real_grid(fit_grids.zeta_grid);
            opts.lambda_grid = parse_real_grid(fit_grids.lambda_grid);
            opts.criterion = sfda::parse_criterion(fit_criterion);
            opts.method = sfda::parse_method(fit_method);
            opts.em.max_em = fit_max_em;
            opts.gbic_form = sfda::parse_gbic_form(fit_gbic_form);
            std::set<int> classes;
            for (const auto& l : in.labels) {
                if (l) {
                    classes.insert(*l);
                }
            }
            if (classes.size() < 2) {
                std::cerr << "error: labeled curves must cover at least two classes\n";
                return 2;
            }
            const auto outcome = sfda::fit_pipeline(in.curves, in.labels, opts);
            sfda::save_model(fit_model, outcome.model);
            std::cout << "m=" << outcome.model.basis.m << " L=" << outcome.model.L
                      << " labeled=" << outcome.model.n_labeled << " unlabeled=" << outcome.model.n_unlabeled
                      << "\nlambda=" << sfda::format_double(outcome.model.lambda) << " "
                      << sfda::to_string(opts.criterion) << "=" << sfda::format_double(outcome.model.criterion_value)
                      << " em_iterations=" << outcome.model.em_iterations
                      << (outcome.model.converged ? "" : " (not converged)")
                      << "\ntraining_error=" << sfda::format_double(outcome.training_error) << "\n";
            return 0;
        }
        if (*pred) {
            const sfda::Model model = sfda::load_model(pred_model);
            const auto in = sfda::ingest_csv(pred_curves, pred_labels, pred_drop);
            for (const auto& id : in.dropped_ids) {
                std::cerr << "dropped " << id << " (missing values)\n";
            }
            const auto p = sfda::predict_curves(model, in.curves);
            for (const auto& w : p.warnings) {
                std::cerr << "warning: " << w << "\n";
            }
            sfda::write_predictions_csv(pred_out, p, model.L);
            std::size_t known = 0;
            std::size_t wrong = 0;
            for (std::size_t a = 0; a < p.ids.size(); ++a) {
                if (in.labels[a]) {
                    ++known;
                    wrong += *in.labels[a] != p.classes[a] ? 1 : 0;
                }
            }
            std::cout << "predicted " << p.ids.size() << " curves";
            if (known > 0) {
                std::cout << "; error=" << sfda::format_double(static_cast<double>(wrong) / known) << " on "
                          << known << " labeled";
            }
            std::cout << "\n";
            return 0;
        }
        if (*exp) {
            sfda::ExperimentSpec spec;
            spec.case_kind = exp_case == 1 ? sfda::CaseKind::Case1 : sfda::CaseKind::Case2;
            spec.fractions = parse_fractions(exp_fractions);
            spec.repetitions = exp_reps;
            spec.methods.clear();
            for (const auto& m : split(exp_methods, ',')) {
                spec.methods.push_back(sfda::parse_method(m));
            }
            spec.criteria.clear();
            for (const auto& c : split(exp_criteria, ',')) {
                spec.criteria.push_back(sfda::parse_criterion(c));
            }
            spec.base_seed = exp_seed;
            spec.gbic_form = sfda::parse_gbic_form(exp_gbic_form);
            spec.noise_variance = exp_noise;
            spec.workers = exp_workers;
            spec.m_grid = parse_int_grid(exp_grids.m_grid);
            spec.zeta_grid = parse_real_grid(exp_grids.zeta_grid);
            spec.lambda_grid = parse_real_grid(exp_grids.lambda_grid);
            sfda::ProgressFn progress;
            if (!exp_quiet) {
                progress = [](int done, int total) {
                    std::cerr << "\rrepetition " << done << "/" << total << std::flush;
                    if (done == total) {
                        std::cerr << "\n";
                    }
                };
            }
            const auto report = sfda::run_experiment(spec, progress);
            sfda::write_experiment(exp_out, report);
            std::cout << sfda::report_csv(report);
            std::cerr << "runtime " << report.runtime_seconds << " s; results in " << exp_out.string() << "\n";
            return 0;
        }
    } catch (const sfda::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
