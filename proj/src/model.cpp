#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sfda/errors.hpp"
#include "sfda/io.hpp"
#include "sfda/pipeline.hpp"

namespace sfda {

namespace {

using nlohmann::json;

json matrix_rows(const arma::mat& m)
{
    json rows = json::array();
    for (arma::uword r = 0; r < m.n_rows; ++r) {
        json row = json::array();
        for (arma::uword c = 0; c < m.n_cols; ++c) {
            row.push_back(m(r, c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

arma::mat rows_matrix(const json& rows, arma::uword n_rows, arma::uword n_cols, const char* what)
{
    if (!rows.is_array() || rows.size() != n_rows) {
        throw InvalidArgument(std::string("model: bad shape for ") + what);
    }
    arma::mat m(n_rows, n_cols);
    for (arma::uword r = 0; r < n_rows; ++r) {
        if (!rows[r].is_array() || rows[r].size() != n_cols) {
            throw InvalidArgument(std::string("model: bad shape for ") + what);
        }
        for (arma::uword c = 0; c < n_cols; ++c) {
            m(r, c) = rows[r][c].get<double>();
        }
    }
    return m;
}

} // namespace

std::string model_to_json(const Model& model)
{
    json j;
    j["format"] = "sfda-model";
    j["format_version"] = model.format_version;
    j["basis"] = {
        {"m", model.basis.m},
        {"centers", std::vector<double>(model.basis.centers.begin(), model.basis.centers.end())},
        {"width", model.basis.width},
        {"knots", model.basis.grid.knots},
        {"t_min", model.basis.grid.t_min},
        {"t_max", model.basis.grid.t_max},
        {"spacing", model.basis.grid.spacing},
    };
    j["smoothing"] = {
        {"m_grid", model.m_grid},
        {"zeta_grid", model.zeta_grid},
        {"train_ids", model.train_ids},
        {"train_zetas", model.train_zetas},
    };
    j["J"] = matrix_rows(model.J);
    j["classifier"] = {
        {"method", to_string(model.method)},
        {"L", model.L},
        {"beta", matrix_rows(model.beta)},
        {"lambda", model.lambda},
        {"lambda_grid", model.lambda_grid},
        {"criterion", to_string(model.criterion)},
        {"criterion_value", model.criterion_value},
        {"em_iterations", model.em_iterations},
        {"converged", model.converged},
        {"n_labeled", model.n_labeled},
        {"n_unlabeled", model.n_unlabeled},
    };
    return j.dump(2) + "\n";
}

Model model_from_json(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(std::string("model: not valid JSON: ") + e.what());
    }
    if (j.value("format", "") != "sfda-model") {
        throw InvalidArgument("model: not an sfda model file");
    }
    Model m;
    try {
        m.format_version = j.at("format_version").get<int>();
        if (m.format_version != kModelFormatVersion) {
            throw InvalidArgument("model: unsupported format version " + std::to_string(m.format_version));
        }
        const json& b = j.at("basis");
        m.basis.m = b.at("m").get<int>();
        m.basis.centers = arma::vec(b.at("centers").get<std::vector<double>>());
        m.basis.width = b.at("width").get<double>();
        m.basis.grid.knots = b.at("knots").get<std::vector<double>>();
        m.basis.grid.t_min = b.at("t_min").get<double>();
        m.basis.grid.t_max = b.at("t_max").get<double>();
        m.basis.grid.spacing = b.at("spacing").get<double>();
        if (m.basis.m < 4 || m.basis.centers.n_elem != static_cast<arma::uword>(m.basis.m) ||
            m.basis.grid.num_basis() != m.basis.m || !(m.basis.width > 0.0)) {
            throw InvalidArgument("model: inconsistent basis");
        }
        const json& s = j.at("smoothing");
        m.m_grid = s.at("m_grid").get<std::vector<int>>();
        m.zeta_grid = s.at("zeta_grid").get<std::vector<double>>();
        m.train_ids = s.at("train_ids").get<std::vector<std::string>>();
        m.train_zetas = s.at("train_zetas").get<std::vector<double>>();
        const arma::uword mm = static_cast<arma::uword>(m.basis.m);
        m.J = rows_matrix(j.at("J"), mm, mm, "J");
        const json& c = j.at("classifier");
        m.method = parse_method(c.at("method").get<std::string>());
        m.L = c.at("L").get<int>();
        if (m.L < 2) {
            throw InvalidArgument("model: L must be >= 2");
        }
        m.beta = rows_matrix(c.at("beta"), static_cast<arma::uword>(m.L - 1), mm + 1, "beta");
        m.lambda = c.at("lambda").get<double>();
        m.lambda_grid = c.at("lambda_grid").get<std::vector<double>>();
        m.criterion = parse_criterion(c.at("criterion").get<std::string>());
        m.criterion_value = c.at("criterion_value").get<double>();
        m.em_iterations = c.at("em_iterations").get<int>();
        m.converged = c.at("converged").get<bool>();
        m.n_labeled = c.at("n_labeled").get<std::size_t>();
        m.n_unlabeled = c.at("n_unlabeled").get<std::size_t>();
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("model: missing or malformed field: ") + e.what());
    }
    return m;
}

void save_model(const std::filesystem::path& path, const Model& model)
{
    std::ofstream out = open_output(path);
    out << model_to_json(model);
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

Model load_model(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

} // namespace sfda
