#include "sfda/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "sfda/errors.hpp"

namespace sfda {

namespace {

std::string trim(std::string s)
{
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) {
        out.push_back(trim(field));
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

bool is_missing(const std::string& s)
{
    return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan";
}

std::optional<double> parse_double(const std::string& s)
{
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

std::ifstream open_input(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return in;
}

void expect_header(std::ifstream& in, const std::filesystem::path& path, const std::string& header)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(path.string(), 1, "missing header '" + header + "'");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
    }
    if (trim(line) != header) {
        throw ParseError(path.string(), 1, "expected header '" + header + "', got '" + line + "'");
    }
}

} // namespace

std::string format_double(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::ofstream open_output(const std::filesystem::path& path)
{
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    return out;
}

CurveReadResult read_curves_csv(const std::filesystem::path& path, bool drop_missing)
{
    std::ifstream in = open_input(path);
    expect_header(in, path, "curve_id,t,x");

    std::vector<RawCurve> curves;
    std::unordered_map<std::string, std::size_t> index;
    std::unordered_map<std::string, std::set<double>> seen_times;
    std::set<std::string> missing;
    std::vector<std::string> missing_order;

    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 3) {
            throw ParseError(path.string(), line_no, "expected 3 fields, got " + std::to_string(fields.size()));
        }
        const std::string& id = fields[0];
        if (id.empty()) {
            throw ParseError(path.string(), line_no, "empty curve_id");
        }
        const auto t = parse_double(fields[1]);
        if (!t) {
            throw ParseError(path.string(), line_no, "bad time value '" + fields[1] + "'");
        }
        auto [it, inserted] = index.try_emplace(id, curves.size());
        if (inserted) {
            curves.push_back(RawCurve{id, {}, {}});
        }
        if (!seen_times[id].insert(*t).second) {
            throw ParseError(path.string(), line_no, "duplicate time " + fields[1] + " for curve " + id);
        }
        if (is_missing(fields[2])) {
            if (missing.insert(id).second) {
                missing_order.push_back(id);
            }
            continue;
        }
        const auto x = parse_double(fields[2]);
        if (!x) {
            throw ParseError(path.string(), line_no, "bad observation value '" + fields[2] + "'");
        }
        curves[it->second].times.push_back(*t);
        curves[it->second].values.push_back(*x);
    }

    CurveReadResult out;
    if (!missing.empty()) {
        if (!drop_missing) {
            std::string msg = path.string() + ": curves with missing values (use --drop-missing):";
            for (const auto& id : missing_order) {
                msg += " " + id;
            }
            throw InvalidArgument(msg);
        }
        out.dropped_ids = missing_order;
    }
    for (auto& c : curves) {
        if (!missing.count(c.id)) {
            out.curves.push_back(std::move(c));
        }
    }
    return out;
}

std::map<std::string, std::optional<int>> read_labels_csv(const std::filesystem::path& path)
{
    std::ifstream in = open_input(path);
    expect_header(in, path, "curve_id,label");
    std::map<std::string, std::optional<int>> out;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 2 || fields[0].empty()) {
            throw ParseError(path.string(), line_no, "expected 'curve_id,label'");
        }
        std::optional<int> label;
        if (!fields[1].empty()) {
            int v = 0;
            const auto* end = fields[1].data() + fields[1].size();
            const auto [ptr, ec] = std::from_chars(fields[1].data(), end, v);
            if (ec != std::errc() || ptr != end || v < 1) {
                throw ParseError(path.string(), line_no, "label must be a positive integer or empty");
            }
            label = v;
        }
        if (!out.emplace(fields[0], label).second) {
            throw ParseError(path.string(), line_no, "duplicate label entry for " + fields[0]);
        }
    }
    return out;
}

IngestResult ingest_csv(const std::vector<std::filesystem::path>& curve_files,
                        const std::vector<std::filesystem::path>& label_files, bool drop_missing)
{
    IngestResult out;
    std::set<std::string> ids;
    for (const auto& f : curve_files) {
        CurveReadResult r = read_curves_csv(f, drop_missing);
        for (auto& c : r.curves) {
            if (!ids.insert(c.id).second) {
                throw InvalidArgument("curve " + c.id + " appears in more than one file");
            }
            out.curves.push_back(std::move(c));
        }
        out.dropped_ids.insert(out.dropped_ids.end(), r.dropped_ids.begin(), r.dropped_ids.end());
    }
    std::map<std::string, std::optional<int>> labels;
    for (const auto& f : label_files) {
        for (auto& [id, l] : read_labels_csv(f)) {
            if (labels.count(id) && labels[id] && l && *labels[id] != *l) {
                throw InvalidArgument("conflicting labels for curve " + id);
            }
            if (!labels.count(id) || l) {
                labels[id] = l;
            }
        }
    }
    out.labels.reserve(out.curves.size());
    for (const auto& c : out.curves) {
        const auto it = labels.find(c.id);
        out.labels.push_back(it == labels.end() ? std::nullopt : it->second);
    }
    return out;
}

void write_curves_csv(const std::filesystem::path& path, const std::vector<RawCurve>& curves)
{
    std::ofstream out = open_output(path);
    out << "curve_id,t,x\n";
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < c.times.size(); ++i) {
            out << c.id << ',' << format_double(c.times[i]) << ',' << format_double(c.values[i]) << '\n';
        }
    }
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

void write_labels_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                      const std::vector<std::optional<int>>& labels)
{
    if (ids.size() != labels.size()) {
        throw InvalidArgument("write_labels_csv: ids and labels differ in count");
    }
    std::ofstream out = open_output(path);
    out << "curve_id,label\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out << ids[i] << ',';
        if (labels[i]) {
            out << *labels[i];
        }
        out << '\n';
    }
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

} // namespace sfda
