#include "nvcvar/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace nvcvar {

const std::vector<std::string> kFoodBankFeatureNames = {
    "inflation",  "unemployment", "econ_index",  "index_close", "births",
    "deaths",     "covid_cases",  "crime_index", "holiday_dummy", "season_dummy"};

Dataset Dataset::slice(int begin, int count) const {
    if (begin < 0 || count < 0 || begin + count > rows())
        throw std::out_of_range("Dataset::slice: window outside dataset");
    Dataset out;
    out.feature_names = feature_names;
    out.features.assign(features.begin() + static_cast<std::size_t>(begin) * cols(),
                        features.begin() + static_cast<std::size_t>(begin + count) * cols());
    out.demand.assign(demand.begin() + begin, demand.begin() + begin + count);
    if (eps_truth)
        out.eps_truth = std::vector<double>(eps_truth->begin() + begin,
                                            eps_truth->begin() + begin + count);
    return out;
}

Dataset Dataset::select_features(std::span<const int> columns) const {
    Dataset out;
    out.demand = demand;
    out.eps_truth = eps_truth;
    for (int j : columns) {
        if (j < 0 || j >= cols())
            throw std::out_of_range("Dataset::select_features: column index out of range");
        out.feature_names.push_back(feature_names[j]);
    }
    out.features.resize(static_cast<std::size_t>(rows()) * columns.size());
    for (int t = 0; t < rows(); ++t)
        for (std::size_t k = 0; k < columns.size(); ++k)
            out.features[static_cast<std::size_t>(t) * columns.size() + k] = z(t, columns[k]);
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& cell, int line_no, const std::string& column) {
    const std::string t = trim(cell);
    if (t.empty())
        throw DataError("missing value in column '" + column + "' at line " +
                        std::to_string(line_no));
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
        throw DataError("malformed numeric '" + t + "' in column '" + column + "' at line " +
                        std::to_string(line_no));
    return v;
}

struct ParsedCsv {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<int> line_numbers;
};

ParsedCsv parse_numeric_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    ParsedCsv out;
    std::string line;
    int line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto cells = split_csv_line(line);
        if (!have_header) {
            for (const auto& c : cells) out.header.push_back(trim(c));
            have_header = true;
            continue;
        }
        if (cells.size() != out.header.size())
            throw DataError("row at line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(out.header.size()));
        std::vector<double> row(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j)
            row[j] = parse_cell(cells[j], line_no, out.header[j]);
        out.rows.push_back(std::move(row));
        out.line_numbers.push_back(line_no);
    }
    if (!have_header) throw DataError("'" + path + "' has no header row");
    return out;
}

} // namespace

Dataset read_dataset_csv(const std::string& path) {
    const ParsedCsv csv = parse_numeric_csv(path);
    if (csv.header.size() < 2 || csv.header.front() != "t")
        throw DataError("'" + path + "': expected header t,z1,..,zp,d[,eps]");
    bool has_eps = csv.header.back() == "eps";
    const std::size_t d_col = has_eps ? csv.header.size() - 2 : csv.header.size() - 1;
    if (csv.header[d_col] != "d")
        throw DataError("'" + path + "': demand column 'd' not found where expected");

    Dataset ds;
    for (std::size_t j = 1; j < d_col; ++j) ds.feature_names.push_back(csv.header[j]);
    if (has_eps) ds.eps_truth = std::vector<double>{};

    double prev_t = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const auto& row = csv.rows[i];
        if (row[0] <= prev_t)
            throw DataError("duplicate or out-of-order timestamp at line " +
                            std::to_string(csv.line_numbers[i]));
        prev_t = row[0];
        for (std::size_t j = 1; j < d_col; ++j) ds.features.push_back(row[j]);
        ds.demand.push_back(row[d_col]);
        if (has_eps) ds.eps_truth->push_back(row.back());
    }
    if (ds.demand.empty()) throw DataError("'" + path + "' contains no data rows");
    return ds;
}

void write_dataset_csv(const std::string& path, const Dataset& ds, const Metadata& meta) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "# nvcvar dataset v1\n";
    for (const auto& [k, v] : meta) out << "# " << k << "=" << v << "\n";
    out << "t";
    for (const auto& name : ds.feature_names) out << "," << name;
    out << ",d";
    if (ds.eps_truth) out << ",eps";
    out << "\n";
    for (int t = 0; t < ds.rows(); ++t) {
        out << t + 1;
        for (int j = 0; j < ds.cols(); ++j) out << "," << format_double(ds.z(t, j));
        out << "," << format_double(ds.demand[t]);
        if (ds.eps_truth) out << "," << format_double((*ds.eps_truth)[t]);
        out << "\n";
    }
}

void write_metadata(const std::string& path, const Metadata& meta) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    for (const auto& [k, v] : meta) out << k << "=" << v << "\n";
}

Metadata read_metadata(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    Metadata meta;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        meta[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return meta;
}

Dataset read_foodbank_csv(const std::string& path) {
    const ParsedCsv csv = parse_numeric_csv(path);
    std::vector<std::string> expected = {"t"};
    expected.insert(expected.end(), kFoodBankFeatureNames.begin(), kFoodBankFeatureNames.end());
    expected.push_back("d");
    if (csv.header != expected) {
        std::ostringstream oss;
        oss << "'" << path << "': food-bank schema requires header ";
        for (std::size_t i = 0; i < expected.size(); ++i)
            oss << (i ? "," : "") << expected[i];
        throw DataError(oss.str());
    }
    Dataset ds;
    ds.feature_names = kFoodBankFeatureNames;
    const std::size_t p = kFoodBankFeatureNames.size();
    double prev_t = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const auto& row = csv.rows[i];
        if (row[0] <= prev_t)
            throw DataError("duplicate or out-of-order timestamp at line " +
                            std::to_string(csv.line_numbers[i]));
        prev_t = row[0];
        for (std::size_t j = 1; j <= p; ++j) {
            const bool dummy = (j >= p - 1); // holiday_dummy, season_dummy
            if (dummy && row[j] != 0.0 && row[j] != 1.0)
                throw DataError("dummy column '" + expected[j] + "' must be 0/1 at line " +
                                std::to_string(csv.line_numbers[i]));
            ds.features.push_back(row[j]);
        }
        if (!(row[p + 1] >= 0.0) || !std::isfinite(row[p + 1]))
            throw DataError("demand must be finite and non-negative at line " +
                            std::to_string(csv.line_numbers[i]));
        ds.demand.push_back(row[p + 1]);
    }
    if (ds.demand.empty()) throw DataError("'" + path + "' contains no data rows");
    return ds;
}

} // namespace nvcvar
