#include "scorespace/score_matrix.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace scorespace {

namespace {

void check_unique(const std::vector<std::string>& ids, const char* what) {
    std::unordered_set<std::string> seen;
    for (const auto& id : ids) {
        if (!seen.insert(id).second) {
            throw std::invalid_argument(std::string("duplicate ") + what + " id: " + id);
        }
    }
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("bad numeric cell: " + s);
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void ScoreMatrix::validate() const {
    if (values.rows() < 2) throw std::invalid_argument("score matrix needs at least 2 instances");
    if (values.cols() < 1) throw std::invalid_argument("score matrix needs at least 1 constraint");
    if (static_cast<Eigen::Index>(constraint_ids.size()) != values.cols())
        throw std::invalid_argument("constraint id count does not match columns");
    if (static_cast<Eigen::Index>(instance_ids.size()) != values.rows())
        throw std::invalid_argument("instance id count does not match rows");
    if (!values.allFinite()) throw std::invalid_argument("score matrix has non-finite entries");
    check_unique(constraint_ids, "constraint");
    check_unique(instance_ids, "instance");
}

void write_csv(const ScoreMatrix& scores, std::ostream& out) {
    out << "instance_id";
    for (const auto& id : scores.constraint_ids) out << ',' << id;
    out << '\n';
    for (Eigen::Index i = 0; i < scores.values.rows(); ++i) {
        out << scores.instance_ids[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < scores.values.cols(); ++j) {
            out << ',' << format_double(scores.values(i, j));
        }
        out << '\n';
    }
}

ScoreMatrix read_score_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty score csv");
    auto header = split_line(line);
    if (header.size() < 2 || header[0] != "instance_id")
        throw std::invalid_argument("score csv header must start with instance_id");

    ScoreMatrix scores;
    scores.constraint_ids.assign(header.begin() + 1, header.end());
    const std::size_t m = scores.constraint_ids.size();

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != m + 1)
            throw std::invalid_argument("score csv row has wrong field count");
        scores.instance_ids.push_back(fields[0]);
        std::vector<double> row(m);
        for (std::size_t j = 0; j < m; ++j) row[j] = parse_double(fields[j + 1]);
        rows.push_back(std::move(row));
    }

    scores.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < m; ++j)
            scores.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    scores.validate();
    return scores;
}

nlohmann::json to_json(const ScoreMatrix& scores) {
    nlohmann::json j;
    j["instance_ids"] = scores.instance_ids;
    j["constraint_ids"] = scores.constraint_ids;
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < scores.values.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (Eigen::Index k = 0; k < scores.values.cols(); ++k) row.push_back(scores.values(i, k));
        rows.push_back(std::move(row));
    }
    j["values"] = std::move(rows);
    return j;
}

ScoreMatrix score_matrix_from_json(const nlohmann::json& j) {
    ScoreMatrix scores;
    scores.instance_ids = j.at("instance_ids").get<std::vector<std::string>>();
    scores.constraint_ids = j.at("constraint_ids").get<std::vector<std::string>>();
    const auto& rows = j.at("values");
    scores.values.resize(static_cast<Eigen::Index>(rows.size()),
                         static_cast<Eigen::Index>(scores.constraint_ids.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != scores.constraint_ids.size())
            throw std::invalid_argument("ragged values array in score matrix json");
        for (std::size_t k = 0; k < row.size(); ++k)
            scores.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                row[k].get<double>();
    }
    scores.validate();
    return scores;
}

}  // namespace scorespace
