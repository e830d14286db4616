#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace mibci::detail {

inline nlohmann::json to_json(const Eigen::VectorXd& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline nlohmann::json to_json(const Eigen::VectorXi& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline nlohmann::json to_json(const Eigen::MatrixXd& m) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(row);
    }
    return out;
}

inline Eigen::VectorXd dvector_from_json(const nlohmann::json& j) {
    Eigen::VectorXd v(j.size());
    Eigen::Index i = 0;
    for (const auto& x : j) v(i++) = x.get<double>();
    return v;
}

inline Eigen::VectorXi ivector_from_json(const nlohmann::json& j) {
    Eigen::VectorXi v(j.size());
    Eigen::Index i = 0;
    for (const auto& x : j) v(i++) = x.get<int>();
    return v;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
    }
    return m;
}

}  // namespace mibci::detail
