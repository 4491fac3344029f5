#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "gmm/error.hpp"
#include "gmm/rng.hpp"

namespace gmm {

/// Training samples: one row of X per sample, labels strictly -1 or +1.
/// The diagonal label matrix used by the formulas is never materialized;
/// labels enter computations as a vector.
struct dataset {
    Eigen::MatrixXd X;
    Eigen::VectorXi y;
    std::string name;
    std::vector<std::string> feature_names;  // empty when the source had no header

    Eigen::Index size() const { return X.rows(); }
    Eigen::Index features() const { return X.cols(); }

    Eigen::VectorXd y_real() const { return y.cast<double>(); }

    void validate() const {
        if (X.rows() != y.size()) throw data_error("feature rows and label count differ");
        if (X.rows() < 1 || X.cols() < 1) throw data_error("dataset must have at least one sample and one feature");
        for (Eigen::Index i = 0; i < y.size(); ++i)
            if (y(i) != 1 && y(i) != -1)
                throw label_error("label at row " + std::to_string(i) + " is " + std::to_string(y(i)) +
                                  ", expected -1 or +1");
    }
};

/// One train/test split. Indices refer to rows of the originating dataset.
struct split_plan {
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
    std::uint64_t seed = 0;
    std::string descriptor;
};

inline dataset subset(const dataset& ds, const std::vector<std::size_t>& indices) {
    dataset out;
    out.X.resize(static_cast<Eigen::Index>(indices.size()), ds.X.cols());
    out.y.resize(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t r = 0; r < indices.size(); ++r) {
        out.X.row(static_cast<Eigen::Index>(r)) = ds.X.row(static_cast<Eigen::Index>(indices[r]));
        out.y(static_cast<Eigen::Index>(r)) = ds.y(static_cast<Eigen::Index>(indices[r]));
    }
    out.name = ds.name;
    out.feature_names = ds.feature_names;
    return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        std::string field = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        const auto first = field.find_first_not_of(" \t");
        const auto last = field.find_last_not_of(" \t");
        fields.push_back(first == std::string::npos ? std::string{} : field.substr(first, last - first + 1));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

inline double parse_number(const std::string& token, std::size_t line_number) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size())
        throw parse_error("cannot parse number from '" + token + "'", line_number);
    return value;
}

}  // namespace detail

/// Loads a comma-separated file. Labels must all be in {-1, 0, +1}; a {0, 1}
/// file is remapped to {-1, +1} (0 becomes -1), but 0 and -1 in the same file
/// is rejected as ambiguous. No scaling is applied.
inline dataset load_csv(const std::filesystem::path& path, Eigen::Index label_column = 0, bool has_header = false) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open '" + path.string() + "'");

    dataset ds;
    ds.name = path.stem().string();

    std::string line;
    std::size_t line_number = 0;
    Eigen::Index columns = -1;

    if (has_header) {
        if (!std::getline(in, line)) throw data_error("empty dataset: '" + path.string() + "'");
        ++line_number;
        const auto fields = detail::split_csv_line(line);
        columns = static_cast<Eigen::Index>(fields.size());
        if (label_column < 0 || label_column >= columns)
            throw parse_error("label column " + std::to_string(label_column) + " out of range for " +
                                  std::to_string(columns) + " columns",
                              line_number);
        for (Eigen::Index c = 0; c < columns; ++c)
            if (c != label_column) ds.feature_names.push_back(fields[static_cast<std::size_t>(c)]);
    }

    std::vector<double> labels;
    std::vector<double> values;  // row-major feature buffer
    while (std::getline(in, line)) {
        ++line_number;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() == 1 && fields[0].empty()) throw parse_error("blank line", line_number);
        if (columns < 0) {
            columns = static_cast<Eigen::Index>(fields.size());
            if (label_column < 0 || label_column >= columns)
                throw parse_error("label column " + std::to_string(label_column) + " out of range for " +
                                      std::to_string(columns) + " columns",
                                  line_number);
            if (columns < 2) throw parse_error("need a label column and at least one feature", line_number);
        }
        if (static_cast<Eigen::Index>(fields.size()) != columns)
            throw parse_error("expected " + std::to_string(columns) + " columns, found " +
                                  std::to_string(fields.size()),
                              line_number);
        for (Eigen::Index c = 0; c < columns; ++c) {
            const double v = detail::parse_number(fields[static_cast<std::size_t>(c)], line_number);
            if (c == label_column) {
                if (v != 1.0 && v != -1.0 && v != 0.0)
                    throw label_error("label '" + fields[static_cast<std::size_t>(c)] + "' at line " +
                                      std::to_string(line_number) + " is not in {-1, 0, +1}");
                labels.push_back(v);
            } else {
                values.push_back(v);
            }
        }
    }
    if (labels.empty()) throw data_error("empty dataset: '" + path.string() + "'");

    const bool has_zero = std::find(labels.begin(), labels.end(), 0.0) != labels.end();
    const bool has_minus = std::find(labels.begin(), labels.end(), -1.0) != labels.end();
    if (has_zero && has_minus)
        throw label_error("labels mix 0 and -1 in '" + path.string() + "'; cannot infer the negative class");

    const Eigen::Index m = static_cast<Eigen::Index>(labels.size());
    const Eigen::Index n = columns - 1;
    ds.X.resize(m, n);
    ds.y.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        ds.y(i) = labels[static_cast<std::size_t>(i)] == 0.0 ? -1 : static_cast<int>(labels[static_cast<std::size_t>(i)]);
        for (Eigen::Index c = 0; c < n; ++c) ds.X(i, c) = values[static_cast<std::size_t>(i * n + c)];
    }
    ds.validate();
    return ds;
}

/// Writes the companion format: label in the requested column (default first),
/// features at 17 significant digits so re-loading reproduces every double.
inline void write_csv(const dataset& ds, const std::filesystem::path& path, Eigen::Index label_column = 0) {
    ds.validate();
    const Eigen::Index n = ds.features();
    if (label_column < 0 || label_column > n)
        throw domain_error("label column " + std::to_string(label_column) + " out of range");
    std::ofstream out(path);
    if (!out) throw data_error("cannot write '" + path.string() + "'");

    char buf[64];
    if (!ds.feature_names.empty()) {
        Eigen::Index f = 0;
        for (Eigen::Index c = 0; c <= n; ++c) {
            if (c > 0) out << ',';
            if (c == label_column)
                out << "label";
            else
                out << (f < static_cast<Eigen::Index>(ds.feature_names.size())
                            ? ds.feature_names[static_cast<std::size_t>(f++)]
                            : "f" + std::to_string(f++));
        }
        out << '\n';
    }
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
        Eigen::Index f = 0;
        for (Eigen::Index c = 0; c <= n; ++c) {
            if (c > 0) out << ',';
            if (c == label_column) {
                out << ds.y(i);
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", ds.X(i, f++));
                out << buf;
            }
        }
        out << '\n';
    }
    if (!out) throw data_error("write failed for '" + path.string() + "'");
}

/// Returns a copy with exactly floor(fraction*m + 0.5) labels negated, the
/// flipped set drawn uniformly without replacement by `seed`.
inline dataset inject_label_noise(const dataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw domain_error("noise fraction must lie in [0, 1], got " + std::to_string(fraction));
    ds.validate();
    dataset out = ds;
    const auto m = static_cast<std::size_t>(ds.size());
    const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(m) + 0.5));
    auto rng = make_rng(seed);
    for (const std::size_t idx : sample_without_replacement(rng, m, count))
        out.y(static_cast<Eigen::Index>(idx)) = -out.y(static_cast<Eigen::Index>(idx));
    return out;
}

/// Training set with exactly `per_class` samples of each class, drawn
/// uniformly by `seed` (positives first, then negatives); test is the
/// complement. Indices come back sorted ascending.
inline split_plan stratified_subsample(const dataset& ds, std::size_t per_class, std::uint64_t seed) {
    ds.validate();
    std::vector<std::size_t> pos, neg;
    for (Eigen::Index i = 0; i < ds.size(); ++i)
        (ds.y(i) > 0 ? pos : neg).push_back(static_cast<std::size_t>(i));
    if (pos.size() < per_class)
        throw capacity_error("positive class has " + std::to_string(pos.size()) + " samples, need " +
                             std::to_string(per_class));
    if (neg.size() < per_class)
        throw capacity_error("negative class has " + std::to_string(neg.size()) + " samples, need " +
                             std::to_string(per_class));

    auto rng = make_rng(seed);
    split_plan plan;
    plan.seed = seed;
    plan.descriptor = "subsample-" + std::to_string(per_class) + "-seed-" + std::to_string(seed);
    for (const std::size_t k : sample_without_replacement(rng, pos.size(), per_class))
        plan.train_indices.push_back(pos[k]);
    for (const std::size_t k : sample_without_replacement(rng, neg.size(), per_class))
        plan.train_indices.push_back(neg[k]);
    std::sort(plan.train_indices.begin(), plan.train_indices.end());

    const std::set<std::size_t> chosen(plan.train_indices.begin(), plan.train_indices.end());
    for (std::size_t i = 0; i < static_cast<std::size_t>(ds.size()); ++i)
        if (!chosen.count(i)) plan.test_indices.push_back(i);
    return plan;
}

/// One plan per sample: plan i tests on sample i alone.
inline std::vector<split_plan> loo_splits(const dataset& ds) {
    ds.validate();
    const auto m = static_cast<std::size_t>(ds.size());
    if (m < 2) throw domain_error("leave-one-out needs at least 2 samples, got " + std::to_string(m));
    std::vector<split_plan> plans(m);
    for (std::size_t i = 0; i < m; ++i) {
        plans[i].descriptor = "loo-fold-" + std::to_string(i);
        plans[i].test_indices = {i};
        plans[i].train_indices.reserve(m - 1);
        for (std::size_t j = 0; j < m; ++j)
            if (j != i) plans[i].train_indices.push_back(j);
    }
    return plans;
}

/// Per-feature affine map onto [0, 1] fitted on training data. Constant
/// features map to 0. Applying the trained map to unseen data can fall
/// outside [0, 1]; values are not clipped.
struct minmax_scaler {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    static minmax_scaler fit(const Eigen::Ref<const Eigen::MatrixXd>& X) {
        minmax_scaler s;
        s.lo = X.colwise().minCoeff();
        s.hi = X.colwise().maxCoeff();
        return s;
    }

    Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
        if (X.cols() != lo.size()) throw domain_error("scaler was fitted on a different feature count");
        Eigen::MatrixXd out(X.rows(), X.cols());
        for (Eigen::Index c = 0; c < X.cols(); ++c) {
            const double span = hi(c) - lo(c);
            if (span == 0.0)
                out.col(c).setZero();
            else
                out.col(c) = (X.col(c).array() - lo(c)) / span;
        }
        return out;
    }
};

}  // namespace gmm
