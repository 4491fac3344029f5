#pragma once

#include <Eigen/Core>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <string>

#include "gmm/error.hpp"
#include "gmm/models.hpp"

namespace gmm {

/// decimal: numbers as JSON numbers (shortest text that parses back to the
/// same double, so round-trips are already exact). exact: numbers as C99
/// hex-float strings, making the byte representation itself reproducible.
enum class model_format { decimal, exact };

inline model_format model_format_from_string(const std::string& s) {
    if (s == "decimal") return model_format::decimal;
    if (s == "exact") return model_format::exact;
    throw domain_error("unknown model format: " + s);
}

namespace detail {

using json = nlohmann::json;

inline json encode_double(double v, model_format fmt) {
    if (fmt == model_format::decimal) return v;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", v);
    return std::string(buf);
}

inline double decode_double(const json& j, const std::string& path) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0') throw format_error("not a parseable number: '" + s + "'", path);
        return v;
    }
    throw format_error("expected a number or a number string", path);
}

inline json encode_vector(const Eigen::VectorXd& v, model_format fmt) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(encode_double(v(i), fmt));
    return arr;
}

inline Eigen::VectorXd decode_vector(const json& j, const std::string& path) {
    if (!j.is_array()) throw format_error("expected an array", path);
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = decode_double(j[i], path + "[" + std::to_string(i) + "]");
    return v;
}

inline const json& require(const json& j, const char* key, const std::string& path) {
    const auto it = j.find(key);
    if (it == j.end()) throw format_error("missing field", path + "." + key);
    return *it;
}

inline json encode_kernel(const kernel_spec& k, model_format fmt) {
    json j{{"kind", to_string(k.kind)}};
    if (k.kind == kernel_kind::rbf) j["sigma"] = encode_double(k.sigma, fmt);
    return j;
}

inline kernel_spec decode_kernel(const json& j, const std::string& path) {
    kernel_spec k;
    k.kind = kernel_kind_from_string(require(j, "kind", path).get<std::string>());
    if (k.kind == kernel_kind::rbf) k.sigma = decode_double(require(j, "sigma", path), path + ".sigma");
    return k;
}

inline json encode_influence(const influence_spec& s, model_format fmt) {
    json j{{"kind", to_string(s.kind)}};
    switch (s.kind) {
        case influence_kind::rbf: j["sigma"] = encode_double(s.sigma, fmt); break;
        case influence_kind::ball: j["epsilon"] = encode_double(s.epsilon, fmt); break;
        case influence_kind::triangular: j["rho"] = encode_double(s.rho, fmt); break;
        case influence_kind::knn: j["k"] = s.k; break;
        case influence_kind::identity: break;
    }
    return j;
}

inline influence_spec decode_influence(const json& j, const std::string& path) {
    influence_spec s;
    s.kind = influence_kind_from_string(require(j, "kind", path).get<std::string>());
    switch (s.kind) {
        case influence_kind::rbf: s.sigma = decode_double(require(j, "sigma", path), path + ".sigma"); break;
        case influence_kind::ball: s.epsilon = decode_double(require(j, "epsilon", path), path + ".epsilon"); break;
        case influence_kind::triangular: s.rho = decode_double(require(j, "rho", path), path + ".rho"); break;
        case influence_kind::knn: {
            const json& kj = require(j, "k", path);
            if (!kj.is_number_unsigned()) throw format_error("k must be a nonnegative integer", path + ".k");
            s.k = kj.get<std::size_t>();
            break;
        }
        case influence_kind::identity: break;
    }
    return s;
}

}  // namespace detail

inline std::string serialize_model(const trained_model& model, model_format fmt = model_format::decimal) {
    using detail::json;
    json spec;
    spec["family"] = to_string(model.spec.family);
    spec["kernel"] = detail::encode_kernel(model.spec.kernel, fmt);
    if (model.spec.memory_kernel) spec["memory_kernel"] = detail::encode_kernel(*model.spec.memory_kernel, fmt);
    if (model.spec.influence) spec["influence"] = detail::encode_influence(*model.spec.influence, fmt);
    if (std::isfinite(model.spec.C))
        spec["C"] = detail::encode_double(model.spec.C, fmt);
    else
        spec["C"] = "unbounded";
    if (uses_memory(model.spec.family)) spec["lambda"] = detail::encode_double(model.spec.lambda, fmt);
    if (model.spec.family == model_family::svm_m) spec["tau"] = detail::encode_double(model.spec.tau, fmt);

    json j;
    j["format_version"] = 1;
    j["spec"] = std::move(spec);
    j["b"] = detail::encode_double(model.b, fmt);
    j["alpha"] = detail::encode_vector(model.alpha, fmt);
    if (model.c.size() > 0) j["c"] = detail::encode_vector(model.c, fmt);
    json yj = json::array();
    for (Eigen::Index i = 0; i < model.y.size(); ++i) yj.push_back(static_cast<int>(model.y(i)));
    j["y"] = std::move(yj);

    json xj;
    xj["rows"] = model.X.rows();
    xj["cols"] = model.X.cols();
    json data = json::array();
    for (Eigen::Index r = 0; r < model.X.rows(); ++r)
        for (Eigen::Index c = 0; c < model.X.cols(); ++c) data.push_back(detail::encode_double(model.X(r, c), fmt));
    xj["data"] = std::move(data);
    j["support_x"] = std::move(xj);

    if (model.influence && model.influence->spec.kind == influence_kind::knn)
        j["knn_radii"] = detail::encode_vector(model.influence->radii, fmt);
    if (model.scaler) {
        j["scaler"] = {{"lo", detail::encode_vector(model.scaler->lo, fmt)},
                       {"hi", detail::encode_vector(model.scaler->hi, fmt)}};
    }
    j["diagnostics"] = {{"objective", detail::encode_double(model.diagnostics.objective, fmt)},
                        {"kkt_violation", detail::encode_double(model.diagnostics.kkt_violation, fmt)},
                        {"iterations", model.diagnostics.iterations},
                        {"status", to_string(model.diagnostics.status)},
                        {"single_class", model.diagnostics.single_class},
                        {"degenerate_bias", model.diagnostics.degenerate_bias}};
    return j.dump(2) + "\n";
}

inline trained_model parse_model(const std::string& text) {
    using detail::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw format_error(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        const json& version = detail::require(j, "format_version", "$");
        if (!version.is_number_integer() || version.get<int>() != 1)
            throw format_error("unsupported format_version " + version.dump(), "$.format_version");

        trained_model model;
        const json& spec = detail::require(j, "spec", "$");
        model.spec.family = model_family_from_string(detail::require(spec, "family", "$.spec").get<std::string>());
        model.spec.kernel = detail::decode_kernel(detail::require(spec, "kernel", "$.spec"), "$.spec.kernel");
        if (spec.contains("memory_kernel"))
            model.spec.memory_kernel = detail::decode_kernel(spec["memory_kernel"], "$.spec.memory_kernel");
        if (spec.contains("influence"))
            model.spec.influence = detail::decode_influence(spec["influence"], "$.spec.influence");
        const json& cj = detail::require(spec, "C", "$.spec");
        if (cj.is_string() && cj.get<std::string>() == "unbounded")
            model.spec.C = unbounded;
        else
            model.spec.C = detail::decode_double(cj, "$.spec.C");
        if (spec.contains("lambda")) model.spec.lambda = detail::decode_double(spec["lambda"], "$.spec.lambda");
        if (spec.contains("tau")) model.spec.tau = detail::decode_double(spec["tau"], "$.spec.tau");
        try {
            model.spec.validate();
        } catch (const error& e) {
            throw format_error(std::string("invalid model specification: ") + e.what(), "$.spec");
        }

        model.b = detail::decode_double(detail::require(j, "b", "$"), "$.b");
        model.alpha = detail::decode_vector(detail::require(j, "alpha", "$"), "$.alpha");
        if (j.contains("c")) model.c = detail::decode_vector(j["c"], "$.c");

        const json& xj = detail::require(j, "support_x", "$");
        const auto rows = static_cast<Eigen::Index>(detail::require(xj, "rows", "$.support_x").get<std::int64_t>());
        const auto cols = static_cast<Eigen::Index>(detail::require(xj, "cols", "$.support_x").get<std::int64_t>());
        const json& data = detail::require(xj, "data", "$.support_x");
        if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size())
            throw format_error("shape does not match data length", "$.support_x");
        model.X.resize(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c)
                model.X(r, c) = detail::decode_double(data[static_cast<std::size_t>(r * cols + c)],
                                                      "$.support_x.data[" + std::to_string(r * cols + c) + "]");

        const json& yj = detail::require(j, "y", "$");
        if (!yj.is_array() || static_cast<Eigen::Index>(yj.size()) != rows)
            throw format_error("label array must have one entry per support row", "$.y");
        model.y.resize(rows);
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double v = detail::decode_double(yj[static_cast<std::size_t>(i)],
                                                   "$.y[" + std::to_string(i) + "]");
            if (v != 1.0 && v != -1.0) throw format_error("labels must be +1 or -1", "$.y[" + std::to_string(i) + "]");
            model.y(i) = v;
        }
        if (model.alpha.size() != rows) throw format_error("alpha length must match support rows", "$.alpha");
        if (model.c.size() > 0 && model.c.size() != rows)
            throw format_error("memory-cost length must match support rows", "$.c");

        if (uses_memory(model.spec.family) && model.c.size() > 0) {
            influence_model im;
            im.spec = *model.spec.influence;
            im.anchors = model.X;
            if (im.spec.kind == influence_kind::knn) {
                im.radii = detail::decode_vector(detail::require(j, "knn_radii", "$"), "$.knn_radii");
                if (im.radii.size() != rows)
                    throw format_error("knn radius list must match support rows", "$.knn_radii");
            }
            model.influence = std::move(im);
        }
        if (j.contains("scaler")) {
            minmax_scaler s;
            s.lo = detail::decode_vector(detail::require(j["scaler"], "lo", "$.scaler"), "$.scaler.lo");
            s.hi = detail::decode_vector(detail::require(j["scaler"], "hi", "$.scaler"), "$.scaler.hi");
            if (s.lo.size() != cols || s.hi.size() != cols)
                throw format_error("scaler bounds must have one entry per feature", "$.scaler");
            model.scaler = std::move(s);
        }
        if (j.contains("diagnostics")) {
            const json& dj = j["diagnostics"];
            if (dj.contains("objective")) model.diagnostics.objective = detail::decode_double(dj["objective"], "$.diagnostics.objective");
            if (dj.contains("kkt_violation"))
                model.diagnostics.kkt_violation = detail::decode_double(dj["kkt_violation"], "$.diagnostics.kkt_violation");
            if (dj.contains("iterations")) model.diagnostics.iterations = dj["iterations"].get<std::size_t>();
            if (dj.contains("status")) {
                const std::string st = dj["status"].get<std::string>();
                if (st == "converged")
                    model.diagnostics.status = solve_status::converged;
                else if (st == "max_iter")
                    model.diagnostics.status = solve_status::max_iter;
                else if (st == "infeasible")
                    model.diagnostics.status = solve_status::infeasible;
                else
                    throw format_error("unknown solver status '" + st + "'", "$.diagnostics.status");
            }
            if (dj.contains("single_class")) model.diagnostics.single_class = dj["single_class"].get<bool>();
            if (dj.contains("degenerate_bias"))
                model.diagnostics.degenerate_bias = dj["degenerate_bias"].get<bool>();
        }
        return model;
    } catch (const json::exception& e) {
        throw format_error(std::string("malformed model document: ") + e.what());
    }
}

inline void save_model(const trained_model& model, const std::filesystem::path& path,
                       model_format fmt = model_format::decimal) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write '" + path.string() + "'");
    out << serialize_model(model, fmt);
    if (!out) throw data_error("write failed for '" + path.string() + "'");
}

inline trained_model load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open '" + path.string() + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_model(text);
}

}  // namespace gmm
