#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gmm {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Argument outside its documented domain (bad fraction, k >= m, ...).
struct domain_error : error {
    using error::error;
};

/// Malformed input file. `line` is 1-based, 0 when not tied to a line.
struct parse_error : error {
    parse_error(const std::string& msg, std::size_t line_number)
        : error(msg + " (line " + std::to_string(line_number) + ")"), line(line_number) {}
    std::size_t line;
};

struct label_error : error {
    using error::error;
};

/// A class does not have enough samples for the requested draw.
struct capacity_error : error {
    using error::error;
};

struct data_error : error {
    using error::error;
};

/// Model specification is inconsistent (missing family fields, shape mismatch).
struct spec_error : error {
    using error::error;
};

/// The dual Q matrix exposed negative curvature on a working pair.
struct curvature_error : error {
    curvature_error(const std::string& msg, std::ptrdiff_t pi, std::ptrdiff_t pj)
        : error(msg), i(pi), j(pj) {}
    explicit curvature_error(const std::string& msg) : error(msg), i(-1), j(-1) {}
    std::ptrdiff_t i, j;
};

struct infeasible_error : error {
    using error::error;
};

struct oracle_error : error {
    using error::error;
};

/// Corrupt or unreadable model file. `path` is the JSON field path.
struct format_error : error {
    explicit format_error(const std::string& msg, std::string field_path = {})
        : error(field_path.empty() ? msg : msg + " at " + field_path),
          path(std::move(field_path)) {}
    std::string path;
};

}  // namespace gmm
