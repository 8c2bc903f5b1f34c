#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gsde {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A field or operator produced a non-finite value, or could not be evaluated.
class EvaluationError : public Error {
public:
    EvaluationError(const std::string& what, Vec point)
        : Error(what + " at " + format_point(point)), point_(std::move(point)) {}

    const Vec& point() const noexcept { return point_; }

    static std::string format_point(const Vec& x);

private:
    Vec point_;
};

/// Bad user input (configuration, schema, dimension mismatches).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A structural tag (antisymmetric, symmetric PSD) is violated at a point.
class StructureError : public Error {
public:
    StructureError(const std::string& what, Vec point, Mat matrix)
        : Error(what), point_(std::move(point)), matrix_(std::move(matrix)) {}

    const Vec& point() const noexcept { return point_; }
    const Mat& matrix() const noexcept { return matrix_; }

private:
    Vec point_;
    Mat matrix_;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

} // namespace gsde
