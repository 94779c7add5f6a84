#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace tvec {

// Row-major so each word's vector is contiguous for the kernels.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using SliceLabel = std::int64_t;
using WordId = std::uint32_t;

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyVocabularyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace tvec
