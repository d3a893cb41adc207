#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace cirusv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Thrown when a numerical routine cannot deliver its contract
/// (step-size underflow, singular system, ...). Input/precondition
/// violations use std::invalid_argument instead.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cirusv
