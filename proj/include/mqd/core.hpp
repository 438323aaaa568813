#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace mqd {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Genome in normalized gene space, every component in [-1, 1].
using Action = Eigen::VectorXd;

/// Final 2D position of the agent or object.
using Behavior = Eigen::Vector2d;

inline constexpr int kBehaviorDims = 2;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class EmptyRepertoire : public Error {
public:
    EmptyRepertoire() : Error("repertoire is empty") {}
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace mqd
