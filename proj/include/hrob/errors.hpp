#pragma once

#include <stdexcept>
#include <string>

namespace hrob {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IsolatedNodeError : Error {
    int node;
    explicit IsolatedNodeError(int v)
        : Error("IsolatedNode: node " + std::to_string(v) + " has degree 0"), node(v) {}
};

struct EmptyEdgeSetError : Error {
    EmptyEdgeSetError() : Error("EmptyEdgeSet: graph has no edges") {}
};

struct IsolatedTargetError : Error {
    int node;
    explicit IsolatedTargetError(int v)
        : Error("IsolatedTarget: target " + std::to_string(v) + " has degree 0"), node(v) {}
};

struct UnreachableTargetError : Error {
    UnreachableTargetError(int collected, int wanted)
        : Error("UnreachableTarget: BFS exhausted after " + std::to_string(collected) +
                " nodes, wanted " + std::to_string(wanted)) {}
};

struct InfeasibleSpecError : Error {
    using Error::Error;
};

struct ConstructionFailedError : Error {
    using Error::Error;
};

struct SingularConfigurationError : Error {
    using Error::Error;
};

struct NotHeterophilousError : Error {
    using Error::Error;
};

struct MissingClassInTrainError : Error {
    int cls;
    explicit MissingClassInTrainError(int c)
        : Error("MissingClassInTrain: class " + std::to_string(c) + " absent from train set"), cls(c) {}
};

struct EmptyNodeSetError : Error {
    EmptyNodeSetError() : Error("EmptyNodeSet: node list is empty") {}
};

struct DimensionMismatchError : Error {
    using Error::Error;
};

struct InvalidFlipError : Error {
    int u, v;
    InvalidFlipError(int a, int b, const std::string& why)
        : Error("InvalidFlip(" + std::to_string(a) + "," + std::to_string(b) + "): " + why),
          u(a), v(b) {}
};

struct UnsupportedArchError : Error {
    using Error::Error;
};

struct ZeroRowAfterApproximationError : Error {
    int row;
    explicit ZeroRowAfterApproximationError(int r)
        : Error("ZeroRowAfterApproximation: row " + std::to_string(r) +
                " has nonpositive sum; rank too small"), row(r) {}
};

struct DegenerateSchemeError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

} // namespace hrob
