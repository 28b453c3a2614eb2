#pragma once

#include <stdexcept>
#include <string>

namespace parsefuse {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// CoNLL-U / dataset / feature ingestion
struct MalformedLine : Error {
    explicit MalformedLine(const std::string& m) : Error("malformed line: " + m) {}
};
struct DuplicateIndex : Error {
    explicit DuplicateIndex(const std::string& m) : Error("duplicate token index: " + m) {}
};
struct NonTree : Error {
    explicit NonTree(const std::string& m) : Error("not a tree: " + m) {}
};
struct TokenizationMismatch : Error {
    explicit TokenizationMismatch(const std::string& m) : Error("tokenization mismatch: " + m) {}
};
struct UnknownLabel : Error {
    explicit UnknownLabel(const std::string& m) : Error("unknown label: " + m) {}
};
struct SpanOutOfRange : Error {
    explicit SpanOutOfRange(const std::string& m) : Error("span out of range: " + m) {}
};
struct MissingField : Error {
    explicit MissingField(const std::string& m) : Error("missing field: " + m) {}
};
struct WidthMismatch : Error {
    explicit WidthMismatch(const std::string& m) : Error("feature width mismatch: " + m) {}
};
struct NonCoveringAlignment : Error {
    explicit NonCoveringAlignment(const std::string& m) : Error("non-covering alignment: " + m) {}
};
struct NonMonotoneAlignment : Error {
    explicit NonMonotoneAlignment(const std::string& m) : Error("non-monotone alignment: " + m) {}
};

// Graph algebra
struct NodeCountMismatch : Error {
    explicit NodeCountMismatch(const std::string& m) : Error("node count mismatch: " + m) {}
};

// Numeric core
struct ShapeMismatch : Error {
    explicit ShapeMismatch(const std::string& m) : Error("shape mismatch: " + m) {}
};
struct EmptyMaskRow : Error {
    explicit EmptyMaskRow(const std::string& m) : Error("empty mask row: " + m) {}
};
struct IndexOutOfRange : Error {
    explicit IndexOutOfRange(const std::string& m) : Error("index out of range: " + m) {}
};
struct DetachedGraph : Error {
    explicit DetachedGraph(const std::string& m) : Error("detached graph: " + m) {}
};
struct BackwardAlreadyRun : Error {
    explicit BackwardAlreadyRun(const std::string& m) : Error("backward already run: " + m) {}
};
struct NonFiniteValue : Error {
    explicit NonFiniteValue(const std::string& m) : Error("non-finite value: " + m) {}
};

// Model
struct PositionOverflow : Error {
    explicit PositionOverflow(const std::string& m) : Error("position overflow: " + m) {}
};
struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& m) : Error("dimension mismatch: " + m) {}
};

// Training harness
struct TooSmall : Error {
    explicit TooSmall(const std::string& m) : Error("dataset too small: " + m) {}
};
struct InvalidConfig : Error {
    explicit InvalidConfig(const std::string& m) : Error("invalid config: " + m) {}
};
struct NonFiniteLoss : Error {
    explicit NonFiniteLoss(const std::string& m) : Error("non-finite loss: " + m) {}
};
struct CheckpointError : Error {
    explicit CheckpointError(const std::string& m) : Error("checkpoint error: " + m) {}
};

}  // namespace parsefuse
