#pragma once

// Tape-based reverse-mode automatic differentiation over dense double
// matrices.
//
// A Graph records every primitive applied during a forward evaluation,
// caching each node's value. backward() seeds a scalar node with 1 and sweeps
// the tape in reverse, accumulating adjoints into every differentiable leaf.
//
// Values are handles (graph pointer + node index). A graph must outlive the
// values that refer to it, and it is neither copyable nor movable.
//
// With recording disabled the graph still evaluates every primitive, but keeps
// no operand links and releases a node's storage as soon as the last handle to
// it is dropped. That mode exists to measure the cost of recording.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gradproj/ad/buffer_pool.hpp"

namespace gradproj::ad {

enum class ShapeKind : std::uint8_t { scalar, vector, matrix };

// Vectors are stored as single rows (1 x k); scalars as 1 x 1.
struct Shape {
    ShapeKind kind = ShapeKind::scalar;
    std::size_t rows = 1;
    std::size_t cols = 1;

    static Shape scalar() { return {ShapeKind::scalar, 1, 1}; }
    static Shape vector(std::size_t k) { return {ShapeKind::vector, 1, k}; }
    static Shape matrix(std::size_t r, std::size_t c) { return {ShapeKind::matrix, r, c}; }

    std::size_t size() const { return rows * cols; }
    bool same_dims(const Shape& other) const { return rows == other.rows && cols == other.cols; }
    std::string str() const;

    friend bool operator==(const Shape&, const Shape&) = default;
};

enum class Op : std::uint8_t {
    leaf,
    constant,
    add,
    sub,
    mul,
    scalar_mul,
    matmul,
    transpose,
    row_sum,
    mean_rows,
    exp,
    log,
    pow,
    sqrt,
    div,
    softmax_rows,
    pairwise_sq_dist,
    select_entry,
    stack,
    neg,
    reciprocal_safe,
};

std::string_view op_name(Op op);

// Non-tensor arguments of a primitive.
//   scalar_mul with one operand: `scalar` is the constant factor.
//   pow: `scalar` is the exponent.
//   select_entry: (`row`, `col`) of the selected entry.
struct OpArgs {
    double scalar = 0.0;
    std::size_t row = 0;
    std::size_t col = 0;
};

// Guard used by reciprocal_safe and by the sqrt derivative at zero distance.
inline constexpr double kSafeEpsilon = 1e-12;

enum class Recording : std::uint8_t { enabled, disabled };

class Graph;

// Reference to one node of a Graph (the "ValueRef").
class Value {
public:
    Value() = default;
    Value(const Value& other);
    Value(Value&& other) noexcept;
    Value& operator=(const Value& other);
    Value& operator=(Value&& other) noexcept;
    ~Value();

    bool valid() const { return graph_ != nullptr; }
    Graph* graph() const { return graph_; }
    std::uint32_t index() const { return index_; }

    const Shape& shape() const;
    std::size_t rows() const { return shape().rows; }
    std::size_t cols() const { return shape().cols; }

    // Cached forward value, row-major.
    std::span<const double> data() const;
    double at(std::size_t r, std::size_t c) const;
    // Value of a scalar-shaped node.
    double item() const;

private:
    friend class Graph;
    Value(Graph* g, std::uint32_t index);

    Graph* graph_ = nullptr;
    std::uint32_t index_ = 0;
};

// Adjoints of every differentiable leaf of the graph for one backward pass.
class GradientMap {
public:
    // Adjoint of `leaf`, same layout as its value. Throws for values that are
    // not differentiable leaves of the originating graph.
    std::span<const double> operator[](const Value& leaf) const;
    bool contains(const Value& leaf) const;
    std::size_t size() const { return entries_.size(); }

private:
    friend class Graph;
    const Graph* graph_ = nullptr;
    std::unordered_map<std::uint32_t, std::vector<double>> entries_;
};

class Graph {
public:
    explicit Graph(Recording mode = Recording::enabled);
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;
    Graph(Graph&&) = delete;
    Graph& operator=(Graph&&) = delete;
    ~Graph();

    // Differentiable input. Rejects non-finite entries.
    Value leaf(std::span<const double> values, Shape shape);
    // Non-differentiable input (parameters, masks, initial layouts).
    Value constant(std::span<const double> values, Shape shape);
    Value constant(double value);
    Value filled(Shape shape, double value);

    Value apply(Op op, std::span<const Value> operands, OpArgs args = {});

    // Reverse sweep from a scalar node. Repeatable: adjoint buffers are
    // private to each call and the tape is left untouched.
    GradientMap backward(const Value& output);

    bool recording() const { return mode_ == Recording::enabled; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t leaf_count() const { return leaves_.size(); }
    // Number of completed backward() calls on this graph.
    std::size_t backward_passes() const { return backward_passes_; }

    bool is_leaf(const Value& v) const;
    Op op_of(const Value& v) const;
    // Tape inspection by node index (recording mode keeps operand links).
    std::span<const std::uint32_t> operands_of(std::uint32_t index) const;
    std::span<const double> value_of(std::uint32_t index) const;

private:
    friend class Value;

    struct Node {
        Op op = Op::constant;
        Shape shape;
        std::vector<std::uint32_t> operands;
        OpArgs args;
        Buffer value;
        bool requires_grad = false;
        std::uint32_t refs = 0;
    };

    Value push(Node node);
    void retain(std::uint32_t index);
    void release(std::uint32_t index);
    const Node& node(std::uint32_t index) const { return nodes_[index]; }
    void propagate(std::uint32_t index, const std::vector<double>& grad,
                   std::vector<std::vector<double>>& adjoints) const;

    Recording mode_;
    std::vector<Node> nodes_;
    std::vector<std::uint32_t> leaves_;
    std::size_t backward_passes_ = 0;
};

}  // namespace gradproj::ad
