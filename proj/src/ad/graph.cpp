#include "gradproj/ad/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "gradproj/errors.hpp"
#include "gradproj/kernels.hpp"

namespace gradproj::ad {

std::string Shape::str() const {
    std::ostringstream out;
    switch (kind) {
        case ShapeKind::scalar:
            out << "scalar";
            break;
        case ShapeKind::vector:
            out << "vector(" << cols << ")";
            break;
        case ShapeKind::matrix:
            out << "matrix(" << rows << "," << cols << ")";
            break;
    }
    return out.str();
}

std::string_view op_name(Op op) {
    switch (op) {
        case Op::leaf: return "leaf";
        case Op::constant: return "constant";
        case Op::add: return "add";
        case Op::sub: return "sub";
        case Op::mul: return "mul";
        case Op::scalar_mul: return "scalar_mul";
        case Op::matmul: return "matmul";
        case Op::transpose: return "transpose";
        case Op::row_sum: return "row_sum";
        case Op::mean_rows: return "mean_rows";
        case Op::exp: return "exp";
        case Op::log: return "log";
        case Op::pow: return "pow";
        case Op::sqrt: return "sqrt";
        case Op::div: return "div";
        case Op::softmax_rows: return "softmax_rows";
        case Op::pairwise_sq_dist: return "pairwise_sq_dist";
        case Op::select_entry: return "select_entry";
        case Op::stack: return "stack";
        case Op::neg: return "neg";
        case Op::reciprocal_safe: return "reciprocal_safe";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Value

Value::Value(Graph* g, std::uint32_t index) : graph_(g), index_(index) {}

Value::Value(const Value& other) : graph_(other.graph_), index_(other.index_) {
    if (graph_ != nullptr) graph_->retain(index_);
}

Value::Value(Value&& other) noexcept : graph_(other.graph_), index_(other.index_) {
    other.graph_ = nullptr;
}

Value& Value::operator=(const Value& other) {
    if (this != &other) {
        if (other.graph_ != nullptr) other.graph_->retain(other.index_);
        if (graph_ != nullptr) graph_->release(index_);
        graph_ = other.graph_;
        index_ = other.index_;
    }
    return *this;
}

Value& Value::operator=(Value&& other) noexcept {
    if (this != &other) {
        if (graph_ != nullptr) graph_->release(index_);
        graph_ = other.graph_;
        index_ = other.index_;
        other.graph_ = nullptr;
    }
    return *this;
}

Value::~Value() {
    if (graph_ != nullptr) graph_->release(index_);
}

const Shape& Value::shape() const {
    if (graph_ == nullptr) throw std::logic_error("Value: empty handle");
    return graph_->node(index_).shape;
}

std::span<const double> Value::data() const {
    if (graph_ == nullptr) throw std::logic_error("Value: empty handle");
    return graph_->node(index_).value;
}

double Value::at(std::size_t r, std::size_t c) const {
    const Shape& s = shape();
    if (r >= s.rows || c >= s.cols) throw std::out_of_range("Value::at: index outside " + s.str());
    return data()[r * s.cols + c];
}

double Value::item() const {
    if (shape().size() != 1) throw std::invalid_argument("Value::item: not scalar-shaped: " + shape().str());
    return data()[0];
}

// ---------------------------------------------------------------------------
// GradientMap

std::span<const double> GradientMap::operator[](const Value& leaf) const {
    if (leaf.graph() != graph_) throw std::invalid_argument("GradientMap: value belongs to a different graph");
    auto it = entries_.find(leaf.index());
    if (it == entries_.end()) throw std::invalid_argument("GradientMap: value is not a differentiable leaf");
    return it->second;
}

bool GradientMap::contains(const Value& leaf) const {
    return leaf.graph() == graph_ && entries_.contains(leaf.index());
}

// ---------------------------------------------------------------------------
// Graph

namespace {

[[noreturn]] void shape_error(Op op, const std::string& detail) {
    throw std::invalid_argument(std::string(op_name(op)) + ": shape mismatch: " + detail);
}

void require_dims(Op op, const Shape& a, const Shape& b) {
    if (!a.same_dims(b)) shape_error(op, "expected " + a.str() + ", got " + b.str());
}

void check_finite_input(std::span<const double> values, const char* what) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw NumericError(std::string(what) + ": non-finite input at index " + std::to_string(i));
        }
    }
}

}  // namespace

Graph::Graph(Recording mode) : mode_(mode) {}

Graph::~Graph() = default;

void Graph::retain(std::uint32_t index) { ++nodes_[index].refs; }

void Graph::release(std::uint32_t index) {
    Node& n = nodes_[index];
    if (--n.refs == 0 && mode_ == Recording::disabled) {
        Buffer().swap(n.value);
    }
}

Value Graph::push(Node node) {
    node.refs = 1;
    nodes_.push_back(std::move(node));
    return Value(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Value Graph::leaf(std::span<const double> values, Shape shape) {
    if (values.size() != shape.size()) {
        throw std::invalid_argument("leaf: " + std::to_string(values.size()) + " values for shape " + shape.str());
    }
    check_finite_input(values, "leaf");
    Node n;
    n.op = Op::leaf;
    n.shape = shape;
    n.value.assign(values.begin(), values.end());
    n.requires_grad = true;
    Value v = push(std::move(n));
    leaves_.push_back(v.index());
    return v;
}

Value Graph::constant(std::span<const double> values, Shape shape) {
    if (values.size() != shape.size()) {
        throw std::invalid_argument("constant: " + std::to_string(values.size()) + " values for shape " + shape.str());
    }
    check_finite_input(values, "constant");
    Node n;
    n.op = Op::constant;
    n.shape = shape;
    n.value.assign(values.begin(), values.end());
    return push(std::move(n));
}

Value Graph::constant(double value) { return constant(std::span<const double>(&value, 1), Shape::scalar()); }

Value Graph::filled(Shape shape, double value) {
    std::vector<double> values(shape.size(), value);
    return constant(values, shape);
}

bool Graph::is_leaf(const Value& v) const { return v.graph() == this && nodes_[v.index()].op == Op::leaf; }

Op Graph::op_of(const Value& v) const { return nodes_[v.index()].op; }

std::span<const std::uint32_t> Graph::operands_of(std::uint32_t index) const { return nodes_.at(index).operands; }

std::span<const double> Graph::value_of(std::uint32_t index) const { return nodes_.at(index).value; }

Value Graph::apply(Op op, std::span<const Value> operands, OpArgs args) {
    for (const Value& v : operands) {
        if (v.graph() != this) throw std::invalid_argument(std::string(op_name(op)) + ": operand from another graph");
    }
    auto arity = [&](std::size_t want) {
        if (operands.size() != want) {
            throw std::invalid_argument(std::string(op_name(op)) + ": expected " + std::to_string(want) +
                                        " operands, got " + std::to_string(operands.size()));
        }
    };
    auto val = [&](std::size_t i) -> const Buffer& { return nodes_[operands[i].index()].value; };
    auto shp = [&](std::size_t i) -> const Shape& { return nodes_[operands[i].index()].shape; };

    const kernels::Table& k = kernels::active();
    Node out;
    out.op = op;
    out.args = args;

    switch (op) {
        case Op::leaf:
        case Op::constant:
            throw std::invalid_argument("apply: use Graph::leaf or Graph::constant");

        case Op::add:
        case Op::sub:
        case Op::mul:
        case Op::div: {
            arity(2);
            require_dims(op, shp(0), shp(1));
            out.shape = shp(0);
            const auto& a = val(0);
            const auto& b = val(1);
            out.value.resize(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) {
                switch (op) {
                    case Op::add: out.value[i] = a[i] + b[i]; break;
                    case Op::sub: out.value[i] = a[i] - b[i]; break;
                    case Op::mul: out.value[i] = a[i] * b[i]; break;
                    default:
                        if (b[i] == 0.0) throw NumericError("div: division by zero at entry " + std::to_string(i));
                        out.value[i] = a[i] / b[i];
                        break;
                }
            }
            break;
        }

        case Op::scalar_mul: {
            if (operands.size() == 1) {
                out.shape = shp(0);
                out.value = val(0);
                for (double& x : out.value) x *= args.scalar;
            } else {
                arity(2);
                if (shp(0).size() != 1) shape_error(op, "factor must be scalar, got " + shp(0).str());
                out.shape = shp(1);
                const double s = val(0)[0];
                out.value = val(1);
                for (double& x : out.value) x *= s;
            }
            break;
        }

        case Op::matmul: {
            arity(2);
            const Shape& a = shp(0);
            const Shape& b = shp(1);
            if (a.cols != b.rows) shape_error(op, a.str() + " x " + b.str());
            out.shape = (a.rows == 1 && b.cols == 1) ? Shape::scalar()
                        : (a.rows == 1 && a.kind != ShapeKind::matrix) ? Shape::vector(b.cols)
                                                                       : Shape::matrix(a.rows, b.cols);
            out.value.assign(a.rows * b.cols, 0.0);
            k.gemm_nn(val(0).data(), val(1).data(), out.value.data(), a.rows, a.cols, b.cols);
            break;
        }

        case Op::transpose: {
            arity(1);
            const Shape& a = shp(0);
            out.shape = Shape::matrix(a.cols, a.rows);
            out.value.resize(a.size());
            const auto& x = val(0);
            for (std::size_t r = 0; r < a.rows; ++r)
                for (std::size_t c = 0; c < a.cols; ++c) out.value[c * a.rows + r] = x[r * a.cols + c];
            break;
        }

        case Op::row_sum: {
            arity(1);
            const Shape& a = shp(0);
            out.shape = a.rows == 1 ? Shape::scalar() : Shape::matrix(a.rows, 1);
            out.value.assign(a.rows, 0.0);
            const auto& x = val(0);
            for (std::size_t r = 0; r < a.rows; ++r) {
                double s = 0.0;
                for (std::size_t c = 0; c < a.cols; ++c) s += x[r * a.cols + c];
                out.value[r] = s;
            }
            break;
        }

        case Op::mean_rows: {
            arity(1);
            const Shape& a = shp(0);
            if (a.rows == 0) shape_error(op, "no rows to average");
            out.shape = Shape::vector(a.cols);
            out.value.assign(a.cols, 0.0);
            const auto& x = val(0);
            // Each column is summed in ascending value order, so the result is
            // exactly invariant under row permutations.
            std::vector<double> column(a.rows);
            for (std::size_t c = 0; c < a.cols; ++c) {
                for (std::size_t r = 0; r < a.rows; ++r) column[r] = x[r * a.cols + c];
                std::sort(column.begin(), column.end());
                double s = 0.0;
                for (double v : column) s += v;
                out.value[c] = s / static_cast<double>(a.rows);
            }
            break;
        }

        case Op::exp:
        case Op::log:
        case Op::sqrt:
        case Op::neg:
        case Op::reciprocal_safe:
        case Op::pow: {
            arity(1);
            out.shape = shp(0);
            const auto& x = val(0);
            out.value.resize(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double xi = x[i];
                double y = 0.0;
                switch (op) {
                    case Op::exp: y = std::exp(xi); break;
                    case Op::log:
                        if (!(xi > 0.0)) throw NumericError("log: non-positive argument at entry " + std::to_string(i));
                        y = std::log(xi);
                        break;
                    case Op::sqrt:
                        if (xi < 0.0) throw NumericError("sqrt: negative argument at entry " + std::to_string(i));
                        y = std::sqrt(xi);
                        break;
                    case Op::neg: y = -xi; break;
                    case Op::reciprocal_safe: y = std::abs(xi) > kSafeEpsilon ? 1.0 / xi : 0.0; break;
                    default:
                        if (xi < 0.0 && std::trunc(args.scalar) != args.scalar) {
                            throw NumericError("pow: negative base with fractional exponent at entry " + std::to_string(i));
                        }
                        if (xi == 0.0 && args.scalar < 0.0) {
                            throw NumericError("pow: zero base with negative exponent at entry " + std::to_string(i));
                        }
                        y = std::pow(xi, args.scalar);
                        break;
                }
                out.value[i] = y;
            }
            break;
        }

        case Op::softmax_rows: {
            arity(1);
            const Shape& a = shp(0);
            out.shape = a;
            const auto& x = val(0);
            out.value.resize(x.size());
            for (std::size_t r = 0; r < a.rows; ++r) {
                const double* xr = x.data() + r * a.cols;
                double* yr = out.value.data() + r * a.cols;
                double m = xr[0];
                for (std::size_t c = 1; c < a.cols; ++c) m = std::max(m, xr[c]);
                double s = 0.0;
                for (std::size_t c = 0; c < a.cols; ++c) {
                    yr[c] = std::exp(xr[c] - m);
                    s += yr[c];
                }
                for (std::size_t c = 0; c < a.cols; ++c) yr[c] /= s;
            }
            break;
        }

        case Op::pairwise_sq_dist: {
            arity(1);
            const Shape& a = shp(0);
            out.shape = Shape::matrix(a.rows, a.rows);
            out.value.assign(a.rows * a.rows, 0.0);
            k.pairwise_sq_dist(val(0).data(), out.value.data(), a.rows, a.cols);
            break;
        }

        case Op::select_entry: {
            arity(1);
            const Shape& a = shp(0);
            if (args.row >= a.rows || args.col >= a.cols) {
                shape_error(op, "entry (" + std::to_string(args.row) + "," + std::to_string(args.col) + ") outside " +
                                    a.str());
            }
            out.shape = Shape::scalar();
            out.value = {val(0)[args.row * a.cols + args.col]};
            break;
        }

        case Op::stack: {
            if (operands.empty()) shape_error(op, "nothing to stack");
            const std::size_t cols = shp(0).cols;
            std::size_t rows = 0;
            for (std::size_t i = 0; i < operands.size(); ++i) {
                if (shp(i).cols != cols) shape_error(op, "expected " + std::to_string(cols) + " columns, got " + shp(i).str());
                rows += shp(i).rows;
            }
            out.shape = Shape::matrix(rows, cols);
            out.value.reserve(rows * cols);
            for (std::size_t i = 0; i < operands.size(); ++i) out.value.insert(out.value.end(), val(i).begin(), val(i).end());
            break;
        }
    }

    for (std::size_t i = 0; i < out.value.size(); ++i) {
        if (!std::isfinite(out.value[i])) {
            throw NumericError(std::string(op_name(op)) + ": non-finite value at entry " + std::to_string(i) +
                               " of node " + std::to_string(nodes_.size()));
        }
    }

    for (const Value& v : operands) out.requires_grad = out.requires_grad || nodes_[v.index()].requires_grad;
    if (mode_ == Recording::enabled) {
        out.operands.reserve(operands.size());
        for (const Value& v : operands) out.operands.push_back(v.index());
    } else {
        out.requires_grad = false;
    }
    return push(std::move(out));
}

GradientMap Graph::backward(const Value& output) {
    if (output.graph() != this) throw std::invalid_argument("backward: output belongs to a different graph");
    if (mode_ != Recording::enabled) throw std::logic_error("backward: graph was built with recording disabled");
    const Node& seed = nodes_[output.index()];
    if (seed.shape.size() != 1) throw std::invalid_argument("backward: seed must be scalar-shaped, got " + seed.shape.str());

    std::vector<std::vector<double>> adjoints(output.index() + 1);
    adjoints[output.index()] = {1.0};

    GradientMap result;
    result.graph_ = this;

    for (std::uint32_t i = output.index() + 1; i-- > 0;) {
        std::vector<double>& g = adjoints[i];
        if (g.empty()) continue;
        const Node& n = nodes_[i];
        for (std::size_t e = 0; e < g.size(); ++e) {
            if (!std::isfinite(g[e])) {
                throw NumericError("backward: non-finite adjoint at node " + std::to_string(i) + " (" +
                                   std::string(op_name(n.op)) + "), entry " + std::to_string(e));
            }
        }
        if (n.op == Op::leaf) {
            result.entries_.emplace(i, std::move(g));
        } else {
            propagate(i, g, adjoints);
        }
        std::vector<double>().swap(g);
    }

    for (std::uint32_t leaf_index : leaves_) {
        if (!result.entries_.contains(leaf_index)) {
            result.entries_.emplace(leaf_index, std::vector<double>(nodes_[leaf_index].shape.size(), 0.0));
        }
    }
    ++backward_passes_;
    return result;
}

void Graph::propagate(std::uint32_t index, const std::vector<double>& g,
                      std::vector<std::vector<double>>& adjoints) const {
    const Node& n = nodes_[index];
    const kernels::Table& k = kernels::active();

    // Adjoint buffer of operand `slot`, or nullptr when it needs no gradient.
    auto target = [&](std::size_t slot) -> double* {
        const std::uint32_t j = n.operands[slot];
        if (!nodes_[j].requires_grad) return nullptr;
        std::vector<double>& buf = adjoints[j];
        if (buf.empty()) buf.assign(nodes_[j].shape.size(), 0.0);
        return buf.data();
    };
    auto in = [&](std::size_t slot) -> const Buffer& { return nodes_[n.operands[slot]].value; };
    auto in_shape = [&](std::size_t slot) -> const Shape& { return nodes_[n.operands[slot]].shape; };
    const std::size_t size = g.size();

    switch (n.op) {
        case Op::leaf:
        case Op::constant:
            return;

        case Op::add:
            if (double* da = target(0)) k.axpy(1.0, g.data(), da, size);
            if (double* db = target(1)) k.axpy(1.0, g.data(), db, size);
            return;

        case Op::sub:
            if (double* da = target(0)) k.axpy(1.0, g.data(), da, size);
            if (double* db = target(1)) k.axpy(-1.0, g.data(), db, size);
            return;

        case Op::mul:
            if (double* da = target(0)) k.mul_acc(g.data(), in(1).data(), da, size);
            if (double* db = target(1)) k.mul_acc(g.data(), in(0).data(), db, size);
            return;

        case Op::div: {
            const auto& a = in(0);
            const auto& b = in(1);
            if (double* da = target(0)) {
                for (std::size_t i = 0; i < size; ++i) da[i] += g[i] / b[i];
            }
            if (double* db = target(1)) {
                for (std::size_t i = 0; i < size; ++i) db[i] -= g[i] * a[i] / (b[i] * b[i]);
            }
            return;
        }

        case Op::scalar_mul: {
            if (n.operands.size() == 1) {
                if (double* da = target(0)) k.axpy(n.args.scalar, g.data(), da, size);
                return;
            }
            const double s = in(0)[0];
            if (double* ds = target(0)) ds[0] += k.dot(g.data(), in(1).data(), size);
            if (double* da = target(1)) k.axpy(s, g.data(), da, size);
            return;
        }

        case Op::matmul: {
            const Shape& a = in_shape(0);
            const Shape& b = in_shape(1);
            // C = A B:  dA += G B^T,  dB += A^T G
            if (double* da = target(0)) k.gemm_nt(g.data(), in(1).data(), da, a.rows, b.cols, a.cols);
            if (double* db = target(1)) k.gemm_tn(in(0).data(), g.data(), db, b.rows, a.rows, b.cols);
            return;
        }

        case Op::transpose: {
            const Shape& a = in_shape(0);
            if (double* da = target(0)) {
                for (std::size_t r = 0; r < a.rows; ++r)
                    for (std::size_t c = 0; c < a.cols; ++c) da[r * a.cols + c] += g[c * a.rows + r];
            }
            return;
        }

        case Op::row_sum: {
            const Shape& a = in_shape(0);
            if (double* da = target(0)) {
                for (std::size_t r = 0; r < a.rows; ++r)
                    for (std::size_t c = 0; c < a.cols; ++c) da[r * a.cols + c] += g[r];
            }
            return;
        }

        case Op::mean_rows: {
            const Shape& a = in_shape(0);
            if (double* da = target(0)) {
                const double inv = 1.0 / static_cast<double>(a.rows);
                for (std::size_t r = 0; r < a.rows; ++r) k.axpy(inv, g.data(), da + r * a.cols, a.cols);
            }
            return;
        }

        case Op::exp:
            if (double* da = target(0)) k.mul_acc(g.data(), n.value.data(), da, size);
            return;

        case Op::log: {
            const auto& x = in(0);
            if (double* da = target(0)) {
                for (std::size_t i = 0; i < size; ++i) da[i] += g[i] / x[i];
            }
            return;
        }

        case Op::pow: {
            const auto& x = in(0);
            const double p = n.args.scalar;
            if (double* da = target(0)) {
                for (std::size_t i = 0; i < size; ++i) {
                    if (p == 0.0) continue;
                    da[i] += g[i] * p * std::pow(x[i], p - 1.0);
                }
            }
            return;
        }

        case Op::sqrt:
            if (double* da = target(0)) {
                for (std::size_t i = 0; i < size; ++i) {
                    if (g[i] != 0.0) da[i] += g[i] * 0.5 / std::max(n.value[i], kSafeEpsilon);
                }
            }
            return;

        case Op::neg:
            if (double* da = target(0)) k.axpy(-1.0, g.data(), da, size);
            return;

        case Op::reciprocal_safe: {
            const auto& x = in(0);
            if (double* da = target(0)) {
                for (std::size_t i = 0; i < size; ++i) {
                    if (std::abs(x[i]) > kSafeEpsilon) da[i] -= g[i] * n.value[i] * n.value[i];
                }
            }
            return;
        }

        case Op::softmax_rows: {
            const Shape& a = n.shape;
            if (double* da = target(0)) {
                for (std::size_t r = 0; r < a.rows; ++r) {
                    const double* y = n.value.data() + r * a.cols;
                    const double* gr = g.data() + r * a.cols;
                    const double inner = k.dot(gr, y, a.cols);
                    double* dr = da + r * a.cols;
                    for (std::size_t c = 0; c < a.cols; ++c) dr[c] += y[c] * (gr[c] - inner);
                }
            }
            return;
        }

        case Op::pairwise_sq_dist: {
            const Shape& a = in_shape(0);
            if (double* da = target(0)) k.pairwise_sq_dist_grad(g.data(), in(0).data(), da, a.rows, a.cols);
            return;
        }

        case Op::select_entry: {
            const Shape& a = in_shape(0);
            if (double* da = target(0)) da[n.args.row * a.cols + n.args.col] += g[0];
            return;
        }

        case Op::stack: {
            std::size_t offset = 0;
            for (std::size_t slot = 0; slot < n.operands.size(); ++slot) {
                const std::size_t part = in_shape(slot).size();
                if (double* dp = target(slot)) k.axpy(1.0, g.data() + offset, dp, part);
                offset += part;
            }
            return;
        }
    }
}

}  // namespace gradproj::ad
