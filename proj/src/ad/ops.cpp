#include "gradproj/ad/ops.hpp"

#include <array>
#include <stdexcept>

namespace gradproj::ad {
namespace {

Graph& graph_of(const Value& v) {
    if (!v.valid()) throw std::invalid_argument("ad op: empty value handle");
    return *v.graph();
}

Value unary(Op op, const Value& a, OpArgs args = {}) {
    const std::array<Value, 1> operands{a};
    return graph_of(a).apply(op, operands, args);
}

Value binary(Op op, const Value& a, const Value& b) {
    const std::array<Value, 2> operands{a, b};
    return graph_of(a).apply(op, operands);
}

}  // namespace

Value add(const Value& a, const Value& b) { return binary(Op::add, a, b); }
Value sub(const Value& a, const Value& b) { return binary(Op::sub, a, b); }
Value mul(const Value& a, const Value& b) { return binary(Op::mul, a, b); }
Value div(const Value& a, const Value& b) { return binary(Op::div, a, b); }
Value scalar_mul(const Value& s, const Value& a) { return binary(Op::scalar_mul, s, a); }
Value scale(const Value& a, double factor) { return unary(Op::scalar_mul, a, OpArgs{.scalar = factor}); }
Value matmul(const Value& a, const Value& b) { return binary(Op::matmul, a, b); }
Value transpose(const Value& a) { return unary(Op::transpose, a); }
Value row_sum(const Value& a) { return unary(Op::row_sum, a); }
Value mean_rows(const Value& a) { return unary(Op::mean_rows, a); }
Value exp(const Value& a) { return unary(Op::exp, a); }
Value log(const Value& a) { return unary(Op::log, a); }
Value pow(const Value& a, double exponent) { return unary(Op::pow, a, OpArgs{.scalar = exponent}); }
Value sqrt(const Value& a) { return unary(Op::sqrt, a); }
Value softmax_rows(const Value& a) { return unary(Op::softmax_rows, a); }
Value pairwise_sq_dist(const Value& a) { return unary(Op::pairwise_sq_dist, a); }
Value neg(const Value& a) { return unary(Op::neg, a); }
Value reciprocal_safe(const Value& a) { return unary(Op::reciprocal_safe, a); }

Value select_entry(const Value& a, std::size_t row, std::size_t col) {
    return unary(Op::select_entry, a, OpArgs{.row = row, .col = col});
}

Value stack(std::span<const Value> parts) {
    if (parts.empty()) throw std::invalid_argument("stack: nothing to stack");
    return graph_of(parts.front()).apply(Op::stack, parts);
}

Value total_sum(const Value& a) { return row_sum(transpose(row_sum(a))); }

}  // namespace gradproj::ad
