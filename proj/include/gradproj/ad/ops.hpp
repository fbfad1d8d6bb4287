#pragma once

// Named wrappers over Graph::apply. Operands must belong to the same graph.
//
// Shape rules (r x c, vectors are 1 x k rows):
//   add, sub, mul, div       equal dims, result takes the left operand's kind
//   scalar_mul(s, a)         s scalar, result shaped like a
//   matmul(a, b)             (m x k)(k x n) -> m x n
//   transpose                r x c -> c x r
//   row_sum                  r x c -> r x 1 (scalar for a vector input)
//   mean_rows                r x c -> vector(c), column means
//   softmax_rows             row-wise softmax, same dims
//   pairwise_sq_dist         n x p -> n x n squared row distances
//   select_entry(a, i, j)    -> scalar
//   stack(parts)             vertical concatenation, equal cols

#include <span>

#include "gradproj/ad/graph.hpp"

namespace gradproj::ad {

Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
Value div(const Value& a, const Value& b);
Value scalar_mul(const Value& s, const Value& a);
Value scale(const Value& a, double factor);
Value matmul(const Value& a, const Value& b);
Value transpose(const Value& a);
Value row_sum(const Value& a);
Value mean_rows(const Value& a);
Value exp(const Value& a);
Value log(const Value& a);
Value pow(const Value& a, double exponent);
Value sqrt(const Value& a);
Value softmax_rows(const Value& a);
Value pairwise_sq_dist(const Value& a);
Value select_entry(const Value& a, std::size_t row, std::size_t col);
Value stack(std::span<const Value> parts);
Value neg(const Value& a);
// 1/x, with 0 (and a zero derivative) wherever |x| <= kSafeEpsilon.
Value reciprocal_safe(const Value& a);

// Sum of all entries as a scalar (row_sum, transpose, row_sum).
Value total_sum(const Value& a);

}  // namespace gradproj::ad
