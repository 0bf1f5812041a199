#include "qolab/kernels.hpp"

namespace qolab::kernels::scalar {

namespace {

inline bool compare(std::int64_t v, CompareOp op, std::int64_t operand) {
  switch (op) {
    case CompareOp::Eq: return v == operand;
    case CompareOp::Ne: return v != operand;
    case CompareOp::Lt: return v < operand;
    case CompareOp::Le: return v <= operand;
    case CompareOp::Gt: return v > operand;
    case CompareOp::Ge: return v >= operand;
  }
  return false;
}

// One loop per operator keeps the predicate out of the inner loop.
template <typename Pred>
std::size_t filter_with(std::span<const std::int64_t> values, std::uint32_t base, std::uint32_t* out, Pred pred) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[n] = base + static_cast<std::uint32_t>(i);
    n += pred(values[i]) ? 1 : 0;
  }
  return n;
}

template <typename Pred>
std::size_t refine_with(std::span<const std::int64_t> column, std::span<const std::uint32_t> candidates,
                        std::uint32_t* out, Pred pred) {
  std::size_t n = 0;
  for (const std::uint32_t row : candidates) {
    out[n] = row;
    n += pred(column[row]) ? 1 : 0;
  }
  return n;
}

}  // namespace

std::size_t filter_compare(std::span<const std::int64_t> values, CompareOp op, std::int64_t operand,
                           std::uint32_t base, std::uint32_t* out) {
  switch (op) {
    case CompareOp::Eq: return filter_with(values, base, out, [=](std::int64_t v) { return v == operand; });
    case CompareOp::Ne: return filter_with(values, base, out, [=](std::int64_t v) { return v != operand; });
    case CompareOp::Lt: return filter_with(values, base, out, [=](std::int64_t v) { return v < operand; });
    case CompareOp::Le: return filter_with(values, base, out, [=](std::int64_t v) { return v <= operand; });
    case CompareOp::Gt: return filter_with(values, base, out, [=](std::int64_t v) { return v > operand; });
    case CompareOp::Ge: return filter_with(values, base, out, [=](std::int64_t v) { return v >= operand; });
  }
  return filter_with(values, base, out, [=](std::int64_t v) { return compare(v, op, operand); });
}

std::size_t filter_between(std::span<const std::int64_t> values, std::int64_t lo, std::int64_t hi,
                           std::uint32_t base, std::uint32_t* out) {
  return filter_with(values, base, out, [=](std::int64_t v) { return v >= lo && v <= hi; });
}

std::size_t refine_compare(std::span<const std::int64_t> column, std::span<const std::uint32_t> candidates,
                           CompareOp op, std::int64_t operand, std::uint32_t* out) {
  return refine_with(column, candidates, out, [=](std::int64_t v) { return compare(v, op, operand); });
}

std::size_t refine_between(std::span<const std::int64_t> column, std::span<const std::uint32_t> candidates,
                           std::int64_t lo, std::int64_t hi, std::uint32_t* out) {
  return refine_with(column, candidates, out, [=](std::int64_t v) { return v >= lo && v <= hi; });
}

void hash_keys(std::span<const std::int64_t> keys, std::uint64_t* out) {
  for (std::size_t i = 0; i < keys.size(); ++i) out[i] = mix64(static_cast<std::uint64_t>(keys[i]));
}

void hash_combine_gather(std::span<const std::int64_t> column, std::span<const std::uint32_t> rows,
                         std::uint64_t* inout) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    inout[i] = mix64(inout[i] * kCombine + mix64(static_cast<std::uint64_t>(column[rows[i]])));
  }
}

}  // namespace qolab::kernels::scalar
