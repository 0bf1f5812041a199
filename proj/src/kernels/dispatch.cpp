#include <atomic>
#include <cstdlib>
#include <string>

#include "qolab/kernels.hpp"

namespace qolab::kernels {

namespace {

Isa initial_isa() {
  if (const char* forced = std::getenv("QOLAB_ISA")) {
    if (std::string(forced) == "scalar") return Isa::Scalar;
  }
  return detected_isa();
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

bool use_avx2() { return active().load(std::memory_order_relaxed) == Isa::Avx2; }

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

Isa detected_isa() {
#if QOLAB_HAVE_AVX2_KERNELS
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("bmi") && __builtin_cpu_supports("popcnt")) {
    return Isa::Avx2;
  }
#endif
  return Isa::Scalar;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (isa == Isa::Avx2 && detected_isa() != Isa::Avx2) isa = Isa::Scalar;
  active().store(isa, std::memory_order_relaxed);
}

#if QOLAB_HAVE_AVX2_KERNELS
#define QOLAB_DISPATCH(fn, ...) (use_avx2() ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define QOLAB_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

std::size_t filter_compare(std::span<const std::int64_t> values, CompareOp op, std::int64_t operand,
                           std::uint32_t base, std::uint32_t* out) {
  return QOLAB_DISPATCH(filter_compare, values, op, operand, base, out);
}

std::size_t filter_between(std::span<const std::int64_t> values, std::int64_t lo, std::int64_t hi,
                           std::uint32_t base, std::uint32_t* out) {
  return QOLAB_DISPATCH(filter_between, values, lo, hi, base, out);
}

std::size_t refine_compare(std::span<const std::int64_t> column, std::span<const std::uint32_t> candidates,
                           CompareOp op, std::int64_t operand, std::uint32_t* out) {
  return QOLAB_DISPATCH(refine_compare, column, candidates, op, operand, out);
}

std::size_t refine_between(std::span<const std::int64_t> column, std::span<const std::uint32_t> candidates,
                           std::int64_t lo, std::int64_t hi, std::uint32_t* out) {
  return QOLAB_DISPATCH(refine_between, column, candidates, lo, hi, out);
}

void hash_keys(std::span<const std::int64_t> keys, std::uint64_t* out) { QOLAB_DISPATCH(hash_keys, keys, out); }

void hash_combine_gather(std::span<const std::int64_t> column, std::span<const std::uint32_t> rows,
                         std::uint64_t* inout) {
  QOLAB_DISPATCH(hash_combine_gather, column, rows, inout);
}

}  // namespace qolab::kernels
