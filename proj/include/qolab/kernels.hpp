#pragma once

// Data-parallel inner loops of the executor: int64 predicate filtering and
// join-key hashing. Every kernel has a scalar reference implementation and,
// on x86-64, an AVX2 variant chosen at runtime. The variants are required to
// produce bit-identical output.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace qolab::kernels {

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

/// Best instruction set supported by the running CPU.
Isa detected_isa();

/// Instruction set the dispatching entry points currently use. Defaults to
/// detected_isa(); can be pinned (e.g. by tests or QOLAB_ISA=scalar).
Isa active_isa();
void set_active_isa(Isa isa);

/// Writes base+i for every i with values[i] <op> operand into out (which must
/// have room for values.size() entries). Returns the number written. Output
/// positions are ascending.
std::size_t filter_compare(std::span<const std::int64_t> values, CompareOp op, std::int64_t operand,
                           std::uint32_t base, std::uint32_t* out);

/// Same contract for lo <= values[i] <= hi.
std::size_t filter_between(std::span<const std::int64_t> values, std::int64_t lo, std::int64_t hi,
                           std::uint32_t base, std::uint32_t* out);

/// Keeps the candidate row ids r with column[r] <op> operand, writing them to
/// out in input order. out may alias candidates.
std::size_t refine_compare(std::span<const std::int64_t> column, std::span<const std::uint32_t> candidates,
                           CompareOp op, std::int64_t operand, std::uint32_t* out);

std::size_t refine_between(std::span<const std::int64_t> column, std::span<const std::uint32_t> candidates,
                           std::int64_t lo, std::int64_t hi, std::uint32_t* out);

/// 64-bit finalizer (splitmix64 mix) of each key.
void hash_keys(std::span<const std::int64_t> keys, std::uint64_t* out);

/// out[i] = mix(out[i] * kCombine + hash(keys[rows[i]])): folds one more key
/// column into per-row hashes, gathering through a row-id list.
void hash_combine_gather(std::span<const std::int64_t> column, std::span<const std::uint32_t> rows,
                         std::uint64_t* inout);

inline constexpr std::uint64_t kCombine = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

namespace scalar {
std::size_t filter_compare(std::span<const std::int64_t> values, CompareOp op, std::int64_t operand,
                           std::uint32_t base, std::uint32_t* out);
std::size_t filter_between(std::span<const std::int64_t> values, std::int64_t lo, std::int64_t hi,
                           std::uint32_t base, std::uint32_t* out);
std::size_t refine_compare(std::span<const std::int64_t> column, std::span<const std::uint32_t> candidates,
                           CompareOp op, std::int64_t operand, std::uint32_t* out);
std::size_t refine_between(std::span<const std::int64_t> column, std::span<const std::uint32_t> candidates,
                           std::int64_t lo, std::int64_t hi, std::uint32_t* out);
void hash_keys(std::span<const std::int64_t> keys, std::uint64_t* out);
void hash_combine_gather(std::span<const std::int64_t> column, std::span<const std::uint32_t> rows,
                         std::uint64_t* inout);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define QOLAB_HAVE_AVX2_KERNELS 1
namespace avx2 {
std::size_t filter_compare(std::span<const std::int64_t> values, CompareOp op, std::int64_t operand,
                           std::uint32_t base, std::uint32_t* out);
std::size_t filter_between(std::span<const std::int64_t> values, std::int64_t lo, std::int64_t hi,
                           std::uint32_t base, std::uint32_t* out);
std::size_t refine_compare(std::span<const std::int64_t> column, std::span<const std::uint32_t> candidates,
                           CompareOp op, std::int64_t operand, std::uint32_t* out);
std::size_t refine_between(std::span<const std::int64_t> column, std::span<const std::uint32_t> candidates,
                           std::int64_t lo, std::int64_t hi, std::uint32_t* out);
void hash_keys(std::span<const std::int64_t> keys, std::uint64_t* out);
void hash_combine_gather(std::span<const std::int64_t> column, std::span<const std::uint32_t> rows,
                         std::uint64_t* inout);
}  // namespace avx2
#else
#define QOLAB_HAVE_AVX2_KERNELS 0
#endif

}  // namespace qolab::kernels
