#include "qolab/kernels.hpp"

#if QOLAB_HAVE_AVX2_KERNELS

#include <immintrin.h>

#include <array>

#define QOLAB_AVX2 __attribute__((target("avx2,bmi,popcnt")))

namespace qolab::kernels::avx2 {

namespace {

// For an 8-bit lane mask, the positions of its set bits packed to the front.
struct CompactTable {
  alignas(32) std::array<std::array<std::uint32_t, 8>, 256> lanes{};
  constexpr CompactTable() {
    for (unsigned mask = 0; mask < 256; ++mask) {
      unsigned n = 0;
      for (unsigned bit = 0; bit < 8; ++bit) {
        if (mask & (1u << bit)) lanes[mask][n++] = bit;
      }
      for (; n < 8; ++n) lanes[mask][n] = 0;
    }
  }
};

constexpr CompactTable kCompact{};

QOLAB_AVX2 inline __m256i compact_lanes(unsigned mask) {
  return _mm256_load_si256(reinterpret_cast<const __m256i*>(kCompact.lanes[mask].data()));
}

// 4-lane int64 comparison to a 4-bit mask.
QOLAB_AVX2 inline unsigned lane_mask(__m256i cmp) {
  return static_cast<unsigned>(_mm256_movemask_pd(_mm256_castsi256_pd(cmp)));
}

QOLAB_AVX2 inline unsigned compare_mask(__m256i v, CompareOp op, __m256i operand) {
  switch (op) {
    case CompareOp::Eq: return lane_mask(_mm256_cmpeq_epi64(v, operand));
    case CompareOp::Ne: return lane_mask(_mm256_cmpeq_epi64(v, operand)) ^ 0xFu;
    case CompareOp::Lt: return lane_mask(_mm256_cmpgt_epi64(operand, v));
    case CompareOp::Le: return lane_mask(_mm256_cmpgt_epi64(v, operand)) ^ 0xFu;
    case CompareOp::Gt: return lane_mask(_mm256_cmpgt_epi64(v, operand));
    case CompareOp::Ge: return lane_mask(_mm256_cmpgt_epi64(operand, v)) ^ 0xFu;
  }
  return 0;
}

QOLAB_AVX2 inline unsigned between_mask(__m256i v, __m256i lo, __m256i hi) {
  const __m256i outside = _mm256_or_si256(_mm256_cmpgt_epi64(lo, v), _mm256_cmpgt_epi64(v, hi));
  return lane_mask(outside) ^ 0xFu;
}

// Low 64 bits of a lane-wise 64x64 product, from 32-bit partial products.
QOLAB_AVX2 inline __m256i mullo64(__m256i a, __m256i b) {
  const __m256i lo = _mm256_mul_epu32(a, b);
  const __m256i a_hi = _mm256_srli_epi64(a, 32);
  const __m256i b_hi = _mm256_srli_epi64(b, 32);
  const __m256i cross = _mm256_add_epi64(_mm256_mul_epu32(a, b_hi), _mm256_mul_epu32(a_hi, b));
  return _mm256_add_epi64(lo, _mm256_slli_epi64(cross, 32));
}

QOLAB_AVX2 inline __m256i mix64x4(__m256i x) {
  const __m256i m1 = _mm256_set1_epi64x(static_cast<long long>(0xBF58476D1CE4E5B9ULL));
  const __m256i m2 = _mm256_set1_epi64x(static_cast<long long>(0x94D049BB133111EBULL));
  x = _mm256_xor_si256(x, _mm256_srli_epi64(x, 30));
  x = mullo64(x, m1);
  x = _mm256_xor_si256(x, _mm256_srli_epi64(x, 27));
  x = mullo64(x, m2);
  x = _mm256_xor_si256(x, _mm256_srli_epi64(x, 31));
  return x;
}

template <typename MaskFn>
QOLAB_AVX2 std::size_t filter_blocks(std::span<const std::int64_t> values, std::uint32_t base, std::uint32_t* out,
                                     MaskFn mask_of) {
  const std::size_t n = values.size();
  std::size_t written = 0;
  std::size_t i = 0;
  const __m256i step = _mm256_set1_epi32(8);
  __m256i ids = _mm256_add_epi32(_mm256_set1_epi32(static_cast<int>(base)), _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7));
  for (; i + 8 <= n; i += 8) {
    const __m256i v0 = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(values.data() + i));
    const __m256i v1 = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(values.data() + i + 4));
    const unsigned mask = mask_of(v0) | (mask_of(v1) << 4);
    const __m256i packed = _mm256_permutevar8x32_epi32(ids, compact_lanes(mask));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + written), packed);
    written += static_cast<std::size_t>(_mm_popcnt_u32(mask));
    ids = _mm256_add_epi32(ids, step);
  }
  return written;
}

template <typename MaskFn>
QOLAB_AVX2 std::size_t refine_blocks(std::span<const std::int64_t> column, std::span<const std::uint32_t> candidates,
                                     std::uint32_t* out, std::size_t& consumed, MaskFn mask_of) {
  const std::size_t n = candidates.size();
  const auto* base = reinterpret_cast<const long long*>(column.data());
  std::size_t written = 0;
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256i rows = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(candidates.data() + i));
    const __m256i v0 = _mm256_i32gather_epi64(base, _mm256_castsi256_si128(rows), 8);
    const __m256i v1 = _mm256_i32gather_epi64(base, _mm256_extracti128_si256(rows, 1), 8);
    const unsigned mask = mask_of(v0) | (mask_of(v1) << 4);
    const __m256i packed = _mm256_permutevar8x32_epi32(rows, compact_lanes(mask));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + written), packed);
    written += static_cast<std::size_t>(_mm_popcnt_u32(mask));
  }
  consumed = i;
  return written;
}

}  // namespace

QOLAB_AVX2 std::size_t filter_compare(std::span<const std::int64_t> values, CompareOp op, std::int64_t operand,
                                      std::uint32_t base, std::uint32_t* out) {
  const __m256i o = _mm256_set1_epi64x(operand);
  const std::size_t blocks = values.size() / 8 * 8;
  std::size_t written =
      filter_blocks(values.first(blocks), base, out, [&](__m256i v) QOLAB_AVX2 { return compare_mask(v, op, o); });
  written += scalar::filter_compare(values.subspan(blocks), op, operand, base + static_cast<std::uint32_t>(blocks),
                                    out + written);
  return written;
}

QOLAB_AVX2 std::size_t filter_between(std::span<const std::int64_t> values, std::int64_t lo, std::int64_t hi,
                                      std::uint32_t base, std::uint32_t* out) {
  const __m256i l = _mm256_set1_epi64x(lo);
  const __m256i h = _mm256_set1_epi64x(hi);
  const std::size_t blocks = values.size() / 8 * 8;
  std::size_t written =
      filter_blocks(values.first(blocks), base, out, [&](__m256i v) QOLAB_AVX2 { return between_mask(v, l, h); });
  written += scalar::filter_between(values.subspan(blocks), lo, hi, base + static_cast<std::uint32_t>(blocks),
                                    out + written);
  return written;
}

QOLAB_AVX2 std::size_t refine_compare(std::span<const std::int64_t> column, std::span<const std::uint32_t> candidates,
                                      CompareOp op, std::int64_t operand, std::uint32_t* out) {
  const __m256i o = _mm256_set1_epi64x(operand);
  std::size_t consumed = 0;
  std::size_t written =
      refine_blocks(column, candidates, out, consumed, [&](__m256i v) QOLAB_AVX2 { return compare_mask(v, op, o); });
  written += scalar::refine_compare(column, candidates.subspan(consumed), op, operand, out + written);
  return written;
}

QOLAB_AVX2 std::size_t refine_between(std::span<const std::int64_t> column, std::span<const std::uint32_t> candidates,
                                      std::int64_t lo, std::int64_t hi, std::uint32_t* out) {
  const __m256i l = _mm256_set1_epi64x(lo);
  const __m256i h = _mm256_set1_epi64x(hi);
  std::size_t consumed = 0;
  std::size_t written =
      refine_blocks(column, candidates, out, consumed, [&](__m256i v) QOLAB_AVX2 { return between_mask(v, l, h); });
  written += scalar::refine_between(column, candidates.subspan(consumed), lo, hi, out + written);
  return written;
}

QOLAB_AVX2 void hash_keys(std::span<const std::int64_t> keys, std::uint64_t* out) {
  const std::size_t n = keys.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i k = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(keys.data() + i));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i), mix64x4(k));
  }
  scalar::hash_keys(keys.subspan(i), out + i);
}

QOLAB_AVX2 void hash_combine_gather(std::span<const std::int64_t> column, std::span<const std::uint32_t> rows,
                                    std::uint64_t* inout) {
  const auto* base = reinterpret_cast<const long long*>(column.data());
  const __m256i combine = _mm256_set1_epi64x(static_cast<long long>(kCombine));
  const std::size_t n = rows.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(rows.data() + i));
    const __m256i key_hash = mix64x4(_mm256_i32gather_epi64(base, idx, 8));
    const __m256i acc = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(inout + i));
    const __m256i folded = mix64x4(_mm256_add_epi64(mullo64(acc, combine), key_hash));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(inout + i), folded);
  }
  scalar::hash_combine_gather(column, rows.subspan(i), inout + i);
}

}  // namespace qolab::kernels::avx2

#endif
