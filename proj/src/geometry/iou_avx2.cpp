/*
 * Copyright (c) 2026 The anchormine Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Compiled with -mavx2 (see src/CMakeLists.txt). Nothing in this file may be
// called unless the CPU reports AVX2; the dispatcher in simd.cpp guarantees it.

#include <cassert>

#include "anchormine/simd.hpp"

#if defined(ANCHORMINE_HAVE_AVX2)
#include <immintrin.h>
#endif

namespace anchormine::simd::avx2 {

#if defined(ANCHORMINE_HAVE_AVX2)

namespace {

struct Columns {
  __m256d x0, y0, x1, y1;
};

// Four AoS boxes -> four coordinate columns (4x4 double transpose).
inline Columns load4(const Box* p) {
  const double* d = &p->x0;
  const __m256d r0 = _mm256_loadu_pd(d + 0);
  const __m256d r1 = _mm256_loadu_pd(d + 4);
  const __m256d r2 = _mm256_loadu_pd(d + 8);
  const __m256d r3 = _mm256_loadu_pd(d + 12);
  const __m256d t0 = _mm256_unpacklo_pd(r0, r1);
  const __m256d t1 = _mm256_unpackhi_pd(r0, r1);
  const __m256d t2 = _mm256_unpacklo_pd(r2, r3);
  const __m256d t3 = _mm256_unpackhi_pd(r2, r3);
  return {_mm256_permute2f128_pd(t0, t2, 0x20),
          _mm256_permute2f128_pd(t1, t3, 0x20),
          _mm256_permute2f128_pd(t0, t2, 0x31),
          _mm256_permute2f128_pd(t1, t3, 0x31)};
}

struct Query {
  __m256d x0, y0, x1, y1, area;
};

inline Query broadcast(const Box& q) {
  return {_mm256_set1_pd(q.x0), _mm256_set1_pd(q.y0), _mm256_set1_pd(q.x1),
          _mm256_set1_pd(q.y1),
          _mm256_set1_pd((q.x1 - q.x0) * (q.y1 - q.y0))};
}

inline __m256d iou4(const Query& q, const Columns& b) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d iw = _mm256_max_pd(
      _mm256_sub_pd(_mm256_min_pd(q.x1, b.x1), _mm256_max_pd(q.x0, b.x0)),
      zero);
  const __m256d ih = _mm256_max_pd(
      _mm256_sub_pd(_mm256_min_pd(q.y1, b.y1), _mm256_max_pd(q.y0, b.y0)),
      zero);
  const __m256d inter = _mm256_mul_pd(iw, ih);
  const __m256d b_area =
      _mm256_mul_pd(_mm256_sub_pd(b.x1, b.x0), _mm256_sub_pd(b.y1, b.y0));
  const __m256d uni = _mm256_sub_pd(_mm256_add_pd(q.area, b_area), inter);
  const __m256d ok = _mm256_cmp_pd(uni, zero, _CMP_GT_OQ);
  return _mm256_and_pd(ok, _mm256_div_pd(inter, uni));
}

}  // namespace

bool compiled() { return true; }

void iou_one_to_many(const Box& query, std::span<const Box> boxes,
                     std::span<double> out) {
  assert(out.size() == boxes.size());
  const Query q = broadcast(query);
  const std::size_t n = boxes.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out.data() + i, iou4(q, load4(boxes.data() + i)));
  }
  scalar::iou_one_to_many(query, boxes.subspan(i), out.subspan(i));
}

void iou_argmax_update(const Box& query, std::int32_t query_index,
                       std::span<const Box> boxes, std::span<double> best_iou,
                       std::span<std::int32_t> best_index) {
  assert(best_iou.size() == boxes.size() && best_index.size() == boxes.size());
  const Query q = broadcast(query);
  const __m128i idx = _mm_set1_epi32(query_index);
  const __m256i pick_low = _mm256_setr_epi32(0, 2, 4, 6, 1, 3, 5, 7);
  const std::size_t n = boxes.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = iou4(q, load4(boxes.data() + i));
    const __m256d best = _mm256_loadu_pd(best_iou.data() + i);
    const __m256d gt = _mm256_cmp_pd(v, best, _CMP_GT_OQ);
    if (_mm256_movemask_pd(gt) == 0) continue;
    _mm256_storeu_pd(best_iou.data() + i, _mm256_blendv_pd(best, v, gt));
    // 64-bit lane masks -> 32-bit lane masks.
    const __m128i gt32 = _mm256_castsi256_si128(
        _mm256_permutevar8x32_epi32(_mm256_castpd_si256(gt), pick_low));
    auto* dst = reinterpret_cast<__m128i*>(best_index.data() + i);
    _mm_storeu_si128(dst, _mm_blendv_epi8(_mm_loadu_si128(dst), idx, gt32));
  }
  scalar::iou_argmax_update(query, query_index, boxes.subspan(i),
                            best_iou.subspan(i), best_index.subspan(i));
}

#else

bool compiled() { return false; }

void iou_one_to_many(const Box& query, std::span<const Box> boxes,
                     std::span<double> out) {
  scalar::iou_one_to_many(query, boxes, out);
}

void iou_argmax_update(const Box& query, std::int32_t query_index,
                       std::span<const Box> boxes, std::span<double> best_iou,
                       std::span<std::int32_t> best_index) {
  scalar::iou_argmax_update(query, query_index, boxes, best_iou, best_index);
}

#endif

}  // namespace anchormine::simd::avx2
