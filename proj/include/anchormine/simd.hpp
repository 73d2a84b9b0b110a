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

#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "anchormine/geometry.hpp"

namespace anchormine::simd {

enum class Backend { kScalar, kAvx2 };

std::string_view backend_name(Backend b);

// Best backend this binary was built with and the CPU supports.
Backend detected_backend();

// Backend used by the dispatching entry points below. Defaults to
// detected_backend(); the environment variable ANCHORMINE_SIMD=scalar|avx2
// overrides it at first use. Requesting an unavailable backend falls back to
// scalar.
Backend active_backend();
void set_backend(Backend b);
bool backend_available(Backend b);

// out[i] = iou(query, boxes[i]). Every backend produces bit-identical results.
void iou_one_to_many(const Box& query, std::span<const Box> boxes,
                     std::span<double> out);

// For every i with iou(query, boxes[i]) > best_iou[i]: best_iou[i] = that IoU
// and best_index[i] = query_index. Strict comparison, so calling this for
// queries in ascending index order keeps the lowest index on ties.
void iou_argmax_update(const Box& query, std::int32_t query_index,
                       std::span<const Box> boxes, std::span<double> best_iou,
                       std::span<std::int32_t> best_index);

// Per-backend entry points, exposed for equivalence tests.
namespace scalar {
void iou_one_to_many(const Box& query, std::span<const Box> boxes,
                     std::span<double> out);
void iou_argmax_update(const Box& query, std::int32_t query_index,
                       std::span<const Box> boxes, std::span<double> best_iou,
                       std::span<std::int32_t> best_index);
}  // namespace scalar

namespace avx2 {
bool compiled();
void iou_one_to_many(const Box& query, std::span<const Box> boxes,
                     std::span<double> out);
void iou_argmax_update(const Box& query, std::int32_t query_index,
                       std::span<const Box> boxes, std::span<double> best_iou,
                       std::span<std::int32_t> best_index);
}  // namespace avx2

}  // namespace anchormine::simd
