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

#include "anchormine/simd.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace anchormine::simd {

namespace {

Backend initial_backend() {
  Backend b = detected_backend();
  if (const char* env = std::getenv("ANCHORMINE_SIMD")) {
    const std::string v(env);
    if (v == "scalar") b = Backend::kScalar;
    if (v == "avx2" && backend_available(Backend::kAvx2)) b = Backend::kAvx2;
  }
  return b;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{initial_backend()};
  return backend;
}

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool backend_available(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
#if defined(__x86_64__) || defined(__i386__)
      return avx2::compiled() && __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Backend detected_backend() {
  return backend_available(Backend::kAvx2) ? Backend::kAvx2 : Backend::kScalar;
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  current().store(backend_available(b) ? b : Backend::kScalar,
                  std::memory_order_relaxed);
}

void iou_one_to_many(const Box& query, std::span<const Box> boxes,
                     std::span<double> out) {
  if (out.size() != boxes.size()) {
    throw std::invalid_argument("iou_one_to_many: output length differs from box count");
  }
  if (active_backend() == Backend::kAvx2) {
    avx2::iou_one_to_many(query, boxes, out);
  } else {
    scalar::iou_one_to_many(query, boxes, out);
  }
}

void iou_argmax_update(const Box& query, std::int32_t query_index,
                       std::span<const Box> boxes, std::span<double> best_iou,
                       std::span<std::int32_t> best_index) {
  if (best_iou.size() != boxes.size() || best_index.size() != boxes.size()) {
    throw std::invalid_argument("iou_argmax_update: state length differs from box count");
  }
  if (active_backend() == Backend::kAvx2) {
    avx2::iou_argmax_update(query, query_index, boxes, best_iou, best_index);
  } else {
    scalar::iou_argmax_update(query, query_index, boxes, best_iou, best_index);
  }
}

}  // namespace anchormine::simd
