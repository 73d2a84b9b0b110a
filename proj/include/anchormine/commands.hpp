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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "anchormine/config.hpp"

namespace anchormine {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // analysis or assertion failure
inline constexpr int kExitUsage = 2;    // usage, IO or config error

std::string_view tool_version();

struct CommandContext {
  ToolConfig config;  // config.model.seed holds the effective seed
  int threads = 1;
  std::filesystem::path out_dir = ".";
  std::ostream* out = nullptr;  // progress and summaries
  std::ostream* err = nullptr;  // diagnostics
};

// anchors.csv: one row per anchor of a width x height image.
int cmd_anchors(const CommandContext& ctx, int image_w, int image_h);

// scale_curve.csv over the ratio range "start:stop:step". An empty
// `annotations` falls back to the config, then to the synthetic dataset.
int cmd_match_stats(const CommandContext& ctx, const std::string& annotations,
                    const std::string& ratios);

struct AssignOptions {
  std::optional<std::string> strategy;  // defaults to the config's strategy
  std::optional<double> sim_quality;    // required for hambox
  bool all_rows = false;                // also dump background and ignored anchors
};

// assign.csv: per-image anchor labels for one matching strategy.
int cmd_assign(const CommandContext& ctx, const std::string& annotations,
               const AssignOptions& options);

// simulation.csv (one row per iteration) and provenance.csv (final iteration).
int cmd_simulate(const CommandContext& ctx, const std::string& annotations, int iters);

// Finite-difference check of the classification-loss gradient. Exit 0 iff the
// max relative error is below 1e-4 and ignored gradients are exactly 0.
int cmd_loss_check(std::uint64_t seed, int trials, bool corrupt, std::ostream& out,
                   std::ostream& err);

// Full command line (args[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace anchormine
