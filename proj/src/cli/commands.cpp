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

#include "anchormine/commands.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <system_error>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "anchormine/gradcheck.hpp"
#include "anchormine/ingest.hpp"
#include "anchormine/parallel.hpp"
#include "anchormine/simulator.hpp"
#include "anchormine/stats.hpp"

#ifndef ANCHORMINE_VERSION
#define ANCHORMINE_VERSION "0.0.0"
#endif

namespace anchormine {

namespace {

// Raised for conditions that map to kExitUsage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

// Collects the files of one command run and writes them with a manifest.
class OutputSet {
 public:
  OutputSet(const CommandContext& ctx, std::string command)
      : ctx_(ctx), command_(std::move(command)) {}

  void add(const std::string& name, std::string content) {
    files_.emplace_back(name, std::move(content));
  }
  void argument(const std::string& key, nlohmann::ordered_json value) {
    arguments_[key] = std::move(value);
  }

  void write() const {
    std::error_code ec;
    std::filesystem::create_directories(ctx_.out_dir, ec);
    if (ec) {
      throw UsageError(fmt::format("cannot create output directory '{}': {}",
                                   ctx_.out_dir.string(), ec.message()));
    }
    nlohmann::ordered_json manifest;
    manifest["tool"] = "anchormine";
    manifest["version"] = std::string(tool_version());
    manifest["command"] = command_;
    manifest["seed"] = ctx_.config.model.seed;
    manifest["arguments"] = arguments_.is_null() ? nlohmann::ordered_json::object() : arguments_;
    manifest["config"] = dump_config(ctx_.config);
    nlohmann::ordered_json outputs = nlohmann::ordered_json::object();
    for (const auto& [name, content] : files_) {
      write_file(name, content);
      outputs[name] = {{"sha256", sha256_hex(content)}, {"bytes", content.size()}};
    }
    manifest["outputs"] = outputs;
    write_file("manifest.json", manifest.dump(2) + "\n");
  }

 private:
  void write_file(const std::string& name, const std::string& content) const {
    const std::filesystem::path path = ctx_.out_dir / name;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw UsageError(fmt::format("cannot write '{}'", path.string()));
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.close();
    if (!f) throw UsageError(fmt::format("error writing '{}'", path.string()));
  }

  const CommandContext& ctx_;
  std::string command_;
  std::vector<std::pair<std::string, std::string>> files_;
  nlohmann::ordered_json arguments_;
};

struct Dataset {
  std::vector<ImageRecord> records;
  std::string source;  // annotation path or "synthetic"
};

Dataset load_dataset(const CommandContext& ctx, const std::string& annotations) {
  const DataConfig& data = ctx.config.data;
  const std::string path = annotations.empty() ? data.annotations : annotations;
  Dataset d;
  if (path.empty()) {
    d.records = make_synthetic_dataset(data.synthetic_images, ctx.config.model.seed,
                                       data.image_width, data.image_height);
    d.source = "synthetic";
    return d;
  }
  if (!std::filesystem::is_regular_file(path)) {
    throw UsageError(fmt::format("annotation file '{}' not found", path));
  }
  ParseResult parsed;
  try {
    parsed = load_wider_annotations(path, data.strict);
  } catch (const ParseError& e) {
    throw UsageError(fmt::format("{}: {}", path, e.what()));
  }
  if (parsed.warnings > 0 && ctx.err) {
    *ctx.err << fmt::format("{}: {} malformed entries skipped\n", path, parsed.warnings);
    for (const std::string& m : parsed.messages) *ctx.err << "  " << m << '\n';
  }
  d.records = filter_valid(std::move(parsed.records), data.min_face_side);
  d.source = path;
  return d;
}

std::size_t count_faces(const std::vector<ImageRecord>& records) {
  std::size_t n = 0;
  for (const ImageRecord& r : records) n += r.faces.size();
  return n;
}

std::string fmt_optional(const std::optional<double>& v) {
  return v ? fmt::format("{}", *v) : std::string();
}

template <typename Fn>
int guarded(const CommandContext& ctx, Fn&& fn) {
  try {
    return fn();
  } catch (const UsageError& e) {
    if (ctx.err) *ctx.err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    if (ctx.err) *ctx.err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    if (ctx.err) *ctx.err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    if (ctx.err) *ctx.err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace

std::string_view tool_version() { return ANCHORMINE_VERSION; }

int cmd_anchors(const CommandContext& ctx, int image_w, int image_h) {
  return guarded(ctx, [&] {
    const AnchorGrid grid = generate_anchors(ctx.config.anchors, image_w, image_h);
    std::string csv = "level,row,col,x0,y0,x1,y1\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Box& b = grid.anchors[i];
      csv += fmt::format("{},{},{},{},{},{},{}\n", grid.level_of[i], grid.cell_of[i].row,
                         grid.cell_of[i].col, b.x0, b.y0, b.x1, b.y1);
    }
    OutputSet out(ctx, "anchors");
    out.argument("image_width", image_w);
    out.argument("image_height", image_h);
    out.add("anchors.csv", std::move(csv));
    out.write();
    if (ctx.out) *ctx.out << fmt::format("wrote {} anchors\n", grid.size());
    return kExitOk;
  });
}

int cmd_match_stats(const CommandContext& ctx, const std::string& annotations,
                    const std::string& ratios) {
  return guarded(ctx, [&] {
    const std::vector<double> range = parse_ratio_range(ratios);
    const Dataset data = load_dataset(ctx, annotations);
    const auto curve = scale_ratio_sweep(data.records, ctx.config.anchors, range,
                                         ctx.config.match.iou_threshold, ctx.threads);
    if (!curve) {
      if (ctx.err) *ctx.err << fmt::format("error: no valid faces in {}\n", data.source);
      return kExitFailure;
    }
    std::string csv = "ratio,mean_anchors_per_face,fraction_faces_matched\n";
    for (const ScaleCurvePoint& p : *curve) {
      csv += fmt::format("{},{},{}\n", p.scale_ratio, p.mean_anchors_per_face,
                         p.fraction_faces_matched);
    }
    OutputSet out(ctx, "match-stats");
    out.argument("annotations", data.source);
    out.argument("ratios", ratios);
    out.add("scale_curve.csv", std::move(csv));
    out.write();
    if (ctx.out) {
      *ctx.out << fmt::format("{} ratios over {} faces\n", curve->size(),
                              curve->front().n_faces);
    }
    return kExitOk;
  });
}

int cmd_assign(const CommandContext& ctx, const std::string& annotations,
               const AssignOptions& options) {
  return guarded(ctx, [&] {
    Strategy strategy = ctx.config.strategy;
    if (options.strategy) {
      try {
        strategy = parse_strategy(*options.strategy);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
    RegressorModel model = ctx.config.model;
    if (strategy == Strategy::kHambox) {
      if (!options.sim_quality) {
        throw UsageError("strategy hambox needs regressed boxes; pass --sim-quality Q");
      }
      model.quality = *options.sim_quality;
      model.ramp.reset();
      model.validate();
    }
    const Dataset data = load_dataset(ctx, annotations);
    const ToolConfig& cfg = ctx.config;

    std::vector<std::string> rows(data.records.size());
    parallel_for(data.records.size(), ctx.threads, [&](std::size_t img) {
      const ImageRecord& rec = data.records[img];
      const std::vector<Box> faces = face_boxes(rec);
      const auto [w, h] = image_extent(rec);
      const AnchorGrid grid = generate_anchors(cfg.anchors, w, h);
      Assignment a;
      std::vector<Box> regressed;
      std::vector<bool> ignore;
      switch (strategy) {
        case Strategy::kSms: a = match_first_step(grid, faces, cfg.match); break;
        case Strategy::kDms: a = match_two_step(grid, faces, cfg.match); break;
        case Strategy::kNams: a = match_nams(grid, faces, cfg.match); break;
        case Strategy::kHambox: {
          regressed = simulate_regression(grid, faces, model, 0, img);
          a = compensate(match_first_step(grid, faces, cfg.match), grid, faces, regressed,
                         cfg.comp);
          ignore = ignore_mask(a, compute_quality(regressed, faces));
          break;
        }
      }
      const BestFace best =
          options.all_rows ? best_face_per_anchor(grid, faces) : BestFace{};
      std::string& out = rows[img];
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const bool pos = a.positive(i);
        if (!pos && !options.all_rows) continue;
        int label = pos ? 1 : 0;
        if (!pos && !ignore.empty() && ignore[i]) label = -1;
        std::int32_t face = a.face_of[i];
        double overlap = 0.0;
        if (pos) {
          const Box& f = faces[static_cast<std::size_t>(face)];
          overlap = a.source[i] == Source::kHamboxCompensated ? iou(regressed[i], f)
                                                               : iou(grid.anchors[i], f);
        } else {
          face = best.face[i];
          overlap = best.iou[i];
        }
        out += fmt::format("{},{},{},{},{},{},{}\n", img, i, grid.level_of[i], label, face,
                           source_name(a.source[i]), overlap);
      }
    });

    std::string csv = "image,anchor,level,label,face,source,iou\n";
    std::size_t n_rows = 0;
    for (const std::string& r : rows) {
      csv += r;
      n_rows += static_cast<std::size_t>(std::count(r.begin(), r.end(), '\n'));
    }
    OutputSet out(ctx, "assign");
    out.argument("annotations", data.source);
    out.argument("strategy", std::string(strategy_name(strategy)));
    if (options.sim_quality) out.argument("sim_quality", *options.sim_quality);
    out.argument("all_rows", options.all_rows);
    out.add("assign.csv", std::move(csv));
    out.write();
    if (ctx.out) {
      *ctx.out << fmt::format("{} rows over {} images ({})\n", n_rows, data.records.size(),
                              strategy_name(strategy));
    }
    return kExitOk;
  });
}

int cmd_simulate(const CommandContext& ctx, const std::string& annotations, int iters) {
  return guarded(ctx, [&] {
    if (iters < 1) throw UsageError("--iters must be >= 1");
    const Dataset data = load_dataset(ctx, annotations);
    const ToolConfig& cfg = ctx.config;
    SimulationSetup setup;
    setup.anchors = cfg.anchors;
    setup.match = cfg.match;
    setup.comp = cfg.comp;
    setup.loss = cfg.loss;
    setup.model = cfg.model;
    setup.scorer = cfg.scorer;
    setup.threads = ctx.threads;

    std::vector<ProvenanceReport> reports(data.records.size());
    const auto records = run_simulation(
        data.records, setup, iters,
        [&](std::size_t img, const AnchorGrid& grid, std::span<const Box> faces,
            const ImageStep& step) {
          reports[img] = provenance_report(step.assignment, step.quality, step.regressed,
                                           step.scores, faces, grid.anchors,
                                           cfg.nms_threshold);
        });

    std::string sim = "iter,cls_com,cls_norm,loc_com,loc_norm,n_com,mean_com_iou,n_ignored\n";
    for (const SimulationRecord& r : records) {
      sim += fmt::format("{},{},{},{},{},{},{},{}\n", r.iteration, r.loss.cls_compensated,
                         r.loss.cls_normal, r.loss.loc_compensated, r.loss.loc_normal,
                         r.n_compensated, fmt_optional(r.mean_compensated_iou), r.n_ignored);
    }

    const ProvenanceReport p = merge_reports(reports);
    const auto quantile = [&](double q) -> std::optional<double> {
      if (p.iou_cdf.empty()) return std::nullopt;
      const auto k = static_cast<std::size_t>(
          std::ceil(q * static_cast<double>(p.iou_cdf.size())) - 1.0);
      return p.iou_cdf[std::min(k, p.iou_cdf.size() - 1)];
    };
    std::string prov = "field,value\n";
    const auto field = [&](std::string_view name, const auto& value) {
      prov += fmt::format("{},{}\n", name, value);
    };
    field("n_faces", count_faces(data.records));
    field("n_cpbb", p.n_cpbb);
    field("n_cpbb_from_matched", p.n_cpbb_from_matched);
    field("frac_cpbb_from_matched", p.frac_cpbb_from_matched);
    field("n_high_quality", p.n_high_quality);
    field("n_hq_unmatched", p.n_hq_unmatched);
    field("frac_hq_unmatched", p.frac_hq_unmatched);
    field("faces_matched_anchor", p.faces_matched_anchor);
    field("faces_matched_cpbb", p.faces_matched_cpbb);
    field("faces_matched_cpbb_post_nms", p.faces_matched_cpbb_post_nms);
    field("matched_iou_p10", fmt_optional(quantile(0.10)));
    field("matched_iou_p50", fmt_optional(quantile(0.50)));
    field("matched_iou_p90", fmt_optional(quantile(0.90)));

    OutputSet out(ctx, "simulate");
    out.argument("annotations", data.source);
    out.argument("iters", iters);
    out.add("simulation.csv", std::move(sim));
    out.add("provenance.csv", std::move(prov));
    out.write();
    if (ctx.out) {
      *ctx.out << fmt::format("{} iterations over {} images\n", iters, data.records.size());
    }
    return kExitOk;
  });
}

int cmd_loss_check(std::uint64_t seed, int trials, bool corrupt, std::ostream& out,
                   std::ostream& err) {
  constexpr double kTolerance = 1e-4;
  constexpr double kLossValueTolerance = 1e-10;
  if (trials < 1) {
    err << "error: --trials must be >= 1\n";
    return kExitUsage;
  }
  GradCheckResult r;
  try {
    r = gradient_check(seed, trials, 1e-4, corrupt);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  out << fmt::format("trials {} max_rel_error {:.3e} loss_value_rel_error {:.3e}\n", r.trials,
                     r.max_rel_error, r.max_loss_rel_error);
  const bool ok = r.max_rel_error < kTolerance && r.ignored_exactly_zero &&
                  r.max_loss_rel_error < kLossValueTolerance;
  if (!ok) {
    err << fmt::format(
        "gradient check failed: worst trial {} anchor {} analytic {} numeric {} "
        "(rel error {:.3e}); loss value rel error {:.3e}; ignored gradients exactly zero: {}\n",
        r.worst_trial, r.worst_anchor, r.worst_analytic, r.worst_numeric, r.max_rel_error,
        r.max_loss_rel_error, r.ignored_exactly_zero ? "yes" : "no");
    return kExitFailure;
  }
  return kExitOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Anchor matching, hard-anchor mining and loss analysis for face detectors"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out_dir = ".";
  std::optional<double> opt_t;
  std::optional<int> opt_k;
  app.add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Random seed (overrides [simulator] seed)");
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--T", opt_t, "Online positive threshold (overrides [hambox] T)");
  app.add_option("--K", opt_k, "Per-face anchor budget (overrides [hambox] K)");

  auto* anchors = app.add_subcommand("anchors", "Write the anchor grid of one image size");
  std::optional<int> width;
  std::optional<int> height;
  anchors->add_option("--width", width, "Image width (default [data] image_width)");
  anchors->add_option("--height", height, "Image height (default [data] image_height)");

  auto* match_stats =
      app.add_subcommand("match-stats", "Matched-face statistics over a scale-ratio range");
  std::string annotations;
  std::string ratios = "0.68:0.68:1";
  match_stats->add_option("--annotations", annotations, "WIDER FACE bbx_gt file");
  match_stats->add_option("--ratios", ratios, "start:stop:step")->capture_default_str();

  auto* assign = app.add_subcommand("assign", "Dump per-anchor labels for one strategy");
  std::optional<std::string> strategy;
  std::optional<double> sim_quality;
  bool all_rows = false;
  assign->add_option("--annotations", annotations, "WIDER FACE bbx_gt file");
  assign->add_option("--strategy", strategy, "sms|dms|nams|hambox");
  assign->add_option("--sim-quality", sim_quality, "Simulated regression quality in [0, 1]");
  assign->add_flag("--all", all_rows, "Include background and ignored anchors");

  auto* simulate = app.add_subcommand("simulate", "Run the training-dynamics simulator");
  int iters = 50;
  simulate->add_option("--annotations", annotations, "WIDER FACE bbx_gt file");
  simulate->add_option("--iters", iters, "Iterations")->capture_default_str();

  auto* loss_check = app.add_subcommand("loss-check", "Finite-difference gradient check");
  int trials = 100;
  bool corrupt = false;
  loss_check->add_option("--trials", trials, "Random problems")->capture_default_str();
  loss_check->add_flag("--corrupt-gradient", corrupt, "Perturb the analytic gradient (test)");

  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CommandContext ctx;
  ctx.threads = threads;
  ctx.out_dir = out_dir;
  ctx.out = &out;
  ctx.err = &err;
  try {
    if (!config_path.empty()) ctx.config = load_config(config_path);
    if (seed) ctx.config.model.seed = *seed;
    if (opt_t) ctx.config.comp.T = *opt_t;
    if (opt_k) ctx.config.comp.K = *opt_k;
    ctx.config.validate();
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  }

  if (anchors->parsed()) {
    return cmd_anchors(ctx, width.value_or(ctx.config.data.image_width),
                       height.value_or(ctx.config.data.image_height));
  }
  if (match_stats->parsed()) return cmd_match_stats(ctx, annotations, ratios);
  if (assign->parsed()) {
    return cmd_assign(ctx, annotations, AssignOptions{strategy, sim_quality, all_rows});
  }
  if (simulate->parsed()) return cmd_simulate(ctx, annotations, iters);
  return cmd_loss_check(ctx.config.model.seed, trials, corrupt, out, err);
}

}  // namespace anchormine
