// Command-line front end: register a pair, generate a synthetic corpus,
// benchmark it, or run the refinement ablation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fflogo/fflogo.hpp"

namespace {

namespace fs = std::filesystem;
using namespace fflogo;

// Exit codes; `fflogo info` prints the table.
enum ExitCode : int {
  exit_ok = 0,
  exit_internal = 1,
  exit_usage = 2,
  exit_io = 3,
  exit_config = 4,
  exit_stage_base = 10,  // + Stage enum value
};

int stage_exit_code(Stage s) { return exit_stage_base + static_cast<int>(s); }

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("FFLOGO_LOG");
  if (!env) return LogLevel::info;
  const std::string v(env);
  if (v == "quiet") return LogLevel::quiet;
  if (v == "debug") return LogLevel::debug;
  return LogLevel::info;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::info) std::cerr << "[fflogo] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::debug) std::cerr << "[fflogo:debug] " << msg << "\n";
}

PipelineConfig resolve_config(const std::string& config_path, std::uint64_t* seed_override,
                              const std::string* extractor_override) {
  PipelineConfig config;
  if (!config_path.empty()) config = load_config(config_path);
  if (seed_override) config.seed = *seed_override;
  if (extractor_override) config.extractor = *extractor_override;
  config.validate();
  return config;
}

RefinementMode resolve_mode(bool no_logo, bool go_only) {
  if (no_logo && go_only) throw CLI::ValidationError("--no-logo and --go-only are exclusive");
  if (no_logo) return RefinementMode::ff_only;
  if (go_only) return RefinementMode::global_only;
  return RefinementMode::local_global;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ParseError(path, 0, "cannot open for writing");
  out << j.dump(2) << "\n";
}

int cmd_register(const std::string& source_path, const std::string& target_path,
                 const std::string& config_path, const std::string& out_path,
                 std::uint64_t* seed_override, const std::string* extractor_override,
                 bool no_logo, bool go_only, const std::string& dump_corr,
                 const std::string& dump_patches) {
  const PipelineConfig config = resolve_config(config_path, seed_override, extractor_override);
  const RefinementMode mode = resolve_mode(no_logo, go_only);

  const PointCloud source = load_cloud(source_path);
  const PointCloud target = load_cloud(target_path);
  log_info("loaded " + std::to_string(source.size()) + " source / " +
           std::to_string(target.size()) + " target points");

  const RegistrationResult result = ff_logo_register(source, target, config, mode);
  log_info("coarse -> final via " + std::string(mode_name(mode)) + ", " +
           std::to_string(result.diagnostics.correspondences) + " correspondences, " +
           (result.fusion.degraded ? "degraded fusion" : "fused ok"));

  nlohmann::json out_json = result.to_json();
  out_json["config"] = config_to_json(config);
  write_json(out_path, out_json);

  const fs::path aligned_path = fs::path(out_path).replace_extension("") += "_aligned.ply";
  save_cloud(aligned_path.string(), apply_transform(source, result.final_transform),
             CloudFormat::ply_ascii);
  log_info("wrote " + out_path + " and " + aligned_path.string());

  if (!dump_corr.empty()) save_correspondences_csv(dump_corr, result.correspondences);
  if (!dump_patches.empty()) {
    // Recomputed deterministically from the same config.
    PointCloud down = voxel_downsample(source, config.voxel_size);
    down = estimate_normals(down, std::min<int>(config.normals_k,
                                                static_cast<int>(down.size()) - 1));
    const auto keys = farthest_point_sample(down, std::min<int>(config.keypoints,
                                                                static_cast<int>(down.size())));
    PatchOptions popts;
    popts.radius_factor = config.patch_radius_factor;
    popts.min_points = config.patch_min_points;
    const auto patches = aggregate_patches(down, keys, popts);
    fs::create_directories(dump_patches);
    for (const auto& patch : patches.patches) {
      char name[32];
      std::snprintf(name, sizeof(name), "patch_%03d.ply", patch.keypoint_ordinal);
      save_cloud((fs::path(dump_patches) / name).string(), patch.cloud, CloudFormat::ply_ascii);
    }
    log_debug("dumped " + std::to_string(patches.patches.size()) + " patches");
  }
  return exit_ok;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir,
              std::uint64_t* seed_override) {
  synth::CorpusSpec spec;
  if (!spec_path.empty()) {
    std::ifstream in(spec_path);
    if (!in) throw ParseError(spec_path, 0, "cannot open corpus spec");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(spec_path + ": invalid JSON (" + e.what() + ")");
    }
    try {
      spec = synth::corpus_spec_from_json(j);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(spec_path + ": " + e.what());
    }
  }
  if (seed_override) spec.seed = *seed_override;
  synth::write_corpus(out_dir, spec);
  log_info("wrote " + std::to_string(spec.pairs) + " pairs + manifest to " + out_dir);
  return exit_ok;
}

int cmd_evaluate(const std::string& corpus_dir, const std::string& config_path,
                 const std::string& out_path, const std::string& csv_path, int repeats,
                 std::uint64_t* seed_override, const std::string* extractor_override,
                 bool no_logo, bool go_only) {
  const PipelineConfig config = resolve_config(config_path, seed_override, extractor_override);
  BenchmarkOptions options;
  options.repeats = repeats;
  options.mode = resolve_mode(no_logo, go_only);

  const auto report = run_benchmark(corpus_dir, config, options);
  std::cout << report.table();
  if (!out_path.empty()) write_json(out_path, report.to_json());
  if (!csv_path.empty()) report.write_csv(csv_path);
  return exit_ok;
}

int cmd_ablate(const std::string& corpus_dir, const std::string& config_path,
               const std::string& out_path, int repeats, std::uint64_t* seed_override) {
  const PipelineConfig config = resolve_config(config_path, seed_override, nullptr);
  const auto corpus = load_corpus(corpus_dir);
  const auto report = run_ablation(corpus, config, repeats);
  std::cout << report.table();
  if (!out_path.empty()) write_json(out_path, report.to_json());
  return exit_ok;
}

int cmd_info() {
  std::cout << "fflogo " << FFLOGO_VERSION << "\n\n";
  std::cout << "default config:\n" << config_to_json(PipelineConfig{}).dump(2) << "\n\n";
  std::cout << "exit codes:\n"
            << "  0  success\n"
            << "  1  internal error\n"
            << "  2  usage error\n"
            << "  3  I/O or parse error\n"
            << "  4  config error\n";
  for (int s = 0; s <= static_cast<int>(Stage::fusion); ++s)
    std::cout << "  " << stage_exit_code(static_cast<Stage>(s)) << " pipeline stage '"
              << stage_name(static_cast<Stage>(s)) << "' failed\n";
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-modality point cloud registration toolkit"};
  app.require_subcommand(1);

  std::string source_path, target_path, config_path, out_path, csv_path;
  std::string spec_path, corpus_dir, dump_corr, dump_patches, extractor;
  std::uint64_t seed = 0;
  bool seed_set = false, extractor_set = false, no_logo = false, go_only = false;
  int repeats = 10;

  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "override the config seed")
        ->each([&](const std::string&) { seed_set = true; });
  };
  auto add_extractor = [&](CLI::App* cmd) {
    cmd->add_option("--extractor", extractor,
                    "feature extractor: classical-descriptor | seeded-attention")
        ->check(CLI::IsMember({"classical-descriptor", "seeded-attention"}))
        ->each([&](const std::string&) { extractor_set = true; });
  };

  auto* reg = app.add_subcommand("register", "align a source cloud onto a target cloud");
  reg->add_option("source", source_path, "source cloud (.ply/.pcd/.xyz)")->required();
  reg->add_option("target", target_path, "target cloud (.ply/.pcd/.xyz)")->required();
  reg->add_option("--config", config_path, "pipeline config JSON");
  reg->add_option("--out", out_path, "result JSON path")->default_val("registration.json");
  reg->add_flag("--no-logo", no_logo, "stop after the coarse feature-filtering estimate");
  reg->add_flag("--go-only", go_only, "refine with one global point-to-plane solve");
  reg->add_option("--dump-correspondences", dump_corr, "write filtered correspondences CSV");
  reg->add_option("--dump-patches", dump_patches, "write per-keypoint patch PLYs to a directory");
  add_seed(reg);
  add_extractor(reg);

  auto* syn = app.add_subcommand("synth", "generate a synthetic cross-modality corpus");
  syn->add_option("spec", spec_path, "corpus spec JSON (defaults built in)");
  syn->add_option("--out", out_path, "output directory")->required();
  add_seed(syn);

  auto* eval = app.add_subcommand("evaluate", "run the benchmark over a corpus");
  eval->add_option("corpus", corpus_dir, "corpus directory with manifest.json")->required();
  eval->add_option("--config", config_path, "pipeline config JSON");
  eval->add_option("--out", out_path, "report JSON path");
  eval->add_option("--csv", csv_path, "per-run RE/TE CSV path");
  eval->add_option("--repeats", repeats, "independent repeats")->default_val(10);
  eval->add_flag("--no-logo", no_logo, "evaluate the coarse-only pipeline");
  eval->add_flag("--go-only", go_only, "evaluate the global-refinement pipeline");
  add_seed(eval);
  add_extractor(eval);

  auto* abl = app.add_subcommand("ablate", "compare ff / ff+go / ff+logo on a corpus");
  abl->add_option("corpus", corpus_dir, "corpus directory with manifest.json")->required();
  abl->add_option("--config", config_path, "pipeline config JSON");
  abl->add_option("--out", out_path, "three-row report JSON path");
  abl->add_option("--repeats", repeats, "independent repeats")->default_val(1);
  add_seed(abl);

  auto* info = app.add_subcommand("info", "print version, defaults and exit codes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (reg->parsed())
      return cmd_register(source_path, target_path, config_path, out_path,
                          seed_set ? &seed : nullptr, extractor_set ? &extractor : nullptr,
                          no_logo, go_only, dump_corr, dump_patches);
    if (syn->parsed()) return cmd_synth(spec_path, out_path, seed_set ? &seed : nullptr);
    if (eval->parsed())
      return cmd_evaluate(corpus_dir, config_path, out_path, csv_path, repeats,
                          seed_set ? &seed : nullptr, extractor_set ? &extractor : nullptr,
                          no_logo, go_only);
    if (abl->parsed())
      return cmd_ablate(corpus_dir, config_path, out_path, repeats, seed_set ? &seed : nullptr);
    if (info->parsed()) return cmd_info();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const ParseError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return exit_io;
  } catch (const PipelineError& e) {
    std::cerr << "pipeline error: " << e.what() << "\n";
    return stage_exit_code(e.stage());
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_internal;
  }
  return exit_usage;
}
