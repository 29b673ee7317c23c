// nbf — multichannel target-speech separation toolkit.
// Subcommands: simulate, train, separate, evaluate. One config file drives
// everything; flags win over file values. Exit codes: 0 ok, 1 runtime
// failure, 2 usage/config error.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "nbf/evaluator.hpp"
#include "nbf/trainer.hpp"
#include "nbf/wav_io.hpp"

namespace fs = std::filesystem;
using namespace nbf;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  int threads = 0;
  int64_t seed = -1;
};

RunConfig load_config(const GlobalArgs& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig::defaults() : RunConfig::from_file(g.config_path);
  for (const std::string& o : g.overrides) cfg.apply_override(o);
  if (g.seed >= 0) cfg.apply_override("training.seed=" + std::to_string(g.seed));
  cfg.validate();
  if (g.threads > 0) set_threads(g.threads);
  std::cerr << "# run configuration (value, provenance)\n";
  cfg.echo(std::cerr);
  return cfg;
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw ConfigError(what + " not found: " + path);
}

int cmd_simulate(const GlobalArgs& g, const std::string& out_dir, int scenes, int64_t seed_flag) {
  RunConfig cfg = load_config(g);
  if (scenes < 12)
    throw ConfigError("simulate: --scenes must be >= 12 (one per stratification bucket)");
  const uint64_t seed = seed_flag >= 0 ? uint64_t(seed_flag) : cfg.seed;

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    throw Error("simulate: cannot create output directory " + out_dir);

  auto entries = make_manifest_entries(scenes, seed);
  const ArrayGeometry geom = cfg.geometry();
  const StftConfig stft_cfg = cfg.stft_config();
  const int64_t length = cfg.chunk_samples();

  std::string error;
  bool failed = false;
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < int64_t(entries.size()); ++i) {
    if (failed) continue;
    try {
      const ManifestEntry& e = entries[size_t(i)];
      const Scene scene = generate_scene(e.to_scene_spec(), geom, stft_cfg, length, cfg.sample_rate);
      save_wav(out_dir + "/" + e.mixture_wav, scene.mixture);
      save_wav(out_dir + "/" + e.target_wav, scene.target_clean);
      save_wav(out_dir + "/" + e.noise_wav, scene.noise_plus_interference);
    } catch (const std::exception& ex) {
#pragma omp critical
      {
        if (!failed) error = ex.what();
        failed = true;
      }
    }
  }
  if (failed) throw Error("simulate: " + error);

  write_manifest(out_dir + "/manifest.jsonl", entries);
  std::cout << "wrote " << entries.size() << " scenes to " << out_dir << "\n";
  return 0;
}

int cmd_train(const GlobalArgs& g, const TrainOptions& opts) {
  RunConfig cfg = load_config(g);
  require_file(opts.manifest_path, "manifest");
  if (!opts.resume_checkpoint.empty()) require_file(opts.resume_checkpoint, "checkpoint");

  Pipeline<float> pipeline(cfg);
  Trainer trainer(cfg, pipeline);
  const TrainResult result = trainer.run(opts, std::cout);
  std::cout << "trained " << result.steps_run << " steps, final loss " << result.final_loss
            << ", checkpoint " << opts.out_checkpoint << "\n";
  return 0;
}

int cmd_separate(const GlobalArgs& g, const std::string& ckpt_path, const std::string& in_path,
                 double doa, const std::string& out_path) {
  require_file(ckpt_path, "checkpoint");
  require_file(in_path, "input wav");
  const Checkpoint ck = Checkpoint::load(ckpt_path);
  RunConfig cfg = RunConfig::from_ini_text(ck.config_text);
  for (const std::string& o : g.overrides) cfg.apply_override(o);
  cfg.validate();
  if (g.threads > 0) set_threads(g.threads);

  Pipeline<float> pipeline(cfg);
  pipeline.load_checkpoint(ck);

  const WaveBuffer mix = load_wav(in_path);
  if (mix.channels != cfg.mics())
    throw ConfigError("separate: input has " + std::to_string(mix.channels) +
                      " channels, config expects " + std::to_string(cfg.mics()));
  const WaveBuffer out = pipeline.separate(mix, doa);
  save_wav(out_path, out);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_evaluate(const GlobalArgs& g, const std::string& ckpt_path, const std::string& classic,
                 const std::string& manifest_path, const std::string& out_prefix) {
  require_file(manifest_path, "manifest");
  const auto entries = read_manifest(manifest_path);
  const std::string dir = manifest_dir(manifest_path);

  EvalReport report;
  RunConfig cfg;
  if (!classic.empty()) {
    cfg = load_config(g);
    const BeamKind kind = beam_kind_from(classic);
    if (kind != BeamKind::Mvdr && kind != BeamKind::Gev)
      throw ConfigError("evaluate: --classic expects mvdr or gev (oracle masks)");
    report = evaluate_oracle_classic(kind, cfg, entries, dir);
  } else {
    require_file(ckpt_path, "checkpoint");
    const Checkpoint ck = Checkpoint::load(ckpt_path);
    cfg = RunConfig::from_ini_text(ck.config_text);
    for (const std::string& o : g.overrides) cfg.apply_override(o);
    cfg.validate();
    if (g.threads > 0) set_threads(g.threads);
    Pipeline<float> pipeline(cfg);
    pipeline.load_checkpoint(ck);
    report = evaluate_pipeline(pipeline, entries, dir);
  }

  const std::string tsv = report.to_tsv();
  std::cout << tsv;
  if (!out_prefix.empty()) {
    std::ofstream os(out_prefix + ".tsv", std::ios::trunc);
    if (!os) throw Error("evaluate: cannot write " + out_prefix + ".tsv");
    os << tsv;
    if (cfg.write_per_scene) {
      std::ofstream js(out_prefix + ".jsonl", std::ios::trunc);
      if (!js) throw Error("evaluate: cannot write " + out_prefix + ".jsonl");
      js << report.to_jsonl();
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nbf: mask-based and recurrent neural beamformers for target speech separation"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "run configuration file (INI)");
  app.add_option("--set", g.overrides, "override, section.key=value (repeatable; wins over file)");
  app.add_option("--threads", g.threads, "worker threads (1 = bit-deterministic)");
  app.add_option("--seed", g.seed, "override training.seed");

  auto* sim = app.add_subcommand("simulate", "generate a synthetic scene manifest + WAVs");
  std::string sim_out;
  int sim_scenes = 0;
  int64_t sim_seed = -1;
  sim->add_option("--out", sim_out, "output directory")->required();
  sim->add_option("--scenes", sim_scenes, "number of scenes (>= 12)")->required();
  sim->add_option("--seed", sim_seed, "manifest seed (default: training.seed)");

  auto* train = app.add_subcommand("train", "train the configured system on a manifest");
  TrainOptions topts;
  train->add_option("--manifest", topts.manifest_path, "scene manifest")->required();
  train->add_option("--out", topts.out_checkpoint, "output checkpoint")->required();
  train->add_option("--steps", topts.steps, "step count (default: training.steps)");
  train->add_flag("--train-crf", topts.train_crf_only,
                  "train the cRF estimator as a standalone masking separator");
  train->add_option("--resume", topts.resume_checkpoint, "resume from a checkpoint");

  auto* sep = app.add_subcommand("separate", "separate one multichannel WAV");
  std::string sep_ckpt, sep_in, sep_out;
  double sep_doa = 0.0;
  sep->add_option("--ckpt", sep_ckpt, "checkpoint")->required();
  sep->add_option("--in", sep_in, "input multichannel WAV")->required();
  sep->add_option("--doa", sep_doa, "target direction of arrival, degrees")->required();
  sep->add_option("--out", sep_out, "output WAV")->required();

  auto* eval = app.add_subcommand("evaluate", "bucketed Si-SNR/SDR report over a manifest");
  std::string eval_ckpt, eval_classic, eval_manifest, eval_out;
  eval->add_option("--ckpt", eval_ckpt, "checkpoint to evaluate");
  eval->add_option("--classic", eval_classic, "oracle-mask classic kind: mvdr | gev");
  eval->add_option("--manifest", eval_manifest, "scene manifest")->required();
  eval->add_option("--out", eval_out, "report path prefix (.tsv/.jsonl)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(g, sim_out, sim_scenes, sim_seed);
    if (train->parsed()) return cmd_train(g, topts);
    if (sep->parsed()) return cmd_separate(g, sep_ckpt, sep_in, sep_doa, sep_out);
    if (eval->parsed()) {
      if (eval_ckpt.empty() == eval_classic.empty())
        throw ConfigError("evaluate: pass exactly one of --ckpt or --classic");
      return cmd_evaluate(g, eval_ckpt, eval_classic, eval_manifest, eval_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
