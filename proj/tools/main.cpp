// ctxenh: scene mixing, hotword-anchored enhancement, evaluation, and sweep
// reproduction over synthetic microphone-array scenes.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "enhance/formats.h"
#include "enhance/metrics.h"
#include "enhance/pipeline.h"
#include "enhance/scene.h"
#include "enhance/wav.h"

namespace {

using namespace enhance;

ForcedMode parse_mode(const std::string& name) {
  if (name == "select") return ForcedMode::Select;
  if (name == "cab") return ForcedMode::Cab;
  if (name == "sc") return ForcedMode::SpeechCleaner;
  if (name == "oracle") return ForcedMode::Oracle;
  if (name == "passthrough") return ForcedMode::Passthrough;
  throw std::runtime_error("unknown mode: " + name);
}

int run_mix(const std::string& manifest_path, const std::string& out_dir, std::int64_t seed_override) {
  auto manifest = load_manifest(manifest_path);
  if (seed_override >= 0) manifest.seed = static_cast<std::uint64_t>(seed_override);

  struct Rendered {
    std::string id;
    Scene scene;
  };
  std::vector<Rendered> rendered;
  for (std::size_t i = 0; i < manifest.scenes.size(); ++i) {
    auto named = scene_spec_from_json(manifest.scenes[i], manifest, i);
    rendered.push_back({named.id, mix_scene(named.spec)});
  }

  std::filesystem::create_directories(out_dir);
  for (const auto& r : rendered) {
    const auto base = std::filesystem::path(out_dir) / r.id;
    write_wav(base.string() + ".wav", r.scene.mixture);
    write_wav(base.string() + ".clean.wav", r.scene.clean_target);
    save_segmentation(base.string() + ".seg.json", r.scene.seg, r.scene.mixture.sample_rate);
  }
  std::cout << "mixed " << rendered.size() << " scene(s) into " << out_dir << "\n";
  return 0;
}

int run_enhance(const std::string& in_wav, const std::string& seg_path, const std::string& config_path,
                const std::string& mode_name, const std::string& clean_path, const std::string& out_wav,
                double gamma_db_override, bool have_gamma) {
  PipelineConfig config = config_path.empty() ? PipelineConfig{} : load_config(config_path);
  if (have_gamma) config.gamma_db = gamma_db_override;

  const auto wave = read_wav(in_wav);
  if (wave.sample_rate != config.sample_rate) {
    throw std::runtime_error("sample rate mismatch between input and configuration");
  }
  const auto seg = load_segmentation(seg_path);
  const auto mode = parse_mode(mode_name);

  MultiChannelWave clean;
  const MultiChannelWave* clean_ptr = nullptr;
  if (mode == ForcedMode::Oracle) {
    if (clean_path.empty()) throw std::runtime_error("oracle requires clean reference");
    clean = read_wav(clean_path);
    clean_ptr = &clean;
  }

  const auto result = enhance_forced(wave, seg, config, mode, clean_ptr);

  MultiChannelWave out;
  out.sample_rate = wave.sample_rate;
  out.samples.push_back(result.enhanced);
  write_wav(out_wav, out);
  std::cout << diagnostics_to_json(result, config) << "\n";
  return 0;
}

int run_evaluate(const std::string& enhanced_path, const std::string& mix_path,
                 const std::string& clean_path, const std::string& seg_path,
                 const std::string& config_path) {
  const PipelineConfig config = config_path.empty() ? PipelineConfig{} : load_config(config_path);
  const auto enhanced = read_wav(enhanced_path);
  const auto mixture = read_wav(mix_path);
  const auto clean = read_wav(clean_path);
  const auto seg = load_segmentation(seg_path);

  const auto report = evaluate_run(enhanced.samples.front(), clean, mixture, seg, config.frame_params,
                                   config.reference_channel, 0.0);
  nlohmann::ordered_json j;
  j["si_sdr_db"] = report.si_sdr_db;
  j["si_sdr_improvement_db"] = report.si_sdr_improvement_db;
  j["seg_snr_db"] = report.seg_snr_db;
  std::cout << j.dump(2) << "\n";
  return 0;
}

struct SweepTask {
  std::string scene_id;
  double snr_db = 0.0;
  double context_s = 8.0;
  SceneSpec spec;
  std::string algorithm;
};

nlohmann::json grid_scene_entry(const nlohmann::json& spec_json, double snr_db, std::size_t rep,
                                std::size_t index) {
  nlohmann::json entry;
  entry["id"] = "grid_snr" + std::to_string(static_cast<int>(std::round(snr_db))) + "_rep" +
                std::to_string(rep);
  if (std::isinf(snr_db)) entry["id"] = "grid_clean_rep" + std::to_string(rep);
  entry["seed"] = spec_json.value("seed", 0ULL) + 1000 + index;
  if (std::isinf(snr_db)) {
    entry["snr_db"] = "inf";
  } else {
    entry["snr_db"] = snr_db;
  }
  entry["context_length_s"] = spec_json.contains("context_lengths_s")
                                  ? spec_json.at("context_lengths_s").get<std::vector<double>>().front()
                                  : 8.0;
  entry["desired_in_context"] = spec_json.value("desired_in_context", false);
  entry["ambient_rms"] = spec_json.value("ambient_rms", 1e-3);
  entry["target"] = {{"source",
                      {{"kind", "speech_like"}, {"duration_s", spec_json.value("target_duration_s", 3.2)}}},
                     {"hotword_s", spec_json.value("hotword_s", 0.8)},
                     {"azimuth_deg", spec_json.value("target_azimuth_deg", 90.0)},
                     {"position", "target"}};
  entry["interferer"] = {{"source", {{"kind", spec_json.value("noise", std::string("speech_shaped"))}}},
                         {"azimuth_deg", spec_json.value("interferer_azimuth_deg", 30.0)},
                         {"position", "interferer"}};
  return entry;
}

int run_sweep(const std::string& spec_path, const std::string& out_override, std::int64_t seed_override,
              std::int64_t channels_override, double gamma_override, bool have_gamma,
              double context_override, bool have_context, unsigned jobs) {
  std::ifstream in(spec_path);
  if (!in) throw std::runtime_error("cannot open sweep spec: " + spec_path);
  nlohmann::json spec_json;
  try {
    in >> spec_json;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed sweep spec: ") + e.what());
  }
  if (seed_override >= 0) spec_json["seed"] = static_cast<std::uint64_t>(seed_override);
  if (channels_override > 0) spec_json["channels"] = static_cast<std::size_t>(channels_override);
  if (have_context) spec_json["context_lengths_s"] = std::vector<double>{context_override};

  const auto algorithms = spec_json.value("algorithms", std::vector<std::string>{"cab", "sc", "select"});
  if (algorithms.empty()) throw std::runtime_error("sweep needs at least one algorithm");
  for (const auto& a : algorithms) parse_mode(a);

  PipelineConfig config =
      spec_json.contains("config") ? config_from_json(spec_json.at("config")) : PipelineConfig{};
  if (have_gamma) config.gamma_db = gamma_override;
  config.sample_rate = spec_json.value("sample_rate", config.sample_rate);

  SceneManifest defaults;
  defaults.seed = spec_json.value("seed", 0ULL);
  defaults.sample_rate = spec_json.value("sample_rate", 16000);
  defaults.channels = spec_json.value("channels", std::size_t{3});

  std::vector<double> context_lengths =
      spec_json.value("context_lengths_s", std::vector<double>{8.0});
  std::sort(context_lengths.rbegin(), context_lengths.rend());

  // Expand scene specs: explicit manifest, inline scenes, or generator grid.
  std::vector<NamedSceneSpec> scene_specs;
  if (spec_json.contains("manifest")) {
    auto manifest = load_manifest(spec_json.at("manifest").get<std::string>());
    for (std::size_t i = 0; i < manifest.scenes.size(); ++i) {
      scene_specs.push_back(scene_spec_from_json(manifest.scenes[i], manifest, i));
    }
  } else if (spec_json.contains("scenes")) {
    std::size_t i = 0;
    for (const auto& entry : spec_json.at("scenes")) {
      scene_specs.push_back(scene_spec_from_json(entry, defaults, i++));
    }
  } else {
    std::vector<double> grid;
    for (const auto& v : spec_json.at("snr_db")) grid.push_back(parse_snr_db(v));
    if (grid.empty()) throw std::runtime_error("sweep grid is empty");
    const std::size_t reps = spec_json.value("scenes_per_point", std::size_t{1});
    std::size_t index = 0;
    for (double snr : grid) {
      for (std::size_t rep = 0; rep < reps; ++rep) {
        nlohmann::json entry = grid_scene_entry(spec_json, snr, rep, index);
        entry["context_length_s"] = context_lengths.front();
        scene_specs.push_back(scene_spec_from_json(entry, defaults, index));
        ++index;
      }
    }
  }

  // One task per scene x context length x algorithm; scenes are built at the
  // longest context and truncated so shorter-context runs share the same
  // noise immediately before the hotword.
  std::vector<SweepTask> tasks;
  for (const auto& named : scene_specs) {
    for (double ctx : context_lengths) {
      for (const auto& algo : algorithms) {
        SweepTask task;
        task.scene_id = named.id + (context_lengths.size() > 1 ? "_ctx" + std::to_string(ctx) : "");
        task.snr_db = named.spec.snr_db;
        task.context_s = ctx;
        task.spec = named.spec;
        task.algorithm = algo;
        tasks.push_back(std::move(task));
      }
    }
  }

  std::vector<SweepRow> rows(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> any_failed{false};

  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const auto& task = tasks[i];
      SweepRow& row = rows[i];
      row.scene_id = task.scene_id;
      row.snr_db = task.snr_db;
      row.algorithm = task.algorithm;
      try {
        Scene scene = mix_scene(task.spec, config.reference_channel);
        if (task.context_s < task.spec.context_length_s) {
          truncate_context(scene, task.context_s, config.frame_params.fft_size);
        }
        const auto t0 = std::chrono::steady_clock::now();
        const auto result = enhance_forced(scene.mixture, scene.seg, config, parse_mode(task.algorithm),
                                           &scene.clean_target);
        row.runtime_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        row.metrics = evaluate_run(result.enhanced, scene.clean_target, scene.mixture, scene.seg,
                                   config.frame_params, config.reference_channel,
                                   result.diag.noise_reduction_db);
        row.decision = to_string(result.decision.chosen);
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
        any_failed.store(true);
      }
    }
  };

  unsigned n_workers = jobs > 0 ? jobs : std::thread::hardware_concurrency();
  if (n_workers == 0) n_workers = 1;
  n_workers = std::min<unsigned>(n_workers, static_cast<unsigned>(tasks.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w + 1 < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.snr_db != b.snr_db) return a.snr_db < b.snr_db;
    if (a.algorithm != b.algorithm) return a.algorithm < b.algorithm;
    return a.scene_id < b.scene_id;
  });

  const std::string out_csv = !out_override.empty()
                                  ? out_override
                                  : spec_json.value("out_csv", std::string("sweep.csv"));
  std::ofstream csv(out_csv);
  if (!csv) throw std::runtime_error("cannot create CSV: " + out_csv);
  csv << csv_schema_comment() << "\n" << csv_header() << "\n";
  for (const auto& row : rows) csv << csv_row(row) << "\n";

  // Mean improvement per (snr, algorithm) group.
  std::map<std::pair<double, std::string>, std::pair<double, std::size_t>> groups;
  for (const auto& row : rows) {
    if (row.failed) {
      std::cerr << "scene " << row.scene_id << " [" << row.algorithm << "] failed: " << row.error << "\n";
      continue;
    }
    auto& g = groups[{row.snr_db, row.algorithm}];
    g.first += row.metrics.si_sdr_improvement_db;
    g.second += 1;
  }
  std::cout << "snr_db  algorithm    mean_si_sdr_improvement_db\n";
  for (const auto& [key, value] : groups) {
    std::cout << key.first << "\t" << key.second << "\t" << value.first / static_cast<double>(value.second)
              << "\n";
  }
  std::cout << "wrote " << rows.size() << " row(s) to " << out_csv << "\n";
  return any_failed.load() ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hotword-anchored multichannel speech enhancement"};
  app.require_subcommand(1);

  std::string manifest_path, out_path, in_wav, seg_path, config_path, clean_path, enhanced_path, mix_path;
  std::string mode_name = "select";
  std::string sweep_spec;
  double gamma_db = 6.0, context_s = 8.0;
  std::int64_t seed = -1, channels = -1;
  unsigned jobs = 0;

  auto* mix = app.add_subcommand("mix", "render scenes from a manifest");
  mix->add_option("--manifest", manifest_path, "scene manifest JSON")->required();
  mix->add_option("--out", out_path, "output directory")->required();
  mix->add_option("--seed", seed, "override the manifest seed");

  auto* enh = app.add_subcommand("enhance", "enhance one utterance");
  enh->add_option("--in", in_wav, "input multichannel WAV")->required();
  enh->add_option("--seg", seg_path, "segmentation sidecar JSON")->required();
  enh->add_option("--config", config_path, "pipeline configuration JSON");
  auto* mode_opt = enh->add_option("--mode", mode_name, "select|cab|sc|oracle|passthrough");
  auto* gamma_opt = enh->add_option("--gamma-db", gamma_db, "selector threshold");
  enh->add_option("--clean-ref", clean_path, "isolated clean rendering (oracle mode)");
  enh->add_option("--out", out_path, "output WAV")->required();

  auto* eval = app.add_subcommand("evaluate", "score an enhanced file against ground truth");
  eval->add_option("--enhanced", enhanced_path, "enhanced WAV")->required();
  eval->add_option("--mix", mix_path, "original mixture WAV")->required();
  eval->add_option("--clean", clean_path, "clean target rendering WAV")->required();
  eval->add_option("--seg", seg_path, "segmentation sidecar JSON")->required();
  eval->add_option("--config", config_path, "pipeline configuration JSON");

  auto* sweep = app.add_subcommand("sweep", "run a metric sweep over a scene grid");
  sweep->add_option("--spec", sweep_spec, "sweep specification JSON")->required();
  sweep->add_option("--out", out_path, "output CSV path");
  sweep->add_option("--seed", seed, "override the sweep seed");
  sweep->add_option("--channels", channels, "override the channel count");
  auto* sweep_gamma = sweep->add_option("--gamma-db", gamma_db, "selector threshold");
  auto* sweep_ctx = sweep->add_option("--context-s", context_s, "single context length");
  sweep->add_option("--jobs", jobs, "worker pool size (default: available parallelism)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (mix->parsed()) return run_mix(manifest_path, out_path, seed);
    if (enh->parsed()) {
      (void)*mode_opt;
      return run_enhance(in_wav, seg_path, config_path, mode_name, clean_path, out_path, gamma_db,
                         gamma_opt->count() > 0);
    }
    if (eval->parsed()) return run_evaluate(enhanced_path, mix_path, clean_path, seg_path, config_path);
    if (sweep->parsed()) {
      return run_sweep(sweep_spec, out_path, seed, channels, gamma_db, sweep_gamma->count() > 0,
                       context_s, sweep_ctx->count() > 0, jobs);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
