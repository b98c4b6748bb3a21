// JSON manifests, configuration files, segmentation sidecars, and the CSV
// report schema shared by the CLI and the test harness.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "enhance/metrics.h"
#include "enhance/pipeline.h"
#include "enhance/scene.h"

namespace enhance {

// Every field optional; absent fields keep the built-in defaults.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::string& path);

nlohmann::json seg_to_json(const UtteranceSegmentation& seg, int sample_rate);
UtteranceSegmentation seg_from_json(const nlohmann::json& j);
void save_segmentation(const std::string& path, const UtteranceSegmentation& seg, int sample_rate);
UtteranceSegmentation load_segmentation(const std::string& path);

// Scene manifests: shared defaults plus one JSON object per scene. Source
// descriptors either reference a WAV file or name a generator
// (white | pink | speech_shaped | speech_like | sine).
struct SceneManifest {
  std::uint64_t seed = 0;
  int sample_rate = 16000;
  std::size_t channels = 3;
  std::vector<nlohmann::json> scenes;
};

SceneManifest load_manifest(const std::string& path);

struct NamedSceneSpec {
  std::string id;
  SceneSpec spec;
};

// Expands one manifest entry; `index` seeds per-scene determinism and
// names scenes without an explicit id.
NamedSceneSpec scene_spec_from_json(const nlohmann::json& entry, const SceneManifest& defaults,
                                    std::size_t index);

// "inf" (any case) or a number; the noiseless case maps to +infinity.
double parse_snr_db(const nlohmann::json& value);

struct SweepRow {
  std::string scene_id;
  double snr_db = 0.0;
  std::string algorithm;
  MetricReport metrics;
  std::string decision;
  double runtime_ms = 0.0;
  bool failed = false;
  std::string error;
};

// Report CSV, schema v1:
// scene_id,snr_db,algorithm,si_sdr_db,si_sdr_improvement_db,seg_snr_db,
// noise_reduction_db,decision,runtime_ms,status
std::string csv_schema_comment();
std::string csv_header();
std::string csv_row(const SweepRow& row);

}  // namespace enhance
