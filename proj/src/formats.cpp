#include "enhance/formats.h"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "enhance/synth.h"
#include "enhance/wav.h"

namespace enhance {

namespace {

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

}  // namespace

PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig config;
  config.frame_params.fft_size = j.value("fft_size", config.frame_params.fft_size);
  config.frame_params.hop_size = j.value("hop_size", config.frame_params.hop_size);
  config.frame_params.window = j.value("window", config.frame_params.window);
  config.sample_rate = j.value("sample_rate", config.sample_rate);
  config.gamma_db = j.value("gamma_db", config.gamma_db);
  config.context_length_s = j.value("context_length_s", config.context_length_s);
  config.snr_floor_db = j.value("snr_floor_db", config.snr_floor_db);
  config.reference_channel = j.value("reference_channel", config.reference_channel);
  if (j.contains("cleaner")) {
    const auto& c = j.at("cleaner");
    config.cleaner.taps = c.value("taps", config.cleaner.taps);
    config.cleaner.forgetting = c.value("forgetting", config.cleaner.forgetting);
    config.cleaner.delta = c.value("delta", config.cleaner.delta);
  }
  if (j.contains("cab")) {
    const auto& c = j.at("cab");
    config.cab.lms_enabled = c.value("lms_enabled", config.cab.lms_enabled);
    config.cab.lms_step = c.value("lms_step", config.cab.lms_step);
    config.cab.psd_floor = c.value("psd_floor", config.cab.psd_floor);
  }
  config.cleaner.reference_channel = config.reference_channel;
  if (config.context_length_s <= 0.0) throw std::runtime_error("context_length_s must be positive");
  if (config.cleaner.taps == 0) throw std::runtime_error("cleaner taps must be >= 1");
  config.frame_params.validate();
  return config;
}

PipelineConfig load_config(const std::string& path) { return config_from_json(load_json(path)); }

nlohmann::json seg_to_json(const UtteranceSegmentation& seg, int sample_rate) {
  return nlohmann::json{{"context_start", seg.context_start},
                        {"hotword_start", seg.hotword_start},
                        {"hotword_end", seg.hotword_end},
                        {"query_end", seg.query_end},
                        {"sample_rate", sample_rate}};
}

UtteranceSegmentation seg_from_json(const nlohmann::json& j) {
  UtteranceSegmentation seg;
  seg.context_start = j.value("context_start", 0ULL);
  seg.hotword_start = j.at("hotword_start").get<std::size_t>();
  seg.context_end = seg.hotword_start;
  seg.hotword_end = j.at("hotword_end").get<std::size_t>();
  seg.query_end = j.at("query_end").get<std::size_t>();
  seg.validate();
  return seg;
}

void save_segmentation(const std::string& path, const UtteranceSegmentation& seg, int sample_rate) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot create file: " + path);
  out << seg_to_json(seg, sample_rate).dump(2) << "\n";
}

UtteranceSegmentation load_segmentation(const std::string& path) {
  return seg_from_json(load_json(path));
}

SceneManifest load_manifest(const std::string& path) {
  const auto j = load_json(path);
  SceneManifest manifest;
  manifest.seed = j.value("seed", 0ULL);
  manifest.sample_rate = j.value("sample_rate", 16000);
  manifest.channels = j.value("channels", std::size_t{3});
  if (!j.contains("scenes") || !j.at("scenes").is_array() || j.at("scenes").empty()) {
    throw std::runtime_error("manifest has no scenes: " + path);
  }
  for (const auto& entry : j.at("scenes")) manifest.scenes.push_back(entry);
  return manifest;
}

double parse_snr_db(const nlohmann::json& value) {
  if (value.is_string()) {
    std::string s = value.get<std::string>();
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "inf" || s == "infinity" || s == "clean") return kInfiniteSnrDb;
    throw std::runtime_error("unrecognized snr_db value: " + value.get<std::string>());
  }
  return value.get<double>();
}

namespace {

std::vector<double> build_source_wave(const nlohmann::json& desc, std::uint64_t seed,
                                      int sample_rate, std::size_t default_len) {
  const std::string kind = desc.value("kind", std::string("file"));
  std::size_t n = default_len;
  if (desc.contains("duration_s")) {
    n = static_cast<std::size_t>(std::llround(desc.at("duration_s").get<double>() * sample_rate));
  }
  const std::uint64_t src_seed = desc.value("seed", seed);

  if (kind == "file") {
    const auto wave = read_wav(desc.at("path").get<std::string>());
    if (wave.sample_rate != sample_rate) {
      throw std::runtime_error("source sample rate mismatch (no resampling): " +
                               desc.at("path").get<std::string>());
    }
    return wave.samples.front();
  }
  if (n == 0) throw std::runtime_error("generated source needs duration_s");
  if (kind == "white") return white_noise(src_seed, n);
  if (kind == "pink") return pink_noise(src_seed, n, sample_rate);
  if (kind == "speech_shaped") return speech_shaped_noise(src_seed, n, sample_rate);
  if (kind == "speech_like") return speech_like(src_seed, n, sample_rate);
  if (kind == "sine") return sinusoid(desc.value("frequency_hz", 440.0), n, sample_rate);
  throw std::runtime_error("unknown source kind: " + kind);
}

std::vector<RenderChannel> build_render(const nlohmann::json& j, std::size_t channels,
                                        int sample_rate) {
  if (j.contains("render")) {
    std::vector<RenderChannel> render;
    for (const auto& rc : j.at("render")) {
      render.push_back({rc.value("delay", 0.0), rc.value("gain", 1.0)});
    }
    if (render.size() != channels) throw std::runtime_error("render entries must match channel count");
    return render;
  }
  return steering_for_azimuth(j.value("azimuth_deg", 0.0), channels, sample_rate);
}

}  // namespace

NamedSceneSpec scene_spec_from_json(const nlohmann::json& entry, const SceneManifest& defaults,
                                    std::size_t index) {
  NamedSceneSpec named;
  named.id = entry.value("id", "scene" + std::to_string(index));

  SceneSpec& spec = named.spec;
  spec.sample_rate = entry.value("sample_rate", defaults.sample_rate);
  spec.channels = entry.value("channels", defaults.channels);
  spec.seed = entry.value("seed", defaults.seed + index);
  spec.snr_db = entry.contains("snr_db") ? parse_snr_db(entry.at("snr_db")) : 0.0;
  spec.context_length_s = entry.value("context_length_s", 8.0);
  spec.desired_in_context = entry.value("desired_in_context", false);
  spec.boundary_jitter_ms = entry.value("boundary_jitter_ms", 0.0);
  spec.ambient_rms = entry.value("ambient_rms", 0.0);

  const auto& target = entry.at("target");
  spec.target.sample_rate = spec.sample_rate;
  spec.target.wave = build_source_wave(target.value("source", nlohmann::json::object()),
                                       spec.seed * 2 + 1, spec.sample_rate, 0);
  spec.target.position_tag = target.value("position", std::string("target"));
  if (target.contains("rirs")) {
    for (const auto& p : target.at("rirs")) {
      const auto rir = read_wav(p.get<std::string>());
      if (rir.sample_rate != spec.sample_rate) throw std::runtime_error("RIR sample rate mismatch");
      spec.target.rirs.push_back(rir.samples.front());
    }
  } else {
    spec.target.render = build_render(target, spec.channels, spec.sample_rate);
  }
  if (target.contains("hotword_s")) {
    spec.hotword_len_samples =
        static_cast<std::size_t>(std::llround(target.at("hotword_s").get<double>() * spec.sample_rate));
  } else {
    spec.hotword_len_samples = target.at("hotword_samples").get<std::size_t>();
  }

  const auto& interferer = entry.at("interferer");
  const std::size_t needed = spec.target.wave.size() +
                             static_cast<std::size_t>(std::llround(spec.context_length_s * spec.sample_rate));
  spec.interferer.sample_rate = spec.sample_rate;
  spec.interferer.wave = build_source_wave(interferer.value("source", nlohmann::json::object()),
                                           spec.seed * 2 + 2, spec.sample_rate, needed);
  spec.interferer.position_tag = interferer.value("position", std::string("interferer"));
  if (interferer.contains("rirs")) {
    for (const auto& p : interferer.at("rirs")) {
      const auto rir = read_wav(p.get<std::string>());
      if (rir.sample_rate != spec.sample_rate) throw std::runtime_error("RIR sample rate mismatch");
      spec.interferer.rirs.push_back(rir.samples.front());
    }
  } else {
    spec.interferer.render = build_render(interferer, spec.channels, spec.sample_rate);
  }
  return named;
}

std::string csv_schema_comment() { return "# ctxenh report schema v1"; }

std::string csv_header() {
  return "scene_id,snr_db,algorithm,si_sdr_db,si_sdr_improvement_db,seg_snr_db,"
         "noise_reduction_db,decision,runtime_ms,status";
}

std::string csv_row(const SweepRow& row) {
  std::ostringstream out;
  out.precision(4);
  out << std::fixed;
  out << row.scene_id << ',';
  if (std::isinf(row.snr_db)) {
    out << "inf";
  } else {
    out << row.snr_db;
  }
  out << ',' << row.algorithm << ',';
  if (row.failed) {
    out << ",,,,,,failed";
  } else {
    out << row.metrics.si_sdr_db << ',' << row.metrics.si_sdr_improvement_db << ','
        << row.metrics.seg_snr_db << ',' << row.metrics.noise_reduction_db << ',' << row.decision
        << ',' << row.runtime_ms << ",ok";
  }
  return out.str();
}

}  // namespace enhance
