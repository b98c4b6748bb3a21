// End-to-end orchestration: SNR estimation from hotword and context powers,
// threshold selection between the Speech Cleaner and the Context Aware
// Beamformer, and execution of the chosen path over one utterance.
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "enhance/beamformer.h"
#include "enhance/cleaner.h"
#include "enhance/signal.h"

namespace enhance {

enum class Algorithm { SpeechCleaner, Cab, Passthrough };
enum class ForcedMode { Select, Cab, SpeechCleaner, Oracle, Passthrough };

std::string to_string(Algorithm a);
std::string to_string(ForcedMode m);

struct SnrEstimate {
  double hotword_power = 0.0;
  double context_power = 0.0;
  double linear = 0.0;  // hotword/context - 1
  double db = 0.0;      // 10 log10(max(linear, floor))
};

struct EnhancementDecision {
  Algorithm chosen = Algorithm::Cab;
  SnrEstimate snr;
  double gamma_db = 6.0;
};

struct CabConfig {
  bool lms_enabled = false;
  double lms_step = 0.05;
  // Bins whose estimated desired-signal trace falls below this share of the
  // mean bin trace fall back to passthrough weights; steering directions
  // estimated from near-empty bins do not generalize to the query.
  double psd_floor = 1e-4;
};

struct PipelineConfig {
  FrameParams frame_params;
  int sample_rate = 16000;
  double gamma_db = 6.0;
  double context_length_s = 8.0;
  double snr_floor_db = -40.0;
  CleanerConfig cleaner;
  CabConfig cab;
  std::size_t reference_channel = 0;
};

struct StageTimings {
  double stft_ms = 0.0;
  double estimate_ms = 0.0;
  double adapt_ms = 0.0;
  double apply_ms = 0.0;
  double synth_ms = 0.0;
  double total_ms = 0.0;
};

struct EigRatioSummary {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct Diagnostics {
  StageTimings timings;
  // Per-bin top-eigenvalue share of the trace, summarized (CAB paths only).
  std::optional<EigRatioSummary> eig_ratio;
  // 10 log10(context power in / context power out) for the applied filter.
  double noise_reduction_db = 0.0;
  std::vector<std::string> warnings;
};

struct EnhancementResult {
  std::vector<double> enhanced;  // covers [hotword_start, query_end)
  EnhancementDecision decision;
  Diagnostics diag;
};

// Time-domain mean-square powers on the reference channel over the exact
// segment sample ranges. Both segments must span at least 0.1 s; a silent
// context is an error (the ratio cannot be formed).
SnrEstimate estimate_snr(const MultiChannelWave& wave, const UtteranceSegmentation& seg,
                         std::size_t ref_channel, double floor_db = -40.0);

// Speech Cleaner strictly below gamma, CAB at or above.
EnhancementDecision select_algorithm(const SnrEstimate& snr, double gamma_db);

// Runs estimate -> select -> the chosen path. Single-channel input falls
// back to Passthrough with a warning.
EnhancementResult enhance_utterance(const MultiChannelWave& wave, const UtteranceSegmentation& seg,
                                    const PipelineConfig& config);

// Selection bypassed. Oracle mode requires the isolated clean rendering.
EnhancementResult enhance_forced(const MultiChannelWave& wave, const UtteranceSegmentation& seg,
                                 const PipelineConfig& config, ForcedMode mode,
                                 const MultiChannelWave* clean_reference = nullptr);

// Diagnostics as a JSON object in text form (stable key order).
std::string diagnostics_to_json(const EnhancementResult& result, const PipelineConfig& config);

}  // namespace enhance
