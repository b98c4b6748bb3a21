// End-to-end checks of the ctxenh binary: exit codes, determinism, and the
// file formats the subcommands exchange.
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "enhance/wav.h"

namespace {

namespace fs = std::filesystem;

std::string binary() { return CTXENH_BIN; }

int run(const std::string& args) {
  const std::string cmd = binary() + " " + args + " >/dev/null 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path work_dir() {
  const auto dir = fs::temp_directory_path() / "ctxenh_cli_test";
  fs::create_directories(dir);
  return dir;
}

void write_manifest(const fs::path& path, double snr_db) {
  nlohmann::json manifest = {
      {"seed", 11},
      {"sample_rate", 16000},
      {"channels", 2},
      {"scenes",
       {{{"id", "t0"},
         {"snr_db", snr_db},
         {"context_length_s", 1.0},
         {"target",
          {{"source", {{"kind", "speech_like"}, {"duration_s", 1.2}}},
           {"hotword_s", 0.5},
           {"azimuth_deg", 90.0}}},
         {"interferer", {{"source", {{"kind", "speech_shaped"}}}, {"azimuth_deg", 30.0}}}}}}};
  std::ofstream(path) << manifest.dump(2);
}

std::vector<char> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("mix is deterministic and writes the documented sidecars") {
  const auto dir = work_dir();
  const auto manifest = dir / "manifest.json";
  write_manifest(manifest, 0.0);

  REQUIRE(run("mix --manifest " + manifest.string() + " --out " + (dir / "a").string()) == 0);
  REQUIRE(run("mix --manifest " + manifest.string() + " --out " + (dir / "b").string()) == 0);

  CHECK(fs::exists(dir / "a" / "t0.wav"));
  CHECK(fs::exists(dir / "a" / "t0.clean.wav"));
  CHECK(fs::exists(dir / "a" / "t0.seg.json"));
  CHECK(slurp(dir / "a" / "t0.wav") == slurp(dir / "b" / "t0.wav"));

  const auto wave = enhance::read_wav((dir / "a" / "t0.wav").string());
  CHECK(wave.channel_count() == 2);
  CHECK(wave.sample_rate == 16000);
}

TEST_CASE("mix fails cleanly on a missing source file, leaving no outputs") {
  const auto dir = work_dir();
  const auto manifest = dir / "broken.json";
  nlohmann::json j = {
      {"scenes",
       {{{"id", "x"},
         {"snr_db", 0.0},
         {"target", {{"source", {{"kind", "file"}, {"path", "/nonexistent/target.wav"}}}, {"hotword_s", 0.5}}},
         {"interferer", {{"source", {{"kind", "white"}}}}}}}}};
  std::ofstream(manifest) << j.dump();

  const auto out = dir / "broken_out";
  CHECK(run("mix --manifest " + manifest.string() + " --out " + out.string()) == 2);
  CHECK(!fs::exists(out / "x.wav"));
}

TEST_CASE("malformed JSON exits with code 2") {
  const auto dir = work_dir();
  const auto bad = dir / "bad.json";
  std::ofstream(bad) << "{ not json";
  CHECK(run("mix --manifest " + bad.string() + " --out " + (dir / "nope").string()) == 2);
  CHECK(run("sweep --spec " + bad.string()) == 2);
}

TEST_CASE("enhance emits a mono WAV plus diagnostics and respects --mode") {
  const auto dir = work_dir();
  const auto manifest = dir / "manifest2.json";
  write_manifest(manifest, -12.0);
  REQUIRE(run("mix --manifest " + manifest.string() + " --out " + (dir / "m").string()) == 0);

  const std::string base = (dir / "m" / "t0").string();
  const std::string out = (dir / "enhanced.wav").string();
  const std::string diag_path = (dir / "diag.json").string();
  const std::string cmd = binary() + " enhance --in " + base + ".wav --seg " + base +
                          ".seg.json --mode select --out " + out + " > " + diag_path + " 2>/dev/null";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);

  const auto enhanced = enhance::read_wav(out);
  CHECK(enhanced.channel_count() == 1);

  nlohmann::json diag;
  std::ifstream(diag_path) >> diag;
  CHECK(diag.contains("decision"));
  // A scene mixed at -12 dB estimates far below the 6 dB threshold.
  CHECK(diag.at("decision").get<std::string>() == "SpeechCleaner");
  CHECK(diag.at("snr_db").get<double>() < 6.0);

  // Oracle mode requires the clean rendering.
  CHECK(run("enhance --in " + base + ".wav --seg " + base + ".seg.json --mode oracle --out " + out) == 2);
  CHECK(run("enhance --in " + base + ".wav --seg " + base + ".seg.json --mode oracle --clean-ref " +
            base + ".clean.wav --out " + out) == 0);
}

TEST_CASE("evaluate scores an enhanced file against the ground truth") {
  const auto dir = work_dir();
  const std::string base = (dir / "m" / "t0").string();
  const std::string out = (dir / "enhanced.wav").string();
  REQUIRE(fs::exists(out));  // produced by the previous case
  CHECK(run("evaluate --enhanced " + out + " --mix " + base + ".wav --clean " + base +
            ".clean.wav --seg " + base + ".seg.json") == 0);
}

TEST_CASE("sweep writes a sorted CSV and a summary") {
  const auto dir = work_dir();
  const auto spec = dir / "sweep.json";
  nlohmann::json j = {{"seed", 3},
                      {"channels", 2},
                      {"snr_db", {12.0, -12.0}},
                      {"algorithms", {"sc", "passthrough"}},
                      {"target_duration_s", 1.2},
                      {"hotword_s", 0.5},
                      {"context_lengths_s", {1.0}},
                      {"out_csv", (dir / "sweep.csv").string()}};
  std::ofstream(spec) << j.dump();

  REQUIRE(run("sweep --spec " + spec.string() + " --jobs 2") == 0);
  std::ifstream csv(dir / "sweep.csv");
  REQUIRE(csv.good());
  std::string line;
  std::getline(csv, line);
  CHECK(line == "# ctxenh report schema v1");
  std::getline(csv, line);
  CHECK(line.rfind("scene_id,", 0) == 0);

  std::vector<std::string> rows;
  while (std::getline(csv, line)) {
    if (!line.empty()) rows.push_back(line);
  }
  REQUIRE(rows.size() == 4);  // 2 SNRs x 2 algorithms
  // Sorted by SNR first: the -12 dB rows come before the 12 dB rows.
  CHECK(rows[0].rfind("grid_snr-12", 0) == 0);
  CHECK(rows[3].rfind("grid_snr12", 0) == 0);
  for (const auto& r : rows) CHECK(r.find(",ok") != std::string::npos);
}
