#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "degenbranch/config_io.hpp"
#include "degenbranch/harness.hpp"

namespace degenbranch {

enum class SampleFormat { Jsonl, Csv };

// Raw sample records: {n, t, replicate, value, L, centering_mode, accuracy_flag}.
std::string sample_jsonl(const FluctuationSample& s);
std::string sample_csv_header();
std::string sample_csv(const FluctuationSample& s);

// Summary document mirroring SummaryReport. Wall-clock data is kept out of
// it (see the manifest) so equal inputs give byte-identical summaries.
Json summary_to_json(const SummaryReport& report);

// Per-n table: n, t, L, variance, ci_lo, ci_hi, unnormalized variance.
std::string variance_table_csv(const SummaryReport& report);

// Output directory of one run:
//   manifest.json   config echo, version, seeds, timestamps, digests
//   samples.jsonl   (or samples.csv) raw samples, appended scale by scale
//   summary.json
//   variances.csv
// The manifest is written with "complete": false when the run starts and
// rewritten at the end, so an interrupted run is recognizable.
class RunWriter {
 public:
  RunWriter(std::filesystem::path dir, SampleFormat format, const ExperimentConfig& config,
            std::size_t workers);

  void write_samples(const std::vector<FluctuationSample>& samples);
  void finish(const SummaryReport& report);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path samples_path() const;

 private:
  void write_manifest(bool complete, const Json& digests);

  std::filesystem::path dir_;
  SampleFormat format_;
  ExperimentConfig config_;
  std::size_t workers_;
  std::string started_;
  std::chrono::steady_clock::time_point t0_;
  std::ofstream samples_;
};

std::string tool_version();

}  // namespace degenbranch
