// The (architecture x training-condition) x scenario evaluation matrix,
// pooled-prediction scoring across folds, and report emission.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "asrser/audio/mel.hpp"
#include "asrser/corpus/folds.hpp"
#include "asrser/corpus/noise.hpp"
#include "asrser/eval/metrics.hpp"
#include "json.hpp"

namespace asrser::eval {

struct ScenarioResult {
  std::string scenario;      // clean | noise_snr15 | ...
  std::string architecture;  // baseline | joint
  std::string trained_on;    // clean | noise
  std::string task;          // asr | ser
  double value = 0.0;        // WER % or accuracy %, 1 decimal
};

struct RelImpEntry {
  std::string scenario;
  std::string trained_on;
  std::string task;
  double value = 0.0;
};

struct ConfusionEntry {
  std::string scenario;
  std::string architecture;
  std::string trained_on;
  Confusion matrix{};
};

struct FoldMetric {
  std::string scenario;
  std::string architecture;
  std::string trained_on;
  std::string task;
  std::string fold;  // test speaker
  double value = 0.0;
};

struct EvalReport {
  int schema = 1;
  uint64_t config_hash = 0;
  std::vector<ScenarioResult> cells;      // 7 x 2 x 2 x 2 = 56
  std::vector<RelImpEntry> rel_imp;       // 7 x 2 x 2 = 28
  std::vector<ConfusionEntry> confusion;  // one per SER cell
  std::vector<FoldMetric> per_fold;       // macro diagnostics, not headline
  std::vector<ScenarioResult> uar;        // SER unweighted average recall
};

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

// Checkpoints keyed by (architecture, trained_on, test_speaker).
class CheckpointSet {
 public:
  static std::string key(const std::string& arch, const std::string& trained_on,
                         const std::string& test_speaker) {
    return arch + "|" + trained_on + "|" + test_speaker;
  }
  void add(const std::string& arch, const std::string& trained_on,
           const std::string& test_speaker, const std::string& path) {
    paths_[key(arch, trained_on, test_speaker)] = path;
  }
  const std::string& get(const std::string& arch, const std::string& trained_on,
                         const std::string& test_speaker) const;

 private:
  std::map<std::string, std::string> paths_;
};

// Decodes and classifies each fold's held-out utterances under every
// scenario, pools predictions across folds, fills all 56 cells and the
// derived relative-improvement columns. Hard error on a checkpoint whose
// training speakers include the fold's test speaker.
EvalReport evaluate_scenarios(const CheckpointSet& checkpoints,
                              const std::vector<corpus::ScenarioSet>& scenarios,
                              const corpus::FoldPlan& plan,
                              const audio::MelConfig& mel);

// Writes report.json, report.md and plot_{asr,ser}.svg under out_dir.
// Errors on an incomplete report, naming the missing cell.
void emit_report(const EvalReport& report, const std::string& out_dir);

}  // namespace asrser::eval
