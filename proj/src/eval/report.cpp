#include "asrser/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "asrser/audio/wav.hpp"
#include "asrser/common.hpp"
#include "asrser/eval/wer.hpp"
#include "asrser/model/checkpoint.hpp"

namespace asrser::eval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double round1(double x) { return std::round(x * 10.0) / 10.0; }

std::string fmt1(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", x);
  return buf;
}

std::string pretty_scenario(const std::string& s) {
  if (s == "clean") return "Clean";
  auto us = s.rfind("_snr");
  std::string cat = s.substr(0, us);
  cat[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(cat[0])));
  return "SNR " + s.substr(us + 4) + " " + cat;
}

struct PooledAsr {
  std::vector<std::pair<std::string, std::string>> pairs;  // (ref, hyp)
};
struct PooledSer {
  std::vector<corpus::Emotion> labels, preds;
};

}  // namespace

const std::string& CheckpointSet::get(const std::string& arch,
                                      const std::string& trained_on,
                                      const std::string& test_speaker) const {
  auto it = paths_.find(key(arch, trained_on, test_speaker));
  if (it == paths_.end())
    throw Error(ErrorCode::BadConfig,
                "missing checkpoint for " + key(arch, trained_on, test_speaker));
  return it->second;
}

EvalReport evaluate_scenarios(const CheckpointSet& checkpoints,
                              const std::vector<corpus::ScenarioSet>& scenarios,
                              const corpus::FoldPlan& plan,
                              const audio::MelConfig& mel) {
  // pooled predictions keyed scenario|arch|trained_on
  std::map<std::string, PooledAsr> asr_pool;
  std::map<std::string, PooledSer> ser_pool;
  EvalReport report;

  for (const auto& fold : plan.folds) {
    std::set<std::string> test_ids(fold.test_ids.begin(), fold.test_ids.end());

    for (const std::string cond : {"clean", "noise"}) {
      auto load_checked = [&](const std::string& arch) {
        model::CheckpointMeta meta;
        model::Model m = model::load_checkpoint(
            checkpoints.get(arch, cond, fold.test_speaker), &meta);
        if (meta.test_speaker != fold.test_speaker ||
            std::find(meta.train_speakers.begin(), meta.train_speakers.end(),
                      fold.test_speaker) != meta.train_speakers.end())
          throw Error(ErrorCode::LeakageDetected,
                      "checkpoint for fold " + fold.test_speaker + " (" + arch +
                          ", " + cond + ") saw the test speaker in training");
        return m;
      };
      model::Model asr_model = load_checked("asr_baseline");
      model::Model ser_model = load_checked("ser_baseline");
      model::Model joint_model = load_checked("joint");

      for (const auto& scenario : scenarios) {
        PooledAsr fold_asr_base, fold_asr_joint;
        PooledSer fold_ser_base, fold_ser_joint;

        for (const auto& rec : scenario.records) {
          if (!test_ids.count(rec.id)) continue;
          audio::FeatureMatrix feats = audio::log_mel(audio::load_wav(rec.wav), mel);

          std::string hyp_base =
              asr_model.greedy_decode(asr_model.forward_asr_baseline(feats));
          fold_asr_base.pairs.emplace_back(rec.transcript, hyp_base);

          Eigen::RowVectorXd ser_logits = ser_model.forward_ser_baseline(feats);
          Eigen::Index arg = 0;
          ser_logits.maxCoeff(&arg);
          fold_ser_base.labels.push_back(rec.emotion);
          fold_ser_base.preds.push_back(static_cast<corpus::Emotion>(arg));

          nn::Tape tape;
          auto g = joint_model.build_joint(tape, feats,
                                           model::LinguisticSource::decoded,
                                           std::nullopt);
          fold_asr_joint.pairs.emplace_back(
              rec.transcript, joint_model.greedy_decode(g.lattice->value));
          Eigen::Index jarg = 0;
          g.emotion_logits->value.row(0).maxCoeff(&jarg);
          fold_ser_joint.labels.push_back(rec.emotion);
          fold_ser_joint.preds.push_back(static_cast<corpus::Emotion>(jarg));
        }

        auto pool_key = [&](const std::string& arch) {
          return scenario.name + "|" + arch + "|" + cond;
        };
        auto& ab = asr_pool[pool_key("baseline")];
        ab.pairs.insert(ab.pairs.end(), fold_asr_base.pairs.begin(),
                        fold_asr_base.pairs.end());
        auto& aj = asr_pool[pool_key("joint")];
        aj.pairs.insert(aj.pairs.end(), fold_asr_joint.pairs.begin(),
                        fold_asr_joint.pairs.end());
        auto append_ser = [](PooledSer& dst, const PooledSer& src) {
          dst.labels.insert(dst.labels.end(), src.labels.begin(), src.labels.end());
          dst.preds.insert(dst.preds.end(), src.preds.begin(), src.preds.end());
        };
        append_ser(ser_pool[pool_key("baseline")], fold_ser_base);
        append_ser(ser_pool[pool_key("joint")], fold_ser_joint);

        // per-fold macro diagnostics
        if (!fold_asr_base.pairs.empty()) {
          report.per_fold.push_back({scenario.name, "baseline", cond, "asr",
                                     fold.test_speaker,
                                     corpus_wer(fold_asr_base.pairs)});
          report.per_fold.push_back({scenario.name, "joint", cond, "asr",
                                     fold.test_speaker,
                                     corpus_wer(fold_asr_joint.pairs)});
          report.per_fold.push_back(
              {scenario.name, "baseline", cond, "ser", fold.test_speaker,
               ser_accuracy(fold_ser_base.labels, fold_ser_base.preds)});
          report.per_fold.push_back(
              {scenario.name, "joint", cond, "ser", fold.test_speaker,
               ser_accuracy(fold_ser_joint.labels, fold_ser_joint.preds)});
        }
      }
    }
  }

  // pooled cells + derived columns
  for (const auto& scenario_name : corpus::scenario_names()) {
    for (const std::string cond : {"clean", "noise"}) {
      double wer_base = 0, wer_joint = 0, acc_base = 0, acc_joint = 0;
      for (const std::string arch : {"baseline", "joint"}) {
        const std::string k = scenario_name + "|" + arch + "|" + cond;
        double wer = round1(corpus_wer(asr_pool.at(k).pairs));
        const auto& sp = ser_pool.at(k);
        double acc = round1(ser_accuracy(sp.labels, sp.preds));
        report.cells.push_back({scenario_name, arch, cond, "asr", wer});
        report.cells.push_back({scenario_name, arch, cond, "ser", acc});
        report.confusion.push_back(
            {scenario_name, arch, cond, confusion(sp.labels, sp.preds)});
        report.uar.push_back({scenario_name, arch, cond, "ser",
                              round1(unweighted_average_recall(sp.labels, sp.preds))});
        (arch == std::string("baseline") ? wer_base : wer_joint) = wer;
        (arch == std::string("baseline") ? acc_base : acc_joint) = acc;
      }
      report.rel_imp.push_back(
          {scenario_name, cond, "asr",
           round1(relative_improvement(wer_base, wer_joint, Task::asr))});
      report.rel_imp.push_back(
          {scenario_name, cond, "ser",
           round1(relative_improvement(acc_base, acc_joint, Task::ser))});
    }
  }
  return report;
}

json report_to_json(const EvalReport& report) {
  json j;
  j["schema"] = report.schema;
  j["config_hash"] = report.config_hash;
  j["cells"] = json::array();
  for (const auto& c : report.cells)
    j["cells"].push_back({{"scenario", c.scenario},
                          {"architecture", c.architecture},
                          {"trained_on", c.trained_on},
                          {"task", c.task},
                          {"value", c.value}});
  j["rel_imp"] = json::array();
  for (const auto& r : report.rel_imp)
    j["rel_imp"].push_back({{"scenario", r.scenario},
                            {"trained_on", r.trained_on},
                            {"task", r.task},
                            {"value", r.value}});
  j["confusion"] = json::array();
  for (const auto& c : report.confusion) {
    json rows = json::array();
    for (const auto& row : c.matrix) rows.push_back(row);
    j["confusion"].push_back({{"scenario", c.scenario},
                              {"architecture", c.architecture},
                              {"trained_on", c.trained_on},
                              {"matrix", rows}});
  }
  j["per_fold"] = json::array();
  for (const auto& f : report.per_fold)
    j["per_fold"].push_back({{"scenario", f.scenario},
                             {"architecture", f.architecture},
                             {"trained_on", f.trained_on},
                             {"task", f.task},
                             {"fold", f.fold},
                             {"value", f.value}});
  j["uar"] = json::array();
  for (const auto& c : report.uar)
    j["uar"].push_back({{"scenario", c.scenario},
                        {"architecture", c.architecture},
                        {"trained_on", c.trained_on},
                        {"task", c.task},
                        {"value", c.value}});
  return j;
}

EvalReport report_from_json(const json& j) {
  EvalReport report;
  report.schema = j.at("schema").get<int>();
  report.config_hash = j.at("config_hash").get<uint64_t>();
  for (const auto& c : j.at("cells"))
    report.cells.push_back({c.at("scenario"), c.at("architecture"),
                            c.at("trained_on"), c.at("task"), c.at("value")});
  for (const auto& r : j.at("rel_imp"))
    report.rel_imp.push_back(
        {r.at("scenario"), r.at("trained_on"), r.at("task"), r.at("value")});
  for (const auto& c : j.at("confusion")) {
    ConfusionEntry e;
    e.scenario = c.at("scenario");
    e.architecture = c.at("architecture");
    e.trained_on = c.at("trained_on");
    auto rows = c.at("matrix");
    for (int r = 0; r < 4; ++r)
      for (int p = 0; p < 4; ++p) e.matrix[r][p] = rows[r][p].get<int>();
    report.confusion.push_back(std::move(e));
  }
  for (const auto& f : j.at("per_fold"))
    report.per_fold.push_back({f.at("scenario"), f.at("architecture"),
                               f.at("trained_on"), f.at("task"), f.at("fold"),
                               f.at("value")});
  for (const auto& c : j.at("uar"))
    report.uar.push_back({c.at("scenario"), c.at("architecture"),
                          c.at("trained_on"), c.at("task"), c.at("value")});
  return report;
}

namespace {

// Cell lookup with a hard error naming any missing cell.
double cell_value(const EvalReport& report, const std::string& scenario,
                  const std::string& arch, const std::string& cond,
                  const std::string& task) {
  for (const auto& c : report.cells)
    if (c.scenario == scenario && c.architecture == arch &&
        c.trained_on == cond && c.task == task)
      return c.value;
  throw Error(ErrorCode::IncompleteReport,
              "report missing cell (" + scenario + ", " + arch + ", " + cond +
                  ", " + task + ")");
}

double rel_imp_value(const EvalReport& report, const std::string& scenario,
                     const std::string& cond, const std::string& task) {
  for (const auto& r : report.rel_imp)
    if (r.scenario == scenario && r.trained_on == cond && r.task == task)
      return r.value;
  throw Error(ErrorCode::IncompleteReport,
              "report missing rel_imp (" + scenario + ", " + cond + ", " + task +
                  ")");
}

std::string markdown_table(const EvalReport& report, const std::string& task,
                           const std::string& title) {
  std::string md;
  md += "## " + title + "\n\n";
  md += "| Test Dataset | Baseline | Joint | Rel Imp | Baseline | Joint | Rel Imp |\n";
  md += "|---|---|---|---|---|---|---|\n";
  for (const auto& scenario : corpus::scenario_names()) {
    md += "| " + pretty_scenario(scenario);
    for (const std::string cond : {"clean", "noise"}) {
      md += " | " + fmt1(cell_value(report, scenario, "baseline", cond, task));
      md += " | " + fmt1(cell_value(report, scenario, "joint", cond, task));
      md += " | " + fmt1(rel_imp_value(report, scenario, cond, task));
    }
    md += " |\n";
  }
  md += "\n";
  return md;
}

// Minimal grouped-bar SVG, fully deterministic output.
std::string svg_bar_chart(const std::string& title, const EvalReport& report,
                          const std::string& task) {
  const std::vector<std::pair<std::string, std::string>> series = {
      {"baseline", "clean"}, {"joint", "clean"},
      {"baseline", "noise"}, {"joint", "noise"}};
  const std::vector<std::string> colors = {"#888888", "#1f77b4", "#bbbbbb",
                                           "#ff7f0e"};
  double max_v = 1.0;
  for (const auto& scenario : corpus::scenario_names())
    for (const auto& [arch, cond] : series)
      max_v = std::max(max_v, cell_value(report, scenario, arch, cond, task));

  const int width = 900, height = 360, left = 60, bottom = 60, top = 40;
  const double plot_w = width - left - 20, plot_h = height - top - bottom;
  const double group_w = plot_w / 7.0;
  const double bar_w = group_w / 5.0;

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                    std::to_string(width) + "\" height=\"" +
                    std::to_string(height) + "\">\n";
  svg += "<text x=\"" + std::to_string(width / 2) +
         "\" y=\"20\" text-anchor=\"middle\" font-size=\"16\">" + title +
         "</text>\n";
  svg += "<line x1=\"" + std::to_string(left) + "\" y1=\"" +
         std::to_string(top + static_cast<int>(plot_h)) + "\" x2=\"" +
         std::to_string(width - 20) + "\" y2=\"" +
         std::to_string(top + static_cast<int>(plot_h)) +
         "\" stroke=\"black\"/>\n";

  int gi = 0;
  for (const auto& scenario : corpus::scenario_names()) {
    for (size_t si = 0; si < series.size(); ++si) {
      double v = cell_value(report, scenario, series[si].first,
                            series[si].second, task);
      double h = plot_h * v / max_v;
      double x = left + gi * group_w + (static_cast<double>(si) + 0.5) * bar_w;
      svg += "<rect x=\"" + fmt1(x) + "\" y=\"" + fmt1(top + plot_h - h) +
             "\" width=\"" + fmt1(bar_w * 0.9) + "\" height=\"" + fmt1(h) +
             "\" fill=\"" + colors[si] + "\"/>\n";
    }
    svg += "<text x=\"" + fmt1(left + (gi + 0.5) * group_w) + "\" y=\"" +
           std::to_string(top + static_cast<int>(plot_h) + 16) +
           "\" text-anchor=\"middle\" font-size=\"10\">" +
           pretty_scenario(scenario) + "</text>\n";
    ++gi;
  }
  for (size_t si = 0; si < series.size(); ++si) {
    int y = top + static_cast<int>(plot_h) + 34 + static_cast<int>(si / 2) * 14;
    int x = left + static_cast<int>(si % 2) * 260;
    svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y - 9) +
           "\" width=\"10\" height=\"10\" fill=\"" + colors[si] + "\"/>\n";
    svg += "<text x=\"" + std::to_string(x + 14) + "\" y=\"" + std::to_string(y) +
           "\" font-size=\"11\">" + series[si].first + ", trained on " +
           series[si].second + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace

void emit_report(const EvalReport& report, const std::string& out_dir) {
  // completeness check before anything is written
  for (const auto& scenario : corpus::scenario_names())
    for (const std::string arch : {"baseline", "joint"})
      for (const std::string cond : {"clean", "noise"})
        for (const std::string task : {"asr", "ser"})
          cell_value(report, scenario, arch, cond, task);

  fs::create_directories(out_dir);
  {
    std::ofstream out((fs::path(out_dir) / "report.json").string());
    out << report_to_json(report).dump(2) << "\n";
  }
  {
    std::string md = "# Evaluation Report\n\n";
    md += markdown_table(report, "asr", "ASR Performance: Word Error Rate (%)");
    md += markdown_table(report, "ser", "SER Performance: Accuracy (%)");
    md += "Columns: Trained on Clean (Baseline, Joint, Rel Imp), then Trained "
          "on Noise (Baseline, Joint, Rel Imp).\n\n";
    md += "Note: Rel Imp for ASR is the relative WER reduction in percent; "
          "for SER it is the absolute accuracy difference in percentage "
          "points. Positive values favor the joint model for both tasks.\n";
    std::ofstream out((fs::path(out_dir) / "report.md").string());
    out << md;
  }
  {
    std::ofstream out((fs::path(out_dir) / "plot_asr.svg").string());
    out << svg_bar_chart("ASR word error rate by scenario", report, "asr");
  }
  {
    std::ofstream out((fs::path(out_dir) / "plot_ser.svg").string());
    out << svg_bar_chart("SER accuracy by scenario", report, "ser");
  }
}

}  // namespace asrser::eval
