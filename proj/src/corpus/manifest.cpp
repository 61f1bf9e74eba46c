#include "asrser/corpus/manifest.hpp"

#include <fstream>
#include <set>

#include "asrser/common.hpp"
#include "json.hpp"

namespace asrser::corpus {

using nlohmann::json;

std::string to_string(Emotion e) {
  switch (e) {
    case Emotion::neutral: return "neutral";
    case Emotion::happy: return "happy";
    case Emotion::sad: return "sad";
    case Emotion::angry: return "angry";
  }
  return "neutral";
}

Emotion emotion_from_string(const std::string& s) {
  if (s == "neutral") return Emotion::neutral;
  if (s == "happy") return Emotion::happy;
  if (s == "sad") return Emotion::sad;
  if (s == "angry") return Emotion::angry;
  throw Error(ErrorCode::UnknownEmotion, "unknown emotion label: " + s);
}

std::vector<UtteranceRecord> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open manifest: " + path);

  std::vector<UtteranceRecord> records;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::BadManifestLine,
                  "manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    UtteranceRecord r;
    try {
      r.id = j.at("id").get<std::string>();
      r.wav = j.at("wav").get<std::string>();
      r.speaker = j.at("speaker").get<std::string>();
      r.session = j.at("session").get<std::string>();
      r.transcript = j.at("transcript").get<std::string>();
      r.duration_s = j.at("duration_s").get<double>();
      std::string emo = j.at("emotion").get<std::string>();
      try {
        r.emotion = emotion_from_string(emo);
      } catch (const Error&) {
        throw Error(ErrorCode::UnknownEmotion,
                    "manifest line " + std::to_string(line_no) +
                        ": unknown emotion \"" + emo + "\"");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::BadManifestLine,
                  "manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(r.id).second)
      throw Error(ErrorCode::DuplicateId,
                  "manifest line " + std::to_string(line_no) +
                      ": duplicate id \"" + r.id + "\"");
    records.push_back(std::move(r));
  }
  return records;
}

void save_manifest(const std::string& path,
                   const std::vector<UtteranceRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write manifest: " + path);
  for (const auto& r : records) {
    json j;
    j["id"] = r.id;
    j["wav"] = r.wav;
    j["speaker"] = r.speaker;
    j["session"] = r.session;
    j["transcript"] = r.transcript;
    j["emotion"] = to_string(r.emotion);
    j["duration_s"] = r.duration_s;
    out << j.dump() << "\n";
  }
}

}  // namespace asrser::corpus
