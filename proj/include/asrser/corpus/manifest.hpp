// JSONL manifest ingestion and the utterance record type.
#pragma once

#include <string>
#include <vector>

namespace asrser::corpus {

enum class Emotion { neutral = 0, happy = 1, sad = 2, angry = 3 };
constexpr int kNumEmotions = 4;

std::string to_string(Emotion e);
Emotion emotion_from_string(const std::string& s);

struct UtteranceRecord {
  std::string id;
  std::string wav;
  std::string speaker;
  std::string session;
  std::string transcript;
  Emotion emotion = Emotion::neutral;
  double duration_s = 0.0;
};

// One JSON object per line; duplicate ids and unknown emotions rejected.
std::vector<UtteranceRecord> load_manifest(const std::string& path);

void save_manifest(const std::string& path,
                   const std::vector<UtteranceRecord>& records);

}  // namespace asrser::corpus
