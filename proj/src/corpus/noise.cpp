#include "asrser/corpus/noise.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "asrser/common.hpp"
#include "json.hpp"

namespace asrser::corpus {

namespace fs = std::filesystem;
using nlohmann::json;
using audio::MixSpec;
using audio::NoiseCategory;

NoisePool::NoisePool(const std::string& pool_dir) : root_(pool_dir) {
  for (NoiseCategory cat :
       {NoiseCategory::noise, NoiseCategory::music, NoiseCategory::speech}) {
    std::vector<std::string> ids;
    fs::path dir = fs::path(root_) / audio::to_string(cat);
    if (fs::is_directory(dir)) {
      for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".wav")
          ids.push_back(audio::to_string(cat) + "/" +
                        entry.path().filename().string());
      }
    }
    std::sort(ids.begin(), ids.end());
    if (ids.empty())
      throw Error(ErrorCode::EmptyNoiseCategory,
                  "noise pool has no clips in category " +
                      audio::to_string(cat) + " under " + pool_dir);
    ids_[cat] = std::move(ids);
  }
}

const std::vector<std::string>& NoisePool::clip_ids(NoiseCategory cat) const {
  return ids_.at(cat);
}

const audio::AudioBuffer& NoisePool::clip(const std::string& clip_id) const {
  auto it = cache_.find(clip_id);
  if (it == cache_.end()) {
    it = cache_.emplace(clip_id, audio::load_wav((fs::path(root_) / clip_id).string()))
             .first;
  }
  return it->second;
}

MixSpec assign_training_mix(const std::string& utterance_id,
                            const NoisePool& pool, uint64_t seed) {
  Rng rng(derive_seed(seed, utterance_id));
  MixSpec spec;
  spec.seed = static_cast<int64_t>(derive_seed(seed, utterance_id));
  spec.noise_category = static_cast<NoiseCategory>(rng.uniform_index(3));
  spec.snr_db = static_cast<double>(rng.uniform_int(5, 35));
  const auto& ids = pool.clip_ids(spec.noise_category);
  spec.noise_clip_id = ids[rng.uniform_index(ids.size())];
  spec.noise_offset_samples =
      static_cast<size_t>(rng.uniform_index(pool.clip(spec.noise_clip_id).size()));
  return spec;
}

namespace {

json spec_to_json(const MixProvenance& p) {
  json j;
  j["id"] = p.id;
  j["clean_wav"] = p.clean_wav;
  j["snr_db"] = p.spec.snr_db;
  j["noise_category"] = audio::to_string(p.spec.noise_category);
  j["noise_clip_id"] = p.spec.noise_clip_id;
  j["noise_offset_samples"] = p.spec.noise_offset_samples;
  j["seed"] = p.spec.seed;
  return j;
}

MixProvenance spec_from_json(const json& j) {
  MixProvenance p;
  p.id = j.at("id").get<std::string>();
  p.clean_wav = j.at("clean_wav").get<std::string>();
  p.spec.snr_db = j.at("snr_db").get<double>();
  p.spec.noise_category =
      audio::noise_category_from_string(j.at("noise_category").get<std::string>());
  p.spec.noise_clip_id = j.at("noise_clip_id").get<std::string>();
  p.spec.noise_offset_samples = j.at("noise_offset_samples").get<size_t>();
  p.spec.seed = j.at("seed").get<int64_t>();
  return p;
}

// Mixes one utterance and writes the noisy wav; returns the updated record.
UtteranceRecord mix_one(const UtteranceRecord& r, const NoisePool& pool,
                        const MixSpec& spec, const fs::path& out_dir) {
  audio::AudioBuffer clean = audio::load_wav(r.wav);
  audio::AudioBuffer noisy = audio::mix_at_snr(clean, pool.clip(spec.noise_clip_id), spec);
  UtteranceRecord out = r;
  out.wav = (out_dir / (r.id + ".wav")).string();
  audio::save_wav(out.wav, noisy);
  return out;
}

}  // namespace

void save_provenance(const std::string& path,
                     const std::vector<MixProvenance>& provenance) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write provenance: " + path);
  for (const auto& p : provenance) out << spec_to_json(p).dump() << "\n";
}

std::vector<MixProvenance> load_provenance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open provenance: " + path);
  std::vector<MixProvenance> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(spec_from_json(json::parse(line)));
  }
  return out;
}

CorruptResult corrupt_training_set(const std::vector<UtteranceRecord>& records,
                                   const NoisePool& pool, uint64_t seed,
                                   const std::string& out_dir) {
  fs::create_directories(out_dir);
  CorruptResult result;
  for (const auto& r : records) {
    MixSpec spec = assign_training_mix(r.id, pool, seed);
    result.records.push_back(mix_one(r, pool, spec, out_dir));
    result.provenance.push_back(MixProvenance{r.id, r.wav, spec});
  }
  save_manifest((fs::path(out_dir) / "manifest.jsonl").string(), result.records);
  save_provenance((fs::path(out_dir) / "provenance.jsonl").string(),
                  result.provenance);
  return result;
}

std::vector<ScenarioSet> build_test_scenarios(
    const std::vector<UtteranceRecord>& records, const NoisePool& pool,
    uint64_t seed, const std::string& out_dir) {
  std::vector<ScenarioSet> scenarios;
  for (const std::string& name : scenario_names()) {
    ScenarioSet set;
    set.name = name;
    fs::path dir = fs::path(out_dir) / name;
    fs::create_directories(dir);

    if (name == "clean") {
      for (const auto& r : records) {
        UtteranceRecord out = r;
        out.wav = (dir / (r.id + ".wav")).string();
        fs::copy_file(r.wav, out.wav, fs::copy_options::overwrite_existing);
        set.records.push_back(std::move(out));
      }
    } else {
      auto us = name.rfind("_snr");
      NoiseCategory cat = audio::noise_category_from_string(name.substr(0, us));
      double snr = std::stod(name.substr(us + 4));
      for (const auto& r : records) {
        Rng rng(derive_seed(seed, name + "/" + r.id));
        MixSpec spec;
        spec.seed = static_cast<int64_t>(derive_seed(seed, name + "/" + r.id));
        spec.noise_category = cat;
        spec.snr_db = snr;
        const auto& ids = pool.clip_ids(cat);
        spec.noise_clip_id = ids[rng.uniform_index(ids.size())];
        spec.noise_offset_samples = static_cast<size_t>(
            rng.uniform_index(pool.clip(spec.noise_clip_id).size()));
        set.records.push_back(mix_one(r, pool, spec, dir));
        set.provenance.push_back(MixProvenance{r.id, r.wav, spec});
      }
    }
    save_manifest((dir / "manifest.jsonl").string(), set.records);
    save_provenance((dir / "provenance.jsonl").string(), set.provenance);
    scenarios.push_back(std::move(set));
  }
  return scenarios;
}

}  // namespace asrser::corpus
