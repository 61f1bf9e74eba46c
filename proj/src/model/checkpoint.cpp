#include "asrser/model/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "asrser/common.hpp"
#include "json.hpp"

namespace asrser::model {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'A', 'S', 'R', 'S', 'E', 'R', 'C', 'K'};
constexpr uint32_t kVersion = 1;

json config_to_json(const ModelConfig& cfg) {
  json j;
  j["n_mels"] = cfg.n_mels;
  j["conv_channels"] = cfg.conv_channels;
  j["enc_hidden"] = cfg.enc_hidden;
  j["embed_dim"] = cfg.embed_dim;
  j["text_hidden"] = cfg.text_hidden;
  j["ser_mlp_hidden"] = cfg.ser_mlp_hidden;
  j["arch"] = to_string(cfg.arch);
  j["freeze_frontend"] = cfg.freeze_frontend;
  return j;
}

ModelConfig config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.n_mels = j.at("n_mels").get<int>();
  cfg.conv_channels = j.at("conv_channels").get<int>();
  cfg.enc_hidden = j.at("enc_hidden").get<int>();
  cfg.embed_dim = j.at("embed_dim").get<int>();
  cfg.text_hidden = j.at("text_hidden").get<int>();
  cfg.ser_mlp_hidden = j.at("ser_mlp_hidden").get<int>();
  cfg.arch = architecture_from_string(j.at("arch").get<std::string>());
  cfg.freeze_frontend = j.at("freeze_frontend").get<bool>();
  return cfg;
}

json read_header(std::ifstream& in, const std::string& path) {
  char magic[8];
  uint32_t version = 0, json_len = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&json_len), 4);
  if (!in || std::memcmp(magic, kMagic, 8) != 0 || version != kVersion)
    throw Error(ErrorCode::UnsupportedEncoding, "not a checkpoint file: " + path);
  std::string header(json_len, '\0');
  in.read(header.data(), json_len);
  if (!in) throw Error(ErrorCode::UnsupportedEncoding, "truncated checkpoint: " + path);
  return json::parse(header);
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model,
                     const CheckpointMeta& meta) {
  json header;
  header["schema"] = 1;
  header["config"] = config_to_json(model.config());
  header["vocab"] = model.vocab().tokens();
  header["config_hash"] = meta.config_hash;
  header["test_speaker"] = meta.test_speaker;
  header["train_speakers"] = meta.train_speakers;

  json tensors = json::array();
  uint64_t offset = 0;
  for (const auto& [name, t] : model.params().items()) {
    json entry;
    entry["name"] = name;
    entry["rows"] = t.value.rows();
    entry["cols"] = t.value.cols();
    entry["offset"] = offset;
    tensors.push_back(entry);
    offset += static_cast<uint64_t>(t.value.size()) * 4;
  }
  header["tensors"] = tensors;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write checkpoint: " + path);
  std::string hs = header.dump();
  uint32_t json_len = static_cast<uint32_t>(hs.size());
  out.write(kMagic, 8);
  out.write(reinterpret_cast<const char*>(&kVersion), 4);
  out.write(reinterpret_cast<const char*>(&json_len), 4);
  out.write(hs.data(), hs.size());

  std::vector<float> buf;
  for (const auto& [name, t] : model.params().items()) {
    buf.resize(static_cast<size_t>(t.value.size()));
    size_t k = 0;
    for (Eigen::Index r = 0; r < t.value.rows(); ++r)
      for (Eigen::Index c = 0; c < t.value.cols(); ++c)
        buf[k++] = static_cast<float>(t.value(r, c));
    out.write(reinterpret_cast<const char*>(buf.data()), buf.size() * 4);
  }
  if (!out) throw Error(ErrorCode::IoError, "short checkpoint write: " + path);
}

CheckpointMeta read_checkpoint_meta(const std::string& path, ModelConfig* config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open checkpoint: " + path);
  json header = read_header(in, path);
  CheckpointMeta meta;
  meta.test_speaker = header.at("test_speaker").get<std::string>();
  meta.train_speakers =
      header.at("train_speakers").get<std::vector<std::string>>();
  meta.config_hash = header.at("config_hash").get<uint64_t>();
  if (config) *config = config_from_json(header.at("config"));
  return meta;
}

Model load_checkpoint(const std::string& path, CheckpointMeta* meta_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open checkpoint: " + path);
  json header = read_header(in, path);

  ModelConfig cfg = config_from_json(header.at("config"));
  Model model(cfg, /*init_seed=*/0);

  const std::streampos data_start = in.tellg();
  for (const auto& entry : header.at("tensors")) {
    std::string name = entry.at("name").get<std::string>();
    Eigen::Index rows = entry.at("rows").get<Eigen::Index>();
    Eigen::Index cols = entry.at("cols").get<Eigen::Index>();
    uint64_t offset = entry.at("offset").get<uint64_t>();

    nn::Tensor& t = model.params().get(name);
    if (t.value.rows() != rows || t.value.cols() != cols)
      throw Error(ErrorCode::BadConfig,
                  "checkpoint tensor shape mismatch for " + name);
    std::vector<float> buf(static_cast<size_t>(rows * cols));
    in.seekg(data_start + static_cast<std::streamoff>(offset));
    in.read(reinterpret_cast<char*>(buf.data()), buf.size() * 4);
    if (!in) throw Error(ErrorCode::UnsupportedEncoding,
                         "truncated checkpoint tensor: " + name);
    size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        t.value(r, c) = static_cast<double>(buf[k++]);
  }

  if (meta_out) {
    meta_out->test_speaker = header.at("test_speaker").get<std::string>();
    meta_out->train_speakers =
        header.at("train_speakers").get<std::vector<std::string>>();
    meta_out->config_hash = header.at("config_hash").get<uint64_t>();
  }
  return model;
}

}  // namespace asrser::model
