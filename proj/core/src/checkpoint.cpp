// Copyright 2026 The mtltag Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mtltag/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mtltag/error.hpp"

namespace mtltag {

namespace {

using nlohmann::json;
constexpr std::string_view kMagic = "mtltag-checkpoint";

json config_to_json(const NetworkConfig& c) {
  json tasks = json::array();
  for (const TaskSpec& t : c.tasks) {
    json layers = json::array();
    for (const auto& l : t.private_layers) {
      layers.push_back({{"units", l.units}, {"activation", to_string(l.activation)}});
    }
    tasks.push_back({{"name", t.name},
                     {"labels", t.labels},
                     {"termination_layer", t.termination_layer},
                     {"private_layers", layers},
                     {"head", to_string(t.head)},
                     {"dropout", t.dropout}});
  }
  return {{"cell", to_string(c.cell)},
          {"shared_layers", c.shared_layers},
          {"shortcuts", c.shortcuts},
          {"chars",
           {{"enabled", c.chars.enabled},
            {"embedding_dim", c.chars.embedding_dim},
            {"hidden_dim", c.chars.hidden_dim}}},
          {"dropout",
           {{"word", c.dropout.word},
            {"rnn_input", c.dropout.rnn_input},
            {"rnn_state", c.dropout.rnn_state},
            {"rnn_output", c.dropout.rnn_output},
            {"variational", c.dropout.variational}}},
          {"tasks", tasks},
          {"word_dim", c.word_dim},
          {"train_embeddings", c.train_embeddings}};
}

NetworkConfig config_from_json(const json& j) {
  NetworkConfig c;
  c.cell = parse_cell_kind(j.at("cell").get<std::string>());
  c.shared_layers = j.at("shared_layers").get<std::vector<std::size_t>>();
  c.shortcuts = j.at("shortcuts").get<bool>();
  const json& ch = j.at("chars");
  c.chars.enabled = ch.at("enabled").get<bool>();
  c.chars.embedding_dim = ch.at("embedding_dim").get<std::size_t>();
  c.chars.hidden_dim = ch.at("hidden_dim").get<std::size_t>();
  const json& d = j.at("dropout");
  c.dropout.word = d.at("word").get<double>();
  c.dropout.rnn_input = d.at("rnn_input").get<double>();
  c.dropout.rnn_state = d.at("rnn_state").get<double>();
  c.dropout.rnn_output = d.at("rnn_output").get<double>();
  c.dropout.variational = d.at("variational").get<bool>();
  for (const json& t : j.at("tasks")) {
    TaskSpec spec;
    spec.name = t.at("name").get<std::string>();
    spec.labels = t.at("labels").get<std::vector<std::string>>();
    spec.termination_layer = t.at("termination_layer").get<std::size_t>();
    for (const json& l : t.at("private_layers")) {
      spec.private_layers.push_back(
          {l.at("units").get<std::size_t>(), parse_activation(l.at("activation").get<std::string>())});
    }
    spec.head = parse_head_kind(t.at("head").get<std::string>());
    spec.dropout = t.at("dropout").get<double>();
    c.tasks.push_back(std::move(spec));
  }
  c.word_dim = j.at("word_dim").get<std::size_t>();
  c.train_embeddings = j.at("train_embeddings").get<bool>();
  return c;
}

json vocab_to_json(const Vocabulary& v) {
  return {{"specials", v.has_specials()}, {"entries", v.entries()}};
}

Vocabulary vocab_from_json(const json& j) {
  return Vocabulary::from_entries(j.at("entries").get<std::vector<std::string>>(),
                                  j.at("specials").get<bool>());
}

std::string read_line(std::istream& in, std::string_view source) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(std::string(source) + ": truncated checkpoint header");
  return line;
}

std::size_t read_length_line(std::istream& in, std::string_view source, std::string_view key) {
  const std::string line = read_line(in, source);
  std::istringstream fields(line);
  std::string name;
  long long n = -1;
  if (!(fields >> name >> n) || name != key || n < 0) {
    throw DataError(std::string(source) + ": expected '" + std::string(key) + " <bytes>', found '" + line + "'");
  }
  return static_cast<std::size_t>(n);
}

std::string read_bytes(std::istream& in, std::size_t n, std::string_view source, std::string_view what) {
  std::string bytes(n, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw DataError(std::string(source) + ": truncated " + std::string(what) + " (expected " +
                    std::to_string(n) + " bytes, found " + std::to_string(in.gcount()) + ")");
  }
  return bytes;
}

}  // namespace

void save_model(const Model& model, std::ostream& out) {
  const ParameterStore& params = model.parameters();
  json registry = json::array();
  std::size_t offset = 0;
  for (ParamId id = 0; id < params.size(); ++id) {
    const Tensor& t = params.value(id);
    registry.push_back({{"name", params.name(id)},
                        {"rows", t.rows()},
                        {"cols", t.cols()},
                        {"offset", offset},
                        {"trainable", params.trainable(id)}});
    offset += t.size();
  }
  const Vocabularies& v = model.vocabularies();
  json labels = json::array();
  for (const auto& l : v.labels) labels.push_back(vocab_to_json(l));
  const json manifest = {{"config", config_to_json(model.config())},
                         {"vocabularies",
                          {{"words", vocab_to_json(v.words)},
                           {"chars", vocab_to_json(v.chars)},
                           {"labels", labels}}},
                         {"tensors", registry}};
  const std::string text = manifest.dump();

  std::string payload;
  payload.reserve(offset * 8);
  for (ParamId id = 0; id < params.size(); ++id) {
    for (double x : params.value(id).values()) {
      auto bits = std::bit_cast<std::uint64_t>(x);
      for (int b = 0; b < 8; ++b) {
        payload.push_back(static_cast<char>(bits & 0xffu));
        bits >>= 8;
      }
    }
  }
  out << kMagic << ' ' << kCheckpointVersion << '\n';
  out << "manifest " << text.size() << '\n' << text << '\n';
  out << "payload " << payload.size() << '\n';
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw DataError("failed to write checkpoint");
}

void save_model(const Model& model, const std::filesystem::path& path) {
  // Write beside the target and rename so a failed save leaves no partial file.
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    save_model(model, out);
  }
  std::filesystem::rename(tmp, path);
}

Model load_model(std::istream& in, std::string_view source) {
  const std::string header = read_line(in, source);
  std::istringstream fields(header);
  std::string magic;
  int version = -1;
  fields >> magic >> version;
  if (magic != kMagic) throw DataError(std::string(source) + ": not an mtltag checkpoint (bad magic)");
  if (version != kCheckpointVersion) {
    throw DataError(std::string(source) + ": unsupported checkpoint version " + std::to_string(version) +
                    " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::size_t manifest_len = read_length_line(in, source, "manifest");
  const std::string text = read_bytes(in, manifest_len, source, "manifest");
  read_line(in, source);
  const std::size_t payload_len = read_length_line(in, source, "payload");
  const std::string payload = read_bytes(in, payload_len, source, "payload");
  if (payload_len % 8 != 0) throw DataError(std::string(source) + ": payload is not a whole number of doubles");
  const std::size_t doubles = payload_len / 8;

  try {
    const json manifest = json::parse(text);
    NetworkConfig config = config_from_json(manifest.at("config"));
    Vocabularies vocab;
    const json& v = manifest.at("vocabularies");
    vocab.words = vocab_from_json(v.at("words"));
    vocab.chars = vocab_from_json(v.at("chars"));
    for (const json& l : v.at("labels")) vocab.labels.push_back(vocab_from_json(l));

    ParameterStore params;
    std::size_t covered = 0;
    for (const json& t : manifest.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      const auto rows = t.at("rows").get<std::size_t>();
      const auto cols = t.at("cols").get<std::size_t>();
      const auto offset = t.at("offset").get<std::size_t>();
      const std::size_t n = rows * cols;
      if (offset > doubles || n > doubles - offset) {
        throw DataError(std::string(source) + ": tensor '" + name + "' lies outside the payload");
      }
      std::vector<double> data(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits = 0;
        const std::size_t base = (offset + i) * 8;
        for (int b = 7; b >= 0; --b) {
          bits = (bits << 8) | static_cast<unsigned char>(payload[base + static_cast<std::size_t>(b)]);
        }
        data[i] = std::bit_cast<double>(bits);
      }
      params.add(name, Tensor(rows, cols, std::move(data)), t.at("trainable").get<bool>());
      covered += n;
    }
    if (covered != doubles) {
      throw DataError(std::string(source) + ": registry covers " + std::to_string(covered) +
                      " values but the payload holds " + std::to_string(doubles));
    }
    return Model::from_parameters(std::move(config), std::move(vocab), std::move(params));
  } catch (const json::exception& e) {
    throw DataError(std::string(source) + ": malformed manifest: " + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string(source) + ": " + e.what());
  } catch (const DataError& e) {
    const std::string what = e.what();
    if (what.starts_with(source)) throw;
    throw DataError(std::string(source) + ": " + what);
  }
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return load_model(in, path.string());
}

}  // namespace mtltag
