#include "meshadv/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace meshadv {

namespace {

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) throw ParseError("truncated tensor length");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

std::string TensorFile::value(const std::string& key) const {
  for (const auto& [k, v] : manifest) {
    if (k == key) return v;
  }
  throw ConfigError("checkpoint manifest missing key: " + key);
}

void write_tensor_file(const TensorFile& file, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& [k, v] : file.manifest) out << k << ' ' << v << '\n';
  out << '\n';
  for (const auto& [name, data] : file.tensors) {
    out << name << '\n';
    write_u64(out, data.size() * sizeof(double));
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

TensorFile read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  TensorFile file;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) break;
    const std::size_t sp = line.find(' ');
    if (sp == std::string::npos) throw ParseError("malformed manifest line: " + line);
    file.manifest.emplace_back(line.substr(0, sp), line.substr(sp + 1));
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::uint64_t bytes = read_u64(in);
    if (bytes % sizeof(double) != 0) throw ParseError("tensor byte length not a multiple of 8");
    std::vector<double> data(bytes / sizeof(double));
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw ParseError("truncated tensor data for " + line);
    file.tensors.emplace_back(line, std::move(data));
  }
  return file;
}

void save_imitator(const ImitatorParams& params, const CheckpointMeta& meta,
                   const std::filesystem::path& path) {
  TensorFile file;
  const NetSpec& s = params.spec;
  file.manifest = {
      {"version", "1"},
      {"kind", "imitator"},
      {"input_dim", std::to_string(s.input_dim)},
      {"lift1", std::to_string(s.lift1)},
      {"hidden", std::to_string(s.hidden)},
      {"rnn_layers", std::to_string(s.rnn_layers)},
      {"classes", std::to_string(s.classes)},
      {"delta_features", s.delta_features ? "1" : "0"},
      {"loss", meta.loss},
      {"seed", std::to_string(meta.seed)},
  };
  visit_tensors(const_cast<ImitatorParams&>(params), [&](const std::string& name, auto& t) {
    file.tensors.emplace_back(name, std::vector<double>(t.data(), t.data() + t.size()));
  });
  write_tensor_file(file, path);
}

std::pair<ImitatorParams, CheckpointMeta> load_imitator(const std::filesystem::path& path) {
  const TensorFile file = read_tensor_file(path);
  NetSpec spec;
  spec.input_dim = std::stoi(file.value("input_dim"));
  spec.lift1 = std::stoi(file.value("lift1"));
  spec.hidden = std::stoi(file.value("hidden"));
  spec.rnn_layers = std::stoi(file.value("rnn_layers"));
  spec.classes = std::stoi(file.value("classes"));
  spec.delta_features = file.value("delta_features") == "1";
  CheckpointMeta meta;
  meta.loss = file.value("loss");
  meta.seed = std::stoull(file.value("seed"));

  ImitatorParams params = init_params(spec, 0);
  std::size_t cursor = 0;
  visit_tensors(params, [&](const std::string& name, auto& t) {
    if (cursor >= file.tensors.size() || file.tensors[cursor].first != name) {
      throw ParseError("checkpoint tensor order mismatch at " + name);
    }
    const std::vector<double>& data = file.tensors[cursor].second;
    if (static_cast<Eigen::Index>(data.size()) != t.size()) {
      throw ParseError("checkpoint tensor size mismatch for " + name);
    }
    std::memcpy(t.data(), data.data(), data.size() * sizeof(double));
    ++cursor;
  });
  if (cursor != file.tensors.size()) throw ParseError("unexpected extra tensors in checkpoint");
  return {std::move(params), meta};
}

}  // namespace meshadv
