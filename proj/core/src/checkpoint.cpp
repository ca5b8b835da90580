#include <bit>
#include <cstdint>
#include <fstream>

#include "json.hpp"

#include "stmg/solvers.hpp"

namespace stmg {

void write_checkpoint(const std::string& path, std::span<const double> values,
                      const CheckpointMeta& meta) {
  std::ofstream bin(path + ".bin", std::ios::binary);
  if (!bin) throw Error("checkpoint: cannot open " + path + ".bin for writing");
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    bin.write(bytes, 8);
  }
  nlohmann::json sidecar{{"level", meta.level}, {"r", meta.r},          {"k", meta.k},
                         {"N", meta.steps},     {"t", meta.t},          {"count", values.size()},
                         {"format", "f64le"}};
  std::ofstream json(path + ".json");
  if (!json) throw Error("checkpoint: cannot open " + path + ".json for writing");
  json << sidecar.dump(2) << '\n';
}

Vector read_checkpoint(const std::string& path, CheckpointMeta* meta) {
  std::ifstream json(path + ".json");
  if (!json) throw Error("checkpoint: cannot open " + path + ".json");
  const nlohmann::json sidecar = nlohmann::json::parse(json);
  const auto count = sidecar.at("count").get<std::size_t>();
  if (meta) {
    meta->level = sidecar.at("level").get<int>();
    meta->r = sidecar.at("r").get<int>();
    meta->k = sidecar.at("k").get<int>();
    meta->steps = sidecar.at("N").get<int>();
    meta->t = sidecar.at("t").get<double>();
  }
  std::ifstream bin(path + ".bin", std::ios::binary);
  if (!bin) throw Error("checkpoint: cannot open " + path + ".bin");
  Vector out(count);
  for (std::size_t i = 0; i < count; ++i) {
    unsigned char bytes[8];
    if (!bin.read(reinterpret_cast<char*>(bytes), 8)) throw Error("checkpoint: truncated " + path + ".bin");
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

}  // namespace stmg
