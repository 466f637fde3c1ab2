#include "safevsc/neural/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace safevsc::neural {

namespace {

constexpr char kMagic[8] = {'S', 'V', 'Q', 'N', 'E', 'T', '0', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

std::uint64_t get_le(const std::string& in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int k = 0; k < bytes; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + k])) << (8 * k);
  return v;
}

std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string encode_checkpoint(const QNetworkParams& p, const nlohmann::json& meta) {
  nlohmann::json header = {
      {"format", "safevsc-qnet"},
      {"version", kCheckpointVersion},
      {"layer_sizes", p.layer_sizes()},
      {"parameter_count", p.parameter_count()},
      {"meta", meta},
  };
  const std::string header_text = header.dump();
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(header_text.size()));
  out += header_text;
  const std::size_t payload_start = out.size();
  for (const auto& l : p.layers) {
    for (double x : l.w) put_u64(out, std::bit_cast<std::uint64_t>(x));
    for (double x : l.b) put_u64(out, std::bit_cast<std::uint64_t>(x));
  }
  put_u64(out, fnv1a(out.data() + payload_start, out.size() - payload_start));
  return out;
}

LoadedCheckpoint decode_checkpoint(const std::string& in) {
  if (in.size() < 16 || std::memcmp(in.data(), kMagic, sizeof kMagic) != 0)
    throw CheckpointError("checkpoint version mismatch: bad magic");
  const auto version = static_cast<std::uint32_t>(get_le(in, 8, 4));
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint version mismatch: file version " + std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));
  const auto header_len = static_cast<std::size_t>(get_le(in, 12, 4));
  if (16 + header_len > in.size()) throw CheckpointError("checkpoint version mismatch: truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(in.begin() + 16, in.begin() + static_cast<std::ptrdiff_t>(16 + header_len));
  } catch (const nlohmann::json::exception&) {
    throw CheckpointError("checkpoint version mismatch: unreadable header");
  }
  if (!header.is_object() || header.value("format", "") != "safevsc-qnet" ||
      header.value("version", 0U) != kCheckpointVersion || !header.contains("layer_sizes"))
    throw CheckpointError("checkpoint version mismatch: unexpected header contents");

  std::vector<std::size_t> sizes;
  try {
    sizes = header.at("layer_sizes").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception&) {
    throw CheckpointError("checkpoint version mismatch: bad layer sizes");
  }
  LoadedCheckpoint ck;
  try {
    ck.params = init_network(sizes, 0);
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint version mismatch: ") + e.what());
  }
  const std::size_t n = ck.params.parameter_count();
  const std::size_t payload_start = 16 + header_len;
  if (in.size() != payload_start + 8 * n + 8) throw CheckpointError("corrupt checkpoint: payload size mismatch");
  if (fnv1a(in.data() + payload_start, 8 * n) != get_le(in, payload_start + 8 * n, 8))
    throw CheckpointError("corrupt checkpoint: payload hash mismatch");

  std::size_t pos = payload_start;
  auto read = [&](std::vector<double>& v) {
    for (double& x : v) {
      x = std::bit_cast<double>(get_le(in, pos, 8));
      pos += 8;
    }
  };
  for (auto& l : ck.params.layers) {
    read(l.w);
    read(l.b);
  }
  ck.meta = header.value("meta", nlohmann::json::object());
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const QNetworkParams& p, const nlohmann::json& meta) {
  const std::string bytes = encode_checkpoint(p, meta);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace safevsc::neural
