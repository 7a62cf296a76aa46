// Model file layout:
//   8 bytes   magic "MHRNNMDL"
//   4 bytes   header length n, little-endian uint32
//   n bytes   JSON header {version, k, M, hidden_size, hyper, alphabet_hash, head_ids}
//   weights   input, recurrent, hidden_bias, output, output_bias
//   adagrad   the same five blocks again
// Blocks are row-major little-endian float32 with sizes implied by the header.

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mhrnn/error.hpp"
#include "mhrnn/model.hpp"

namespace mhrnn {
namespace {

constexpr char kMagic[8] = {'M', 'H', 'R', 'N', 'N', 'M', 'D', 'L'};

std::uint32_t to_little(std::uint32_t x) {
  if constexpr (std::endian::native == std::endian::big) {
    x = ((x & 0xffu) << 24) | ((x & 0xff00u) << 8) | ((x >> 8) & 0xff00u) | (x >> 24);
  }
  return x;
}

void write_u32(std::ostream& out, std::uint32_t x) {
  x = to_little(x);
  out.write(reinterpret_cast<const char*>(&x), sizeof x);
}

void write_block(std::ostream& out, const std::vector<float>& v) {
  for (float f : v) write_u32(out, std::bit_cast<std::uint32_t>(f));
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  void take(void* dst, std::size_t n) {
    if (n > bytes_.size() - pos_) throw Error(ErrorCode::CorruptFile, "model file is truncated");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  std::uint32_t u32() {
    std::uint32_t x;
    take(&x, sizeof x);
    return to_little(x);
  }

  void block(std::vector<float>& v) {
    for (auto& f : v) f = std::bit_cast<float>(u32());
  }

  std::string string(std::size_t n) {
    std::string s(n, '\0');
    take(s.data(), n);
    return s;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

template <typename Fn>
void for_each_block(ParameterSet<float>& p, Fn&& fn) {
  fn(p.input);
  fn(p.recurrent);
  fn(p.hidden_bias);
  fn(p.output);
  fn(p.output_bias);
}

}  // namespace

void save_model(const Model& model, const std::filesystem::path& path) {
  nlohmann::json header = {
      {"version", kModelFormatVersion},
      {"k", model.alphabet_size()},
      {"M", model.n_heads()},
      {"hidden_size", model.hidden_size()},
      {"hyper", model.hyper().to_json()},
      {"alphabet_hash", model.alphabet_hash},
      {"head_ids", model.head_ids},
  };
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  write_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  auto weights = model.weights();
  auto accum = model.accumulators();
  for_each_block(weights, [&](const std::vector<float>& v) { write_block(out, v); });
  for_each_block(accum, [&](const std::vector<float>& v) { write_block(out, v); });
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  Reader r(std::string(std::istreambuf_iterator<char>(in), {}));

  char magic[sizeof kMagic];
  r.take(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorCode::CorruptFile, path.string() + " is not a model file");
  }
  const std::uint32_t header_size = r.u32();
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.string(header_size));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": bad header: " + e.what());
  }

  try {
    const auto version = header.at("version").get<std::uint32_t>();
    if (version != kModelFormatVersion) {
      throw Error(ErrorCode::VersionMismatch,
                  path.string() + " has format version " + std::to_string(version) +
                      ", expected " + std::to_string(kModelFormatVersion));
    }
    auto hyper = Hyperparameters::from_json(header.at("hyper"));
    if (hyper.hidden_size != header.at("hidden_size").get<std::size_t>()) {
      throw Error(ErrorCode::CorruptFile, "hidden size disagrees with hyperparameters");
    }
    Model model(header.at("k").get<std::size_t>(), header.at("M").get<std::size_t>(),
                std::move(hyper));
    model.alphabet_hash = header.value("alphabet_hash", "");
    model.head_ids = header.value("head_ids", std::vector<std::string>{});
    for_each_block(model.weights(), [&](std::vector<float>& v) { r.block(v); });
    for_each_block(model.accumulators(), [&](std::vector<float>& v) { r.block(v); });
    if (!r.at_end()) throw Error(ErrorCode::CorruptFile, path.string() + " has trailing bytes");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": bad header: " + e.what());
  }
}

}  // namespace mhrnn
