#include "poisonprobe/weights_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "poisonprobe/errors.hpp"

namespace poisonprobe {

namespace {

constexpr std::array<char, 8> kMagic = {'G', 'C', 'N', 'W', 'G', 'H', 'T', '\0'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

class Reader {
 public:
  Reader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  std::uint64_t u(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int b = 0; b < width; ++b) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(b)])) << (8 * b);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  [[nodiscard]] bool at_end() const { return pos_ == bytes_.size(); }
  [[noreturn]] void fail(const std::string& why) const {
    throw ParseError(path_ + ": " + why + " (offset " + std::to_string(pos_) + ")");
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) fail("truncated weight file");
  }
  std::string bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

void save_weights(const WeightFile& file, const std::filesystem::path& path) {
  const GcnModel& m = file.model;
  nlohmann::json header;
  header["format"] = "poisonprobe-gcn-weights";
  header["version"] = kWeightFormatVersion;
  header["architecture"] = std::string(to_string(m.architecture));
  header["class_count"] = m.class_count;
  header["seed"] = m.seed;
  std::vector<std::size_t> dims{m.input_dim()};
  for (const auto& w : m.weights) dims.push_back(w.cols());
  header["dims"] = dims;
  header["labels"] = file.class_names;
  header["dataset"] = file.dataset;
  header["dataset_hash"] = file.dataset_hash;
  const std::string text = header.dump();

  std::string out(kMagic.begin(), kMagic.end());
  put_u32(out, kWeightFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  put_u32(out, static_cast<std::uint32_t>(m.weights.size()));
  for (const auto& w : m.weights) {
    put_u64(out, w.rows());
    put_u64(out, w.cols());
    for (double x : w.values()) put_u64(out, std::bit_cast<std::uint64_t>(x));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot write weight file " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw ConfigError("failed writing weight file " + path.string());
}

WeightFile load_weights(const std::filesystem::path& path) {
  Reader r(read_all(path), path.string());
  const std::string magic = r.take(kMagic.size());
  if (std::memcmp(magic.data(), kMagic.data(), kMagic.size()) != 0) r.fail("not a weight file (bad magic)");
  const auto version = static_cast<std::uint32_t>(r.u(4));
  if (version != kWeightFormatVersion) r.fail("unsupported weight format version " + std::to_string(version));
  const auto header_len = static_cast<std::size_t>(r.u(4));
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.take(header_len));
  } catch (const nlohmann::json::exception& e) {
    r.fail(std::string("bad header: ") + e.what());
  }

  WeightFile file;
  try {
    file.model.architecture = parse_architecture(header.at("architecture").get<std::string>());
    file.model.class_count = header.at("class_count").get<int>();
    file.model.seed = header.at("seed").get<std::uint64_t>();
    file.class_names = header.value("labels", std::vector<std::string>{});
    file.dataset = header.value("dataset", std::string{});
    file.dataset_hash = header.value("dataset_hash", std::string{});
  } catch (const nlohmann::json::exception& e) {
    r.fail(std::string("bad header: ") + e.what());
  }
  const auto layers = static_cast<std::size_t>(r.u(4));
  if (static_cast<int>(layers) != layer_count(file.model.architecture)) {
    r.fail("layer count does not match architecture");
  }
  for (std::size_t l = 0; l < layers; ++l) {
    const auto rows = static_cast<std::size_t>(r.u(8));
    const auto cols = static_cast<std::size_t>(r.u(8));
    if (rows == 0 || cols == 0 || rows > (1u << 24) || cols > (1u << 24)) r.fail("bad layer shape");
    Matrix w(rows, cols);
    for (double& x : w.values()) x = std::bit_cast<double>(r.u(8));
    if (l > 0 && file.model.weights.back().cols() != rows) r.fail("layer dimensions do not chain");
    file.model.weights.push_back(std::move(w));
  }
  if (file.model.weights.back().cols() != static_cast<std::size_t>(file.model.class_count)) {
    r.fail("last layer width does not match class count");
  }
  if (!r.at_end()) r.fail("trailing bytes after last layer");
  return file;
}

std::string hash_bytes(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::string file_hash(const std::filesystem::path& path) { return hash_bytes(read_all(path)); }

}  // namespace poisonprobe
