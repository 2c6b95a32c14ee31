#include "checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace deepauction::checkpoint {

namespace {

constexpr char kMagic[4] = {'D', 'A', 'P', 'S'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<char*>(b), 8);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(os, bits);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) {
  std::uint64_t bits = get_u64(is);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(kMagic, 4);
  put_u32(f, kVersion);
  put_u32(f, static_cast<std::uint32_t>(ckpt.kind.size()));
  f.write(ckpt.kind.data(), static_cast<std::streamsize>(ckpt.kind.size()));
  std::string meta = ckpt.meta.dump();
  put_u64(f, meta.size());
  f.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  put_u64(f, ckpt.params.count());
  for (const auto& [name, t] : ckpt.params) {
    put_u32(f, static_cast<std::uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(f, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u64(f, d);
    for (std::size_t i = 0; i < t.size(); ++i) put_f64(f, t[i]);
  }
  if (!f) throw IoError("write failed for '" + path + "'");

  // JSON metadata sidecar for human inspection.
  nlohmann::json side;
  side["kind"] = ckpt.kind;
  side["meta"] = ckpt.meta;
  side["tensors"] = nlohmann::json::array();
  for (const auto& [name, t] : ckpt.params) {
    side["tensors"].push_back({{"name", name}, {"shape", t.shape()}});
  }
  write_text_file(path + ".json", side.dump(2));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("'" + path + "' is not a parameter container");
  }
  std::uint32_t version = get_u32(f);
  if (version != kVersion) {
    throw IoError("unsupported container version in '" + path + "'");
  }
  Checkpoint out;
  std::uint32_t kind_len = get_u32(f);
  out.kind.resize(kind_len);
  f.read(out.kind.data(), kind_len);
  std::uint64_t meta_len = get_u64(f);
  std::string meta(meta_len, '\0');
  f.read(meta.data(), static_cast<std::streamsize>(meta_len));
  out.meta = nlohmann::json::parse(meta);
  std::uint64_t count = get_u64(f);
  for (std::uint64_t k = 0; k < count; ++k) {
    std::uint32_t name_len = get_u32(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    std::uint32_t rank = get_u32(f);
    std::vector<std::size_t> shape(rank);
    for (std::uint32_t r = 0; r < rank; ++r) {
      shape[r] = static_cast<std::size_t>(get_u64(f));
    }
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = get_f64(f);
    out.params.set(name, std::move(t));
    if (!f) throw IoError("truncated container '" + path + "'");
  }
  return out;
}

std::string history_json(const training::History& history) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : history.epochs) {
    j.push_back({{"epoch", e.epoch},
                 {"rev", e.revenue},
                 {"rgt_mean", e.regret_mean},
                 {"rgt_per_bidder", e.regret_per_bidder},
                 {"lambda", e.lambda},
                 {"rho", e.rho},
                 {"wall_time_s", e.wall_time_s}});
  }
  return j.dump(2);
}

void save_history(const training::History& history, const std::string& path) {
  write_text_file(path, history_json(history));
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw IoError("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  std::string out((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  return out;
}

}  // namespace deepauction::checkpoint
