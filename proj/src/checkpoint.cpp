#include "mstf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "mstf/errors.hpp"

namespace mstf {

namespace {

constexpr char kMagic[8] = {'M', 'S', 'T', 'F', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double d) { put_u64(out, std::bit_cast<uint64_t>(d)); }

class Reader {
 public:
  Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(byte()) << (8 * i);
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(byte()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  uint8_t byte() { return static_cast<uint8_t>(data_[pos_++]); }
  void need(size_t n) {
    if (pos_ + n > data_.size()) {
      throw DataError("checkpoint '" + path_ + "': truncated file");
    }
  }
  std::string data_;
  std::string path_;
  size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::string& path, const std::string& meta,
                     std::span<Parameter* const> params) {
  std::string buf;
  buf.append(kMagic, sizeof(kMagic));
  put_u32(buf, kVersion);
  put_u64(buf, meta.size());
  buf += meta;
  put_u32(buf, static_cast<uint32_t>(params.size()));
  for (const Parameter* p : params) {
    put_u32(buf, static_cast<uint32_t>(p->name.size()));
    buf += p->name;
    put_u32(buf, static_cast<uint32_t>(p->value.rank()));
    for (int a = 0; a < p->value.rank(); ++a) {
      put_u64(buf, static_cast<uint64_t>(p->value.extent(a)));
    }
    for (int64_t i = 0; i < p->value.size(); ++i) put_f64(buf, p->value[i]);
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("checkpoint: cannot open '" + path + "' for writing");
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!f) throw DataError("checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot open '" + path + "'");
  std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r(std::move(data), path);

  if (r.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw DataError("checkpoint '" + path + "': bad magic");
  }
  Checkpoint ck;
  ck.version = r.u32();
  if (ck.version != kVersion) {
    throw DataError("checkpoint '" + path + "': unsupported version " +
                    std::to_string(ck.version));
  }
  ck.meta = r.bytes(r.u64());
  const uint32_t count = r.u32();
  ck.blocks.reserve(count);
  for (uint32_t b = 0; b < count; ++b) {
    std::string name = r.bytes(r.u32());
    const uint32_t rank = r.u32();
    std::vector<int> shape(rank);
    int64_t n = 1;
    for (uint32_t a = 0; a < rank; ++a) {
      shape[a] = static_cast<int>(r.u64());
      n *= shape[a];
    }
    std::vector<double> values(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) values[static_cast<size_t>(i)] = r.f64();
    ck.blocks.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  if (!r.done()) throw DataError("checkpoint '" + path + "': trailing bytes");
  return ck;
}

}  // namespace mstf
