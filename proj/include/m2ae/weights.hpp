#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "m2ae/tensor.hpp"

namespace m2ae {

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Named tensor container. Iteration order is the sorted name order.
struct WeightStore {
  std::map<std::string, Tensor> tensors;

  bool contains(const std::string& name) const { return tensors.count(name) != 0; }
  void put(const std::string& name, Tensor t) { tensors[name] = std::move(t); }
  const Tensor& get(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw FormatError("missing weight tensor: " + name);
    return it->second;
  }
};

// Container layout, little-endian throughout:
//   magic "M2AE" (4) | version u32 (4) | entry count u64 (8)
//   per entry: name length u32 | name bytes | dtype u8 (0 = f32)
//              | ndim u32 | dims u64 each | raw f32 data
// An empty store is exactly the 16-byte header.
constexpr uint32_t kWeightFormatVersion = 1;

namespace detail {

template <typename T>
void write_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, int64_t& offset, const std::string& what) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is)
    throw FormatError("weight file truncated reading " + what + " at offset " +
                      std::to_string(offset));
  T v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  offset += sizeof(T);
  return v;
}

/// Write to a sibling temp file, rename into place on success.
class AtomicFileWriter {
 public:
  explicit AtomicFileWriter(const std::string& path)
      : final_path_(path), tmp_path_(path + ".tmp"), os_(tmp_path_, std::ios::binary) {
    if (!os_) throw IoError("cannot open for writing: " + tmp_path_);
  }
  ~AtomicFileWriter() {
    if (!committed_) {
      os_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_path_, ec);
    }
  }
  std::ostream& stream() { return os_; }
  void commit() {
    os_.flush();
    if (!os_) throw IoError("write failed: " + tmp_path_);
    os_.close();
    std::filesystem::rename(tmp_path_, final_path_);
    committed_ = true;
  }

 private:
  std::string final_path_, tmp_path_;
  std::ofstream os_;
  bool committed_ = false;
};

}  // namespace detail

inline void save_weights(const WeightStore& store, const std::string& path) {
  detail::AtomicFileWriter writer(path);
  std::ostream& os = writer.stream();
  os.write("M2AE", 4);
  detail::write_le<uint32_t>(os, kWeightFormatVersion);
  detail::write_le<uint64_t>(os, store.tensors.size());
  for (const auto& [name, t] : store.tensors) {
    detail::write_le<uint32_t>(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    os.put(0);  // dtype f32
    detail::write_le<uint32_t>(os, static_cast<uint32_t>(t.dims.size()));
    for (int d : t.dims) detail::write_le<uint64_t>(os, static_cast<uint64_t>(d));
    static_assert(sizeof(float) == 4);
    for (float v : t.data) {
      uint32_t bits;
      std::memcpy(&bits, &v, 4);
      detail::write_le<uint32_t>(os, bits);
    }
  }
  writer.commit();
}

inline WeightStore load_weights(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open weights: " + path);
  int64_t offset = 0;
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "M2AE", 4) != 0)
    throw FormatError("bad magic at offset 0 in " + path);
  offset = 4;
  const uint32_t version = detail::read_le<uint32_t>(is, offset, "version");
  if (version != kWeightFormatVersion)
    throw FormatError("unsupported weight format version " + std::to_string(version) +
                      " at offset 4");
  const uint64_t count = detail::read_le<uint64_t>(is, offset, "entry count");
  WeightStore store;
  for (uint64_t i = 0; i < count; ++i) {
    const uint32_t name_len = detail::read_le<uint32_t>(is, offset, "name length");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw FormatError("weight file truncated reading name at offset " +
                               std::to_string(offset));
    offset += name_len;
    const uint8_t dtype = detail::read_le<uint8_t>(is, offset, "dtype");
    if (dtype != 0)
      throw FormatError("unsupported dtype " + std::to_string(dtype) + " at offset " +
                        std::to_string(offset - 1));
    const uint32_t ndim = detail::read_le<uint32_t>(is, offset, "ndim");
    std::vector<int> dims(ndim);
    for (uint32_t d = 0; d < ndim; ++d)
      dims[d] = static_cast<int>(detail::read_le<uint64_t>(is, offset, "dim"));
    Tensor t(dims);
    for (int64_t j = 0; j < t.size(); ++j) {
      const uint32_t bits = detail::read_le<uint32_t>(is, offset, "tensor data");
      std::memcpy(&t.data[j], &bits, 4);
    }
    if (store.contains(name)) throw FormatError("duplicate tensor name: " + name);
    store.put(name, std::move(t));
  }
  return store;
}

}  // namespace m2ae
