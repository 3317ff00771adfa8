#include "sharpnerf/autodiff/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sharpnerf::ad {

namespace {

void write_le_doubles(std::ofstream& out, const double* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * 8));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, &data[i], 8);
      char b[8];
      for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((bits >> (8 * k)) & 0xff);
      out.write(b, 8);
    }
  }
}

void read_le_doubles(std::ifstream& in, double* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * 8));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      unsigned char b[8];
      in.read(reinterpret_cast<char*>(b), 8);
      std::uint64_t bits = 0;
      for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(b[k]) << (8 * k);
      std::memcpy(&data[i], &bits, 8);
    }
  }
}

}  // namespace

void write_arrays(const std::string& manifest_path, const std::string& data_path,
                  const std::vector<NamedArrayRef>& arrays) {
  std::ofstream manifest(manifest_path);
  if (!manifest) throw AdError("write_arrays: cannot open " + manifest_path);
  std::ofstream data(data_path, std::ios::binary);
  if (!data) throw AdError("write_arrays: cannot open " + data_path);

  std::size_t offset = 0;
  for (const auto& a : arrays) {
    manifest << "param " << a.name << ' ' << a.shape.size();
    for (auto d : a.shape) manifest << ' ' << d;
    manifest << ' ' << offset << '\n';
    write_le_doubles(data, a.data, a.size);
    offset += a.size * 8;
  }
  if (!manifest || !data) throw AdError("write_arrays: write failed");
}

std::vector<NamedArray> read_arrays(const std::string& manifest_path,
                                    const std::string& data_path) {
  std::ifstream manifest(manifest_path);
  if (!manifest) throw AdError("read_arrays: cannot open " + manifest_path);
  std::ifstream data(data_path, std::ios::binary);
  if (!data) throw AdError("read_arrays: cannot open " + data_path);

  std::vector<NamedArray> result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(manifest, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string tag;
    is >> tag;
    if (tag != "param")
      throw AdError("read_arrays: " + manifest_path + ":" + std::to_string(lineno) +
                    ": expected 'param' record");
    NamedArray a;
    std::size_t rank = 0, offset = 0;
    if (!(is >> a.name >> rank))
      throw AdError("read_arrays: malformed record at line " + std::to_string(lineno));
    a.shape.resize(rank);
    for (auto& d : a.shape)
      if (!(is >> d)) throw AdError("read_arrays: malformed shape at line " + std::to_string(lineno));
    if (!(is >> offset))
      throw AdError("read_arrays: missing offset at line " + std::to_string(lineno));

    a.data.resize(numel(a.shape));
    data.seekg(static_cast<std::streamoff>(offset));
    read_le_doubles(data, a.data.data(), a.data.size());
    if (!data)
      throw AdError("read_arrays: " + data_path + ": truncated at offset " +
                    std::to_string(offset) + " reading " + a.name);
    result.push_back(std::move(a));
  }
  return result;
}

void save_store(const ParameterStore& store, const std::string& manifest_path,
                const std::string& data_path) {
  std::vector<NamedArrayRef> refs;
  refs.reserve(store.names().size());
  for (const auto& name : store.names()) {
    const Tensor& t = store.get(name);
    refs.push_back({name, t.shape(), t.data(), t.size()});
  }
  write_arrays(manifest_path, data_path, refs);
}

void load_store(ParameterStore& store, const std::string& manifest_path,
                const std::string& data_path) {
  auto arrays = read_arrays(manifest_path, data_path);
  std::size_t matched = 0;
  for (auto& a : arrays) {
    if (!store.has(a.name)) throw AdError("load_store: unexpected parameter " + a.name);
    Tensor& t = store.get(a.name);
    if (t.shape() != a.shape)
      throw AdError("load_store: shape mismatch for " + a.name + ": stored " +
                    shape_str(a.shape) + ", registered " + shape_str(t.shape()));
    std::memcpy(t.data(), a.data.data(), a.data.size() * 8);
    ++matched;
  }
  if (matched != store.names().size())
    throw AdError("load_store: checkpoint is missing parameters (" + std::to_string(matched) +
                  " of " + std::to_string(store.names().size()) + ")");
}

}  // namespace sharpnerf::ad
