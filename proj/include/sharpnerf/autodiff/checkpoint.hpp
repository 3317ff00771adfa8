#pragma once

#include <string>
#include <vector>

#include "sharpnerf/autodiff/params.hpp"

namespace sharpnerf::ad {

// Parameter file pair: a UTF-8 manifest with one record per array
//   param <name> <rank> <extent...> <byte_offset>
// plus a single flat little-endian f64 file addressed by those offsets.
// Round-trips bit-exactly.

struct NamedArrayRef {
  std::string name;
  Shape shape;
  const double* data;
  std::size_t size;
};

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> data;
};

void write_arrays(const std::string& manifest_path, const std::string& data_path,
                  const std::vector<NamedArrayRef>& arrays);

std::vector<NamedArray> read_arrays(const std::string& manifest_path,
                                    const std::string& data_path);

void save_store(const ParameterStore& store, const std::string& manifest_path,
                const std::string& data_path);

// Loads into an existing store; every manifest record must match a registered
// parameter's shape, and every parameter must be present.
void load_store(ParameterStore& store, const std::string& manifest_path,
                const std::string& data_path);

}  // namespace sharpnerf::ad
