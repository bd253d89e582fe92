#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace ficoco {

/// Row-major little-endian float32 tensor of rank 1, 2 or 3, as stored in a
/// .npy (format version 1.0) file.
struct TensorFile {
  std::vector<std::size_t> shape;
  std::vector<float> payload;

  std::size_t element_count() const noexcept;
  friend bool operator==(const TensorFile&, const TensorFile&) = default;
};

/// Throws ShapeError unless rank is 1..3 and the payload size matches.
void validate_tensor(const TensorFile& tensor);

TensorFile read_tensor(const std::filesystem::path& path);
void write_tensor(const std::filesystem::path& path, const TensorFile& tensor);

// In-memory variants; the file functions are thin wrappers over these.
TensorFile decode_npy(const std::string& bytes);
std::string encode_npy(const TensorFile& tensor);

}  // namespace ficoco
