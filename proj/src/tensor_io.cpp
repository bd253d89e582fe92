#include "ficoco/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "ficoco/errors.hpp"

namespace ficoco {

namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;
constexpr std::size_t kPreludeLen = kMagicLen + 2 + 2;  // magic, version, header length
constexpr std::size_t kAlignment = 64;

static_assert(std::endian::native == std::endian::little,
              "tensor I/O assumes a little-endian host");

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

// Extracts the raw value text for `key` from a python-literal dict such as
// {'descr': '<f4', 'fortran_order': False, 'shape': (3, 4), }.
std::string dict_value(const std::string& header, const std::string& key) {
  const std::string needle = "'" + key + "'";
  auto pos = header.find(needle);
  if (pos == std::string::npos) throw FormatError("npy header is missing key " + needle);
  pos = header.find(':', pos + needle.size());
  if (pos == std::string::npos) throw FormatError("npy header: no value for " + needle);
  ++pos;
  while (pos < header.size() && header[pos] == ' ') ++pos;
  if (pos >= header.size()) throw FormatError("npy header truncated");
  std::size_t end = pos;
  if (header[pos] == '(') {
    end = header.find(')', pos);
    if (end == std::string::npos) throw FormatError("npy header: unterminated shape tuple");
    ++end;
  } else if (header[pos] == '\'') {
    end = header.find('\'', pos + 1);
    if (end == std::string::npos) throw FormatError("npy header: unterminated string");
    ++end;
  } else {
    end = header.find_first_of(",}", pos);
    if (end == std::string::npos) throw FormatError("npy header: unterminated value");
  }
  return trim(std::string_view(header).substr(pos, end - pos));
}

std::vector<std::size_t> parse_shape(const std::string& tuple) {
  if (tuple.size() < 2 || tuple.front() != '(' || tuple.back() != ')') {
    throw FormatError("npy header: shape is not a tuple: " + tuple);
  }
  std::vector<std::size_t> shape;
  std::stringstream items(tuple.substr(1, tuple.size() - 2));
  std::string item;
  while (std::getline(items, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    if (!std::all_of(item.begin(), item.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw FormatError("npy header: bad dimension '" + item + "'");
    }
    shape.push_back(static_cast<std::size_t>(std::stoull(item)));
  }
  return shape;
}

std::string shape_literal(const std::vector<std::size_t>& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  if (shape.size() == 1) out += ",";
  return out + ")";
}

}  // namespace

std::size_t TensorFile::element_count() const noexcept {
  if (shape.empty()) return 0;
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void validate_tensor(const TensorFile& tensor) {
  if (tensor.shape.empty() || tensor.shape.size() > 3) {
    throw ShapeError("tensor rank must be 1, 2 or 3, got " + std::to_string(tensor.shape.size()));
  }
  if (tensor.element_count() != tensor.payload.size()) {
    throw ShapeError("tensor shape " + shape_literal(tensor.shape) + " does not match " +
                     std::to_string(tensor.payload.size()) + " payload values");
  }
}

std::string encode_npy(const TensorFile& tensor) {
  validate_tensor(tensor);
  std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': " +
                       shape_literal(tensor.shape) + ", }";
  // Pad with spaces so the payload starts on an aligned offset; the header
  // always ends in a newline.
  const std::size_t unpadded = kPreludeLen + header.size() + 1;
  header.append((kAlignment - unpadded % kAlignment) % kAlignment, ' ');
  header.push_back('\n');
  if (header.size() > 0xFFFF) throw FormatError("npy header too long for format 1.0");

  std::string out;
  out.reserve(kPreludeLen + header.size() + tensor.payload.size() * sizeof(float));
  out.append(kMagic, kMagicLen);
  out.push_back('\x01');
  out.push_back('\x00');
  const auto len = static_cast<std::uint16_t>(header.size());
  out.push_back(static_cast<char>(len & 0xFF));
  out.push_back(static_cast<char>(len >> 8));
  out += header;
  const auto offset = out.size();
  out.resize(offset + tensor.payload.size() * sizeof(float));
  if (!tensor.payload.empty()) {
    std::memcpy(out.data() + offset, tensor.payload.data(), tensor.payload.size() * sizeof(float));
  }
  return out;
}

TensorFile decode_npy(const std::string& bytes) {
  if (bytes.size() < kPreludeLen || bytes.compare(0, kMagicLen, kMagic, kMagicLen) != 0) {
    throw FormatError("not an npy file (bad magic)");
  }
  const auto major = static_cast<unsigned char>(bytes[6]);
  const auto minor = static_cast<unsigned char>(bytes[7]);
  if (major != 1 || minor != 0) {
    throw FormatError("unsupported npy version " + std::to_string(major) + "." +
                      std::to_string(minor));
  }
  const std::size_t header_len = static_cast<unsigned char>(bytes[8]) |
                                 (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
  if (bytes.size() < kPreludeLen + header_len) throw FormatError("npy header truncated");
  const std::string header = bytes.substr(kPreludeLen, header_len);

  const std::string descr = dict_value(header, "descr");
  if (descr != "'<f4'") {
    throw DtypeError("unsupported dtype " + descr + "; only little-endian float32 ('<f4')");
  }
  if (dict_value(header, "fortran_order") != "False") {
    throw FormatError("fortran-ordered arrays are not supported");
  }

  TensorFile tensor;
  tensor.shape = parse_shape(dict_value(header, "shape"));
  if (tensor.shape.empty() || tensor.shape.size() > 3) {
    throw ShapeError("tensor rank must be 1, 2 or 3, got " + std::to_string(tensor.shape.size()));
  }
  const std::size_t count = tensor.element_count();
  const std::size_t offset = kPreludeLen + header_len;
  const std::size_t available = bytes.size() - offset;
  if (available < count * sizeof(float)) {
    throw FormatError("truncated payload: shape " + shape_literal(tensor.shape) + " needs " +
                      std::to_string(count) + " values, file holds " +
                      std::to_string(available / sizeof(float)));
  }
  if (available > count * sizeof(float)) {
    throw FormatError("trailing bytes after npy payload");
  }
  tensor.payload.resize(count);
  if (count) std::memcpy(tensor.payload.data(), bytes.data() + offset, count * sizeof(float));
  return tensor;
}

TensorFile read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return decode_npy(buf.str());
  } catch (const Error& e) {
    // Keep the class, add the file name.
    if (e.error_class() == "dtype") throw DtypeError(path.string() + ": " + e.what());
    if (e.error_class() == "shape") throw ShapeError(path.string() + ": " + e.what());
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_tensor(const std::filesystem::path& path, const TensorFile& tensor) {
  const std::string bytes = encode_npy(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace ficoco
