#include "causaug/npy.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <string_view>

namespace causaug {

static_assert(std::endian::native == std::endian::little, "NPY IO assumes a little-endian host");

namespace {

constexpr std::uint8_t kMagic[6] = {0x93, 'N', 'U', 'M', 'P', 'Y'};

// Minimal reader for the Python dict literal in an NPY header.
class HeaderParser {
 public:
  HeaderParser(std::string_view text, std::size_t base) : text_(text), base_(base) {}

  struct Fields {
    std::optional<std::string> descr;
    std::optional<bool> fortran_order;
    std::optional<std::vector<std::size_t>> shape;
  };

  Fields parse() {
    Fields fields;
    skip_ws();
    expect('{');
    for (;;) {
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      const std::size_t key_pos = pos_;
      const std::string key = parse_string();
      skip_ws();
      expect(':');
      skip_ws();
      if (key == "descr") {
        if (fields.descr) fail("duplicate key 'descr'", key_pos);
        fields.descr = parse_string();
      } else if (key == "fortran_order") {
        if (fields.fortran_order) fail("duplicate key 'fortran_order'", key_pos);
        fields.fortran_order = parse_bool();
      } else if (key == "shape") {
        if (fields.shape) fail("duplicate key 'shape'", key_pos);
        fields.shape = parse_tuple();
      } else {
        fail("unexpected header key '" + key + "'", key_pos);
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != '}') {
        fail("expected ',' or '}' in header", pos_);
      }
    }
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters after header dict", pos_);
    if (!fields.descr) fail("header is missing 'descr'", pos_);
    if (!fields.fortran_order) fail("header is missing 'fortran_order'", pos_);
    if (!fields.shape) fail("header is missing 'shape'", pos_);
    return fields;
  }

 private:
  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw ParseError("NPY: " + what, base_ + at);
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\n' || text_[pos_] == '\t')) {
      ++pos_;
    }
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }
  std::string parse_string() {
    const char quote = peek();
    if (quote != '\'' && quote != '"') fail("expected quoted string", pos_);
    const std::size_t start = ++pos_;
    while (pos_ < text_.size() && text_[pos_] != quote) ++pos_;
    if (pos_ >= text_.size()) fail("unterminated string", start);
    std::string s(text_.substr(start, pos_ - start));
    ++pos_;
    return s;
  }
  bool parse_bool() {
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail("expected True or False", pos_);
  }
  std::vector<std::size_t> parse_tuple() {
    expect('(');
    std::vector<std::size_t> dims;
    for (;;) {
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        return dims;
      }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected shape dimension", pos_);
      std::size_t v = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        v = v * 10 + static_cast<std::size_t>(peek() - '0');
        ++pos_;
      }
      dims.push_back(v);
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ')') {
        fail("expected ',' or ')' in shape", pos_);
      }
    }
  }

  std::string_view text_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

template <typename T>
void widen(const std::uint8_t* src, std::size_t count, std::vector<float>& out) {
  out.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    T v;
    std::memcpy(&v, src + i * sizeof(T), sizeof(T));
    out[i] = static_cast<float>(v);
  }
}

std::string shape_literal(std::span<const std::size_t> shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) s += ", ";
    s += std::to_string(shape[i]);
  }
  if (shape.size() == 1) s += ",";
  s += ")";
  return s;
}

std::vector<std::uint8_t> encode_raw(const void* data, std::size_t bytes, std::string_view descr,
                                     std::span<const std::size_t> shape) {
  std::string header = "{'descr': '" + std::string(descr) + "', 'fortran_order': False, 'shape': " +
                       shape_literal(shape) + ", }";
  // magic(6) + version(2) + length(2) + header + '\n' must be a multiple of 64.
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header += '\n';
  if (header.size() > 0xFFFF) throw InvalidArgument("NPY: header too long for format 1.0");

  std::vector<std::uint8_t> out;
  out.reserve(10 + header.size() + bytes);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(1);
  out.push_back(0);
  out.push_back(static_cast<std::uint8_t>(header.size() & 0xFF));
  out.push_back(static_cast<std::uint8_t>(header.size() >> 8));
  out.insert(out.end(), header.begin(), header.end());
  const auto* p = static_cast<const std::uint8_t*>(data);
  out.insert(out.end(), p, p + bytes);
  return out;
}

std::size_t element_count(std::span<const std::size_t> shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

}  // namespace

NpyArray parse_npy(std::span<const std::uint8_t> bytes) {
  for (std::size_t i = 0; i < 6; ++i) {
    if (i >= bytes.size()) throw ParseError("NPY: file truncated inside magic string", i);
    if (bytes[i] != kMagic[i]) throw ParseError("NPY: bad magic byte", i);
  }
  if (bytes.size() < 8) throw ParseError("NPY: file truncated before version", bytes.size());
  const std::uint8_t major = bytes[6];
  const std::uint8_t minor = bytes[7];
  if (minor != 0 || major < 1 || major > 3) {
    throw ParseError("NPY: unsupported format version " + std::to_string(major) + "." +
                         std::to_string(minor),
                     6);
  }
  std::size_t header_len = 0;
  std::size_t header_start = 0;
  if (major == 1) {
    if (bytes.size() < 10) throw ParseError("NPY: file truncated in header length", bytes.size());
    header_len = bytes[8] | (static_cast<std::size_t>(bytes[9]) << 8);
    header_start = 10;
  } else {
    if (bytes.size() < 12) throw ParseError("NPY: file truncated in header length", bytes.size());
    header_len = bytes[8] | (static_cast<std::size_t>(bytes[9]) << 8) |
                 (static_cast<std::size_t>(bytes[10]) << 16) | (static_cast<std::size_t>(bytes[11]) << 24);
    header_start = 12;
  }
  if (header_start + header_len > bytes.size()) {
    throw ParseError("NPY: header length exceeds file size", 8);
  }
  const std::string_view header(reinterpret_cast<const char*>(bytes.data() + header_start), header_len);
  const auto fields = HeaderParser(header, header_start).parse();

  if (*fields.fortran_order) {
    throw ParseError("NPY: fortran_order=True layout is unsupported", header_start);
  }
  const auto& shape = *fields.shape;
  if (shape.size() != 2 && shape.size() != 3) {
    throw ParseError("NPY: only 2-D and 3-D arrays are supported, got " + std::to_string(shape.size()) +
                         "-D",
                     header_start);
  }

  const std::string& descr = *fields.descr;
  std::size_t item = 0;
  if (descr.size() == 3 && (descr[0] == '<' || descr[0] == '|')) {
    item = static_cast<std::size_t>(descr[2] - '0');
  }
  const std::size_t count = element_count(shape);
  const std::size_t data_start = header_start + header_len;

  NpyArray out;
  out.shape = shape;
  out.descr = descr;
  auto require = [&](std::size_t item_size) {
    if (bytes.size() - data_start < count * item_size) {
      throw ParseError("NPY: data section shorter than shape requires", bytes.size());
    }
  };
  const std::uint8_t* src = bytes.data() + data_start;
  const std::string kind = descr.size() == 3 ? descr.substr(1, 1) : std::string();
  if (kind == "f" && item == 4 && descr[0] == '<') {
    require(4);
    out.data.resize(count);
    std::memcpy(out.data.data(), src, count * 4);
  } else if (kind == "f" && item == 8 && descr[0] == '<') {
    require(8);
    widen<double>(src, count, out.data);
  } else if (kind == "i" && item == 1) {
    require(1);
    widen<std::int8_t>(src, count, out.data);
  } else if (kind == "u" && item == 1) {
    require(1);
    widen<std::uint8_t>(src, count, out.data);
  } else if (kind == "i" && item == 2 && descr[0] == '<') {
    require(2);
    widen<std::int16_t>(src, count, out.data);
  } else if (kind == "u" && item == 2 && descr[0] == '<') {
    require(2);
    widen<std::uint16_t>(src, count, out.data);
  } else if (kind == "i" && item == 4 && descr[0] == '<') {
    require(4);
    widen<std::int32_t>(src, count, out.data);
  } else if (kind == "u" && item == 4 && descr[0] == '<') {
    require(4);
    widen<std::uint32_t>(src, count, out.data);
  } else if (kind == "i" && item == 8 && descr[0] == '<') {
    require(8);
    widen<std::int64_t>(src, count, out.data);
  } else if (kind == "u" && item == 8 && descr[0] == '<') {
    require(8);
    widen<std::uint64_t>(src, count, out.data);
  } else {
    throw ParseError("NPY: unsupported dtype '" + descr + "'", header_start);
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

NpyArray load_npy(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_npy(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
}

ImageTensor to_image(const NpyArray& array) {
  if (array.shape.size() == 2) return ImageTensor(1, array.shape[0], array.shape[1], array.data);
  if (array.shape.size() == 3) return ImageTensor(array.shape[0], array.shape[1], array.shape[2], array.data);
  throw InvalidArgument("to_image: expected a 2-D or 3-D array");
}

VolumeFile to_volume(const NpyArray& array) {
  VolumeFile v;
  if (array.shape.size() == 2) {
    v.depth = 1;
    v.height = array.shape[0];
    v.width = array.shape[1];
  } else if (array.shape.size() == 3) {
    v.depth = array.shape[0];
    v.height = array.shape[1];
    v.width = array.shape[2];
  } else {
    throw InvalidArgument("to_volume: expected a 2-D or 3-D array");
  }
  if (v.depth == 0) throw InvalidArgument("to_volume: volume has zero depth");
  v.data = array.data;
  return v;
}

std::vector<std::uint8_t> encode_npy(std::span<const float> data, std::span<const std::size_t> shape) {
  if (element_count(shape) != data.size()) throw InvalidArgument("encode_npy: shape does not match data");
  return encode_raw(data.data(), data.size_bytes(), "<f4", shape);
}

std::vector<std::uint8_t> encode_npy(std::span<const std::int32_t> data, std::span<const std::size_t> shape) {
  if (element_count(shape) != data.size()) throw InvalidArgument("encode_npy: shape does not match data");
  return encode_raw(data.data(), data.size_bytes(), "<i4", shape);
}

void save_npy(const ImageTensor& tensor, const std::filesystem::path& path) {
  const std::size_t shape[3] = {tensor.channels(), tensor.height(), tensor.width()};
  write_file(path, encode_npy(tensor.data(), shape));
}

void save_npy(const LabelMask& mask, const std::filesystem::path& path) {
  const std::size_t shape[2] = {mask.height(), mask.width()};
  write_file(path, encode_npy(mask.data(), shape));
}

void save_npy(const VolumeFile& volume, const std::filesystem::path& path) {
  const std::size_t shape[3] = {volume.depth, volume.height, volume.width};
  write_file(path, encode_npy(std::span<const float>(volume.data), shape));
}

}  // namespace causaug
