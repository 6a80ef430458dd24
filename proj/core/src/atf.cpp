#include "trojatensor/atf.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

namespace trojatensor {

void ActivationSet::validate() const {
  if (exemplars < 2 || classes < 2 || width < 1) {
    raise(ErrorCode::ShapeMismatch,
          "activation set '" + model_id + "' needs M >= 2, C >= 2, d >= 1, got " +
              std::to_string(exemplars) + "x" + std::to_string(classes) + "x" +
              std::to_string(width));
  }
  if (static_cast<std::size_t>(value_count()) != values.size()) {
    raise(ErrorCode::ShapeMismatch,
          "activation set '" + model_id + "' holds " + std::to_string(values.size()) +
              " values, shape implies " + std::to_string(value_count()));
  }
  for (float v : values) {
    if (!std::isfinite(v)) {
      raise(ErrorCode::NonFiniteValue, "activation set '" + model_id + "' contains NaN/Inf");
    }
  }
}

}  // namespace trojatensor

namespace trojatensor::atf {

namespace {

constexpr char kMagic[4] = {'A', 'T', 'F', '1'};
constexpr std::uint32_t kRank = 3;

std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
  const unsigned char bytes[4] = {
      static_cast<unsigned char>(v & 0xFF),
      static_cast<unsigned char>((v >> 8) & 0xFF),
      static_cast<unsigned char>((v >> 16) & 0xFF),
      static_cast<unsigned char>((v >> 24) & 0xFF),
  };
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

struct RawHeader {
  Header dims;
  std::uint64_t payload_values = 0;
};

RawHeader read_raw_header(std::ifstream& in, const std::filesystem::path& path) {
  unsigned char buf[20];
  in.read(reinterpret_cast<char*>(buf), sizeof(buf));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(buf))) {
    raise(ErrorCode::TruncatedFile, "'" + path.string() + "' is shorter than the ATF header");
  }
  if (std::memcmp(buf, kMagic, 4) != 0) {
    raise(ErrorCode::BadMagic, "'" + path.string() + "' does not start with the ATF1 magic");
  }
  const std::uint32_t rank = read_u32_le(buf + 4);
  if (rank != kRank) {
    raise(ErrorCode::ShapeMismatch,
          "'" + path.string() + "' declares rank " + std::to_string(rank) + ", expected 3");
  }
  RawHeader header;
  header.dims.exemplars = static_cast<Index>(read_u32_le(buf + 8));
  header.dims.classes = static_cast<Index>(read_u32_le(buf + 12));
  header.dims.width = static_cast<Index>(read_u32_le(buf + 16));
  header.payload_values = static_cast<std::uint64_t>(header.dims.exemplars) *
                          static_cast<std::uint64_t>(header.dims.classes) *
                          static_cast<std::uint64_t>(header.dims.width);
  return header;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    raise(ErrorCode::MissingFile, "'" + path.string() + "' does not exist");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    raise(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for reading");
  }
  return in;
}

}  // namespace

Header read_header(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  return read_raw_header(in, path).dims;
}

ActivationSet read(const std::filesystem::path& path, const std::string& model_id) {
  std::ifstream in = open_for_read(path);
  const RawHeader header = read_raw_header(in, path);

  constexpr std::uint64_t kMaxValues = std::uint64_t{1} << 31;
  if (header.payload_values > kMaxValues) {
    raise(ErrorCode::ShapeMismatch, "'" + path.string() + "' declares an implausibly large tensor");
  }

  ActivationSet set;
  set.model_id = model_id;
  set.exemplars = header.dims.exemplars;
  set.classes = header.dims.classes;
  set.width = header.dims.width;
  set.values.resize(static_cast<std::size_t>(header.payload_values));

  const std::streamsize payload_bytes =
      static_cast<std::streamsize>(header.payload_values * sizeof(float));
  in.read(reinterpret_cast<char*>(set.values.data()), payload_bytes);
  if (in.gcount() != payload_bytes) {
    raise(ErrorCode::TruncatedFile,
          "'" + path.string() + "' ends before " + std::to_string(header.payload_values) +
              " float32 values");
  }
  char extra;
  if (in.read(&extra, 1)) {
    raise(ErrorCode::SchemaViolation, "'" + path.string() + "' has bytes past the declared payload");
  }

  set.validate();
  return set;
}

ActivationSet read_activations(const ModelEntry& entry, Index exemplars, Index classes) {
  ActivationSet set = read(entry.path, entry.id);
  if (set.exemplars != exemplars || set.classes != classes) {
    raise(ErrorCode::ShapeMismatch,
          "model '" + entry.id + "' has grid " + std::to_string(set.exemplars) + "x" +
              std::to_string(set.classes) + ", zoo expects " + std::to_string(exemplars) + "x" +
              std::to_string(classes));
  }
  return set;
}

void write(const ActivationSet& set, const std::filesystem::path& path) {
  set.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    raise(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  }
  out.write(kMagic, 4);
  write_u32_le(out, kRank);
  write_u32_le(out, static_cast<std::uint32_t>(set.exemplars));
  write_u32_le(out, static_cast<std::uint32_t>(set.classes));
  write_u32_le(out, static_cast<std::uint32_t>(set.width));
  out.write(reinterpret_cast<const char*>(set.values.data()),
            static_cast<std::streamsize>(set.values.size() * sizeof(float)));
  if (!out) {
    raise(ErrorCode::IoFailure, "write to '" + path.string() + "' failed");
  }
}

namespace {

// Minimal parser for the python dict literal in a .npy v1.0 header.
std::string dict_value(const std::string& header, const std::string& key,
                       const std::filesystem::path& path) {
  const std::string quoted = "'" + key + "'";
  const std::size_t at = header.find(quoted);
  if (at == std::string::npos) {
    raise(ErrorCode::SchemaViolation, "'" + path.string() + "' npy header lacks key " + key);
  }
  std::size_t colon = header.find(':', at);
  if (colon == std::string::npos) {
    raise(ErrorCode::SchemaViolation, "'" + path.string() + "' npy header is malformed");
  }
  std::size_t begin = header.find_first_not_of(" \t", colon + 1);
  std::size_t end;
  if (header[begin] == '\'') {
    end = header.find('\'', begin + 1);
    return header.substr(begin + 1, end - begin - 1);
  }
  if (header[begin] == '(') {
    end = header.find(')', begin);
    return header.substr(begin, end - begin + 1);
  }
  end = header.find_first_of(",}", begin);
  std::string value = header.substr(begin, end - begin);
  while (!value.empty() && (value.back() == ' ' || value.back() == '\t')) value.pop_back();
  return value;
}

std::vector<Index> parse_shape_tuple(const std::string& tuple,
                                     const std::filesystem::path& path) {
  std::vector<Index> dims;
  std::string digits;
  for (char c : tuple) {
    if (c >= '0' && c <= '9') {
      digits.push_back(c);
    } else if (!digits.empty()) {
      dims.push_back(static_cast<Index>(std::stoll(digits)));
      digits.clear();
    }
  }
  if (dims.size() != 3) {
    raise(ErrorCode::ShapeMismatch,
          "'" + path.string() + "' npy shape must be 3-d (M, C, d), got " + tuple);
  }
  return dims;
}

}  // namespace

ActivationSet from_npy(const std::filesystem::path& path, const std::string& model_id) {
  std::ifstream in = open_for_read(path);

  unsigned char preamble[10];
  in.read(reinterpret_cast<char*>(preamble), sizeof(preamble));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(preamble))) {
    raise(ErrorCode::TruncatedFile, "'" + path.string() + "' is shorter than a npy header");
  }
  static const unsigned char kNpyMagic[6] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
  if (std::memcmp(preamble, kNpyMagic, 6) != 0) {
    raise(ErrorCode::BadMagic, "'" + path.string() + "' is not a npy file");
  }
  if (preamble[6] != 1 || preamble[7] != 0) {
    raise(ErrorCode::SchemaViolation,
          "'" + path.string() + "' uses npy format " + std::to_string(preamble[6]) + "." +
              std::to_string(preamble[7]) + ", only 1.0 is supported");
  }
  const std::size_t header_len =
      static_cast<std::size_t>(preamble[8]) | (static_cast<std::size_t>(preamble[9]) << 8);
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  if (in.gcount() != static_cast<std::streamsize>(header_len)) {
    raise(ErrorCode::TruncatedFile, "'" + path.string() + "' npy header is truncated");
  }

  const std::string descr = dict_value(header, "descr", path);
  const bool is_f4 = descr == "<f4" || descr == "=f4";
  const bool is_f8 = descr == "<f8" || descr == "=f8";
  if (!is_f4 && !is_f8) {
    raise(ErrorCode::SchemaViolation,
          "'" + path.string() + "' dtype " + descr + " is unsupported (need <f4 or <f8)");
  }
  if (dict_value(header, "fortran_order", path) != "False") {
    raise(ErrorCode::SchemaViolation, "'" + path.string() + "' must be C-order");
  }
  const std::vector<Index> dims = parse_shape_tuple(dict_value(header, "shape", path), path);

  ActivationSet set;
  set.model_id = model_id;
  set.exemplars = dims[0];
  set.classes = dims[1];
  set.width = dims[2];
  const std::size_t count = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  set.values.resize(count);

  if (is_f4) {
    in.read(reinterpret_cast<char*>(set.values.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(count * sizeof(float))) {
      raise(ErrorCode::TruncatedFile, "'" + path.string() + "' npy payload is truncated");
    }
  } else {
    std::vector<double> wide(count);
    in.read(reinterpret_cast<char*>(wide.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(count * sizeof(double))) {
      raise(ErrorCode::TruncatedFile, "'" + path.string() + "' npy payload is truncated");
    }
    for (std::size_t i = 0; i < count; ++i) set.values[i] = static_cast<float>(wide[i]);
  }

  set.validate();
  return set;
}

}  // namespace trojatensor::atf
