#include "samba/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace samba {

namespace {

// Skips whitespace and '#' comments in a PNM header.
void skip_pnm_space(std::istream& in) {
  while (true) {
    const int ch = in.peek();
    if (ch == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else if (ch != EOF && std::isspace(ch)) {
      in.get();
    } else {
      return;
    }
  }
}

unsigned long read_pnm_uint(std::istream& in, const char* field) {
  skip_pnm_space(in);
  unsigned long v = 0;
  if (!(in >> v)) throw FormatError(std::string("PGM: could not read ") + field);
  return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

template <typename U>
U to_little_endian(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(U)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<U>(bytes);
  }
  return v;
}

template <typename U>
void put_le(std::ostream& out, U v) {
  const auto le = to_little_endian(v);
  out.write(reinterpret_cast<const char*>(&le), sizeof(U));
}

template <typename U>
U get_le(std::istream& in) {
  U v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(U))) {
    throw FormatError("SMBT: unexpected end of data");
  }
  return to_little_endian(v);
}

template <typename T>
Tensor<T> read_smbt_payload(std::istream& in, Shape shape) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  std::vector<T> data(Tensor<T>::element_count(shape));
  for (T& v : data) v = std::bit_cast<T>(get_le<Bits>(in));
  return Tensor<T>(std::move(shape), std::move(data));
}

}  // namespace

SaliencyMap read_pgm(std::istream& in) {
  std::array<char, 2> magic{};
  if (!in.read(magic.data(), 2) || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '2')) {
    throw FormatError("PGM: missing P5/P2 magic");
  }
  const bool binary = magic[1] == '5';
  const auto width = read_pnm_uint(in, "width");
  const auto height = read_pnm_uint(in, "height");
  const auto maxval = read_pnm_uint(in, "maxval");
  if (width == 0 || height == 0) throw FormatError("PGM: zero extent");
  if (maxval == 0 || maxval > 65535) throw FormatError("PGM: maxval out of range");

  std::vector<double> values(width * height);
  const double scale = 1.0 / static_cast<double>(maxval);
  if (binary) {
    in.get();  // the single whitespace byte after maxval
    const std::size_t bytes_per = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(values.size() * bytes_per);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
      throw FormatError("PGM: truncated pixel data");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      unsigned long v = bytes_per == 1 ? raw[i] : (raw[2 * i] << 8U) | raw[2 * i + 1];
      if (v > maxval) throw FormatError("PGM: pixel exceeds maxval");
      values[i] = static_cast<double>(v) * scale;
    }
  } else {
    for (double& out : values) {
      const auto v = read_pnm_uint(in, "pixel");
      if (v > maxval) throw FormatError("PGM: pixel exceeds maxval");
      out = static_cast<double>(v) * scale;
    }
  }
  return SaliencyMap(height, width, std::move(values));
}

SaliencyMap read_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_pgm(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_pgm(std::ostream& out, const SaliencyMap& map, PgmEncoding encoding) {
  const bool binary = encoding == PgmEncoding::binary;
  out << (binary ? "P5" : "P2") << '\n' << map.width() << ' ' << map.height() << "\n255\n";
  for (std::size_t r = 0; r < map.height(); ++r) {
    for (std::size_t c = 0; c < map.width(); ++c) {
      const auto v = static_cast<unsigned>(std::lround(map(r, c) * 255.0));
      if (binary) {
        out.put(static_cast<char>(v));
      } else {
        out << v << (c + 1 == map.width() ? '\n' : ' ');
      }
    }
  }
}

void write_pgm(const std::filesystem::path& path, const SaliencyMap& map, PgmEncoding encoding) {
  auto out = open_out(path);
  write_pgm(out, map, encoding);
}

AnyTensor read_smbt(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || std::memcmp(magic.data(), "SMBT", 4) != 0) {
    throw FormatError("SMBT: bad magic");
  }
  const auto rank = get_le<std::uint8_t>(in);
  if (rank < 1 || rank > 4) throw FormatError("SMBT: rank must be 1-4");
  Shape shape(rank);
  for (auto& e : shape) {
    e = get_le<std::uint32_t>(in);
    if (e == 0) throw FormatError("SMBT: zero extent");
  }
  const auto dtype = get_le<std::uint8_t>(in);
  switch (dtype) {
    case 0:
      return read_smbt_payload<float>(in, std::move(shape));
    case 1:
      return read_smbt_payload<double>(in, std::move(shape));
    default:
      throw FormatError("SMBT: unknown dtype code " + std::to_string(dtype));
  }
}

AnyTensor read_smbt(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_smbt(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

template <typename T>
void write_smbt(std::ostream& out, const Tensor<T>& tensor) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  out.write("SMBT", 4);
  put_le(out, static_cast<std::uint8_t>(tensor.rank()));
  for (std::size_t e : tensor.shape()) put_le(out, static_cast<std::uint32_t>(e));
  put_le(out, static_cast<std::uint8_t>(sizeof(T) == 4 ? 0 : 1));
  for (T v : tensor.data()) put_le(out, std::bit_cast<Bits>(v));
}

template <typename T>
void write_smbt(const std::filesystem::path& path, const Tensor<T>& tensor) {
  auto out = open_out(path);
  write_smbt(out, tensor);
}

template void write_smbt(std::ostream&, const TensorF&);
template void write_smbt(std::ostream&, const TensorD&);
template void write_smbt(const std::filesystem::path&, const TensorF&);
template void write_smbt(const std::filesystem::path&, const TensorD&);

}  // namespace samba
