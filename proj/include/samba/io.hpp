#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <variant>

#include "samba/maps.hpp"
#include "samba/tensor.hpp"

namespace samba {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// PGM ------------------------------------------------------------------------
// Reads "P5" (binary) and "P2" (ASCII) greymaps; values are mapped linearly from
// [0, maxval] to [0, 1]. Writers quantize to maxval 255 with round-to-nearest.

SaliencyMap read_pgm(std::istream& in);
SaliencyMap read_pgm(const std::filesystem::path& path);

enum class PgmEncoding { binary, ascii };

void write_pgm(std::ostream& out, const SaliencyMap& map, PgmEncoding encoding = PgmEncoding::binary);
void write_pgm(const std::filesystem::path& path, const SaliencyMap& map,
               PgmEncoding encoding = PgmEncoding::binary);

// SMBT -----------------------------------------------------------------------
// "SMBT" magic, u8 rank, rank x u32 LE extents, u8 dtype (0 = f32, 1 = f64),
// then the values as little-endian row-major.

using AnyTensor = std::variant<TensorF, TensorD>;

AnyTensor read_smbt(std::istream& in);
AnyTensor read_smbt(const std::filesystem::path& path);

/// Reads an SMBT container and converts it to the requested element type.
template <typename T>
Tensor<T> read_smbt_as(const std::filesystem::path& path) {
  return std::visit([](const auto& t) { return t.template cast<T>(); }, read_smbt(path));
}

template <typename T>
void write_smbt(std::ostream& out, const Tensor<T>& tensor);
template <typename T>
void write_smbt(const std::filesystem::path& path, const Tensor<T>& tensor);

}  // namespace samba
