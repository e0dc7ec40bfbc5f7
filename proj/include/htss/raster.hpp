#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "htss/types.hpp"

namespace htss {

/// Toolkit raster file: "HTSSRAST", u32 dtype (1 = f32, 2 = u16), u32 rank,
/// rank x u32 dims, row-major payload. Everything little-endian.
enum class RasterType : std::uint32_t { f32 = 1, u16 = 2 };

struct Raster {
  std::vector<std::uint32_t> dims;
  std::variant<std::vector<float>, std::vector<std::uint16_t>> data;

  RasterType type() const { return data.index() == 0 ? RasterType::f32 : RasterType::u16; }
  std::size_t element_count() const;
};

void write_raster(const std::filesystem::path& path, const Raster& raster);
Raster read_raster(const std::filesystem::path& path);

/// Convenience conversions. Fields are written as H x W x D (rank 3) f32.
void write_field(const std::filesystem::path& path, const PixelField& field);
PixelField read_field(const std::filesystem::path& path);
void write_label(const std::filesystem::path& path, const StrongLabel& label);
/// Also accepts a ".txt" grid: "height width", then the class ids row by row.
StrongLabel read_label(const std::filesystem::path& path);
StrongLabel read_label_text(const std::filesystem::path& path);

}  // namespace htss
