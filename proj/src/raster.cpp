#include "htss/raster.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "htss/error.hpp"

namespace htss {

namespace {

constexpr char kMagic[8] = {'H', 'T', 'S', 'S', 'R', 'A', 'S', 'T'};
constexpr std::uint32_t kMaxRank = 8;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xffu));
  out.push_back(static_cast<char>(v >> 8));
}

class Reader {
 public:
  Reader(std::string bytes, const std::filesystem::path& path) : bytes_(std::move(bytes)), path_(path) {}

  const char* take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw Error(ErrorCode::parse, "truncated raster file " + path_.string());
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() {
    const auto* p = reinterpret_cast<const unsigned char*>(take(4));
    return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24;
  }
  std::uint16_t u16() {
    const auto* p = reinterpret_cast<const unsigned char*>(take(2));
    return static_cast<std::uint16_t>(p[0] | p[1] << 8);
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string bytes_;
  std::filesystem::path path_;
  std::size_t pos_ = 0;
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::size_t Raster::element_count() const {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         [](std::size_t a, std::uint32_t d) { return a * d; });
}

void write_raster(const std::filesystem::path& path, const Raster& raster) {
  const std::size_t n = raster.element_count();
  const std::size_t payload =
      raster.type() == RasterType::f32 ? std::get<0>(raster.data).size() : std::get<1>(raster.data).size();
  if (payload != n) throw Error(ErrorCode::shape_mismatch, "raster payload does not match its dims");

  std::string out(kMagic, sizeof kMagic);
  put_u32(out, static_cast<std::uint32_t>(raster.type()));
  put_u32(out, static_cast<std::uint32_t>(raster.dims.size()));
  for (auto d : raster.dims) put_u32(out, d);
  if (raster.type() == RasterType::f32) {
    for (float v : std::get<0>(raster.data)) put_u32(out, std::bit_cast<std::uint32_t>(v));
  } else {
    for (auto v : std::get<1>(raster.data)) put_u16(out, v);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::io, "cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorCode::io, "write failed for " + path.string());
}

Raster read_raster(const std::filesystem::path& path) {
  Reader in(slurp(path), path);
  if (std::memcmp(in.take(sizeof kMagic), kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorCode::parse, path.string() + " is not an HTSSRAST file");
  }
  const std::uint32_t type = in.u32();
  const std::uint32_t rank = in.u32();
  if (rank == 0 || rank > kMaxRank) throw Error(ErrorCode::parse, "bad raster rank in " + path.string());
  Raster r;
  for (std::uint32_t i = 0; i < rank; ++i) r.dims.push_back(in.u32());
  const std::size_t n = r.element_count();
  if (type == static_cast<std::uint32_t>(RasterType::f32)) {
    std::vector<float> v(n);
    for (auto& x : v) x = std::bit_cast<float>(in.u32());
    r.data = std::move(v);
  } else if (type == static_cast<std::uint32_t>(RasterType::u16)) {
    std::vector<std::uint16_t> v(n);
    for (auto& x : v) x = in.u16();
    r.data = std::move(v);
  } else {
    throw Error(ErrorCode::parse, "unknown raster dtype in " + path.string());
  }
  if (!in.done()) throw Error(ErrorCode::parse, "trailing bytes in " + path.string());
  return r;
}

void write_field(const std::filesystem::path& path, const PixelField& field) {
  Raster r;
  r.dims = {static_cast<std::uint32_t>(field.height), static_cast<std::uint32_t>(field.width),
            static_cast<std::uint32_t>(field.depth)};
  std::vector<float> v(field.values.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(field.values[i]);
  r.data = std::move(v);
  write_raster(path, r);
}

PixelField read_field(const std::filesystem::path& path) {
  const Raster r = read_raster(path);
  if (r.type() != RasterType::f32 || (r.dims.size() != 3 && r.dims.size() != 2)) {
    throw Error(ErrorCode::parse, path.string() + " is not an f32 H x W (x D) raster");
  }
  const int depth = r.dims.size() == 3 ? static_cast<int>(r.dims[2]) : 1;
  PixelField f(static_cast<int>(r.dims[0]), static_cast<int>(r.dims[1]), depth);
  const auto& src = std::get<0>(r.data);
  for (std::size_t i = 0; i < src.size(); ++i) f.values[i] = src[i];
  return f;
}

void write_label(const std::filesystem::path& path, const StrongLabel& label) {
  if (label.class_ids.size() != static_cast<std::size_t>(label.height) * label.width) {
    throw Error(ErrorCode::shape_mismatch, "label size does not match its dimensions");
  }
  Raster r;
  r.dims = {static_cast<std::uint32_t>(label.height), static_cast<std::uint32_t>(label.width)};
  r.data = label.class_ids;
  write_raster(path, r);
}

StrongLabel read_label(const std::filesystem::path& path) {
  if (path.extension() == ".txt") return read_label_text(path);
  Raster r = read_raster(path);
  if (r.type() != RasterType::u16 || r.dims.size() != 2) {
    throw Error(ErrorCode::parse, path.string() + " is not a u16 H x W label raster");
  }
  return {static_cast<int>(r.dims[0]), static_cast<int>(r.dims[1]), std::move(std::get<1>(r.data))};
}

StrongLabel read_label_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  StrongLabel label;
  if (!(in >> label.height >> label.width) || label.height < 1 || label.width < 1) {
    throw Error(ErrorCode::parse, path.string() + ": expected 'height width' header");
  }
  label.class_ids.reserve(static_cast<std::size_t>(label.height) * label.width);
  for (int i = 0; i < label.height * label.width; ++i) {
    long v = 0;
    if (!(in >> v) || v < 0 || v > 65535) throw Error(ErrorCode::parse, path.string() + ": bad or missing class id");
    label.class_ids.push_back(static_cast<std::uint16_t>(v));
  }
  std::string rest;
  if (in >> rest) throw Error(ErrorCode::parse, path.string() + ": trailing data");
  return label;
}

}  // namespace htss
