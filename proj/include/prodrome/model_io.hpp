#pragma once

// Model file layout:
//   "NHEP-AE v1\n"
//   u64 d_in, u64 d_h                       (little-endian)
//   tensors in ModelParams::for_each_tensor order, each row-major,
//   little-endian IEEE-754 binary64.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "prodrome/autoencoder.hpp"
#include "prodrome/error.hpp"

namespace prodrome {

inline constexpr std::string_view kModelMagic = "NHEP-AE v";
inline constexpr std::string_view kModelVersion = "1";

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b, 8);
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) fail(ErrorKind::data, "truncated model file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }
inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

}  // namespace detail

inline void write_model(std::ostream& os, const ModelParams& p) {
  os << kModelMagic << kModelVersion << '\n';
  detail::put_u64(os, p.d_in);
  detail::put_u64(os, p.d_h);
  p.for_each_tensor([&](std::string_view, const auto& t) {
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) detail::put_f64(os, t(r, c));
  });
  if (!os) fail(ErrorKind::data, "failed writing model");
}

inline ModelParams read_model(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.rfind(kModelMagic, 0) != 0)
    fail(ErrorKind::incompatible, "incompatible model");
  if (std::string_view(header).substr(kModelMagic.size()) != kModelVersion)
    fail(ErrorKind::incompatible, "incompatible model");
  const auto d_in = detail::get_u64(is);
  const auto d_h = detail::get_u64(is);
  if (d_in < 1 || d_h < 1 || d_in > (1u << 20) || d_h > (1u << 20))
    fail(ErrorKind::data, "corrupt model dimensions");
  ModelParams p = ModelParams::zeros(d_in, d_h);
  p.for_each_tensor([&](std::string_view, auto& t) {
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = detail::get_f64(is);
  });
  if (!p.all_finite()) fail(ErrorKind::data, "model contains non-finite weights");
  return p;
}

inline void save_model(const std::string& path, const ModelParams& p) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::data, "cannot open " + path);
  write_model(os, p);
}

inline ModelParams load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::data, "cannot open " + path);
  return read_model(is);
}

}  // namespace prodrome
