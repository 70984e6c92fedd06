#include "capforge/fusion.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <stdexcept>
#include <string>

#include "capforge/errors.hpp"

namespace capforge {

namespace {

constexpr std::size_t kHeaderBytes = 3 * sizeof(std::int64_t);

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[offset + static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[offset + static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

}  // namespace

FrameTokenBlock::FrameTokenBlock(std::size_t frames, std::size_t tokens_per_frame, std::size_t dim, std::vector<double> values)
    : frames_(frames), tokens_per_frame_(tokens_per_frame), dim_(dim), values_(std::move(values)) {
  if (frames_ == 0 || tokens_per_frame_ == 0 || dim_ == 0) throw std::invalid_argument("FrameTokenBlock: F, T and D must be positive");
  if (values_.size() != frames_ * tokens_per_frame_ * dim_)
    throw std::invalid_argument("FrameTokenBlock: expected " + std::to_string(frames_ * tokens_per_frame_ * dim_) + " values, got " +
                                std::to_string(values_.size()));
  if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); }))
    throw std::invalid_argument("FrameTokenBlock: non-finite value");
}

std::string_view to_string(FusionMode mode) { return mode == FusionMode::kAverage ? "average" : "concat"; }

FusionMode parse_fusion_mode(std::string_view name) {
  if (name == "average" || name == "avg" || name == "mean") return FusionMode::kAverage;
  if (name == "concat" || name == "concatenate") return FusionMode::kConcat;
  throw std::invalid_argument("unknown fusion mode '" + std::string(name) + "'");
}

std::size_t visual_token_count(std::size_t height, std::size_t width, std::size_t patch) {
  if (patch == 0) throw std::invalid_argument("visual_token_count: patch size must be positive");
  if (height == 0 || width == 0) throw std::invalid_argument("visual_token_count: image dimensions must be positive");
  if (height % patch != 0 || width % patch != 0)
    throw std::invalid_argument("visual_token_count: " + std::to_string(height) + "x" + std::to_string(width) +
                                " is not divisible by patch " + std::to_string(patch));
  return (height / patch) * (width / patch);
}

FusedTokens fuse_concat(const FrameTokenBlock& block) {
  FusedTokens out;
  out.mode = FusionMode::kConcat;
  out.length = block.frames() * block.tokens_per_frame();
  out.dim = block.dim();
  out.values.assign(block.values().begin(), block.values().end());
  return out;
}

FusedTokens fuse_average(const FrameTokenBlock& block) {
  FusedTokens out;
  out.mode = FusionMode::kAverage;
  out.length = block.tokens_per_frame();
  out.dim = block.dim();
  const std::size_t per_frame = block.tokens_per_frame() * block.dim();
  out.values.resize(per_frame);
  std::vector<double> column(block.frames());
  for (std::size_t p = 0; p < per_frame; ++p) {
    for (std::size_t f = 0; f < block.frames(); ++f) column[f] = block.values()[f * per_frame + p];
    std::sort(column.begin(), column.end());
    // Neumaier summation
    double sum = 0.0, comp = 0.0;
    for (double v : column) {
      const double t = sum + v;
      comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
      sum = t;
    }
    out.values[p] = (sum + comp) / static_cast<double>(block.frames());
  }
  return out;
}

FrameTokenBlock split_concat(const FusedTokens& fused, std::size_t tokens_per_frame) {
  if (tokens_per_frame == 0 || fused.length % tokens_per_frame != 0)
    throw std::invalid_argument("split_concat: length " + std::to_string(fused.length) + " is not a multiple of " +
                                std::to_string(tokens_per_frame));
  return FrameTokenBlock(fused.length / tokens_per_frame, tokens_per_frame, fused.dim, fused.values);
}

std::vector<std::uint8_t> encode_tensor(std::size_t frames, std::size_t tokens, std::size_t dim, std::span<const double> values) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + values.size() * 4);
  put_u64(out, frames);
  put_u64(out, tokens);
  put_u64(out, dim);
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return out;
}

FrameTokenBlock decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw InputError("tensor file: truncated header");
  const auto f = static_cast<std::int64_t>(get_u64(bytes, 0));
  const auto t = static_cast<std::int64_t>(get_u64(bytes, 8));
  const auto d = static_cast<std::int64_t>(get_u64(bytes, 16));
  if (f <= 0 || t <= 0 || d <= 0) throw InputError("tensor file: F, T and D must be positive");
  const auto limit = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max() / 4);
  const auto uf = static_cast<std::uint64_t>(f), ut = static_cast<std::uint64_t>(t), ud = static_cast<std::uint64_t>(d);
  if (uf > limit / ut || uf * ut > limit / ud) throw InputError("tensor file: dimensions overflow");
  const std::uint64_t count = uf * ut * ud;
  if (bytes.size() - kHeaderBytes != count * 4)
    throw InputError("tensor file: expected " + std::to_string(count * 4) + " payload bytes, found " +
                     std::to_string(bytes.size() - kHeaderBytes));
  std::vector<double> values(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = std::bit_cast<float>(get_u32(bytes, kHeaderBytes + 4 * i));
  try {
    return FrameTokenBlock(static_cast<std::size_t>(f), static_cast<std::size_t>(t), static_cast<std::size_t>(d), std::move(values));
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("tensor file: ") + e.what());
  }
}

FrameTokenBlock read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_tensor(bytes);
}

namespace {

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

void write_tensor_file(const std::filesystem::path& path, const FrameTokenBlock& block) {
  write_bytes(path, encode_tensor(block.frames(), block.tokens_per_frame(), block.dim(), block.values()));
}

void write_tensor_file(const std::filesystem::path& path, const FusedTokens& fused) {
  write_bytes(path, encode_tensor(1, fused.length, fused.dim, fused.values));
}

}  // namespace capforge
