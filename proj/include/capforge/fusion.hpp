#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace capforge {

/// F frames x T tokens x D dims, row-major (frame, token, dim).
class FrameTokenBlock {
 public:
  /// Throws std::invalid_argument on a zero extent, a size mismatch or a
  /// non-finite value.
  FrameTokenBlock(std::size_t frames, std::size_t tokens_per_frame, std::size_t dim, std::vector<double> values);

  std::size_t frames() const { return frames_; }
  std::size_t tokens_per_frame() const { return tokens_per_frame_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> values() const { return values_; }

  double at(std::size_t frame, std::size_t token, std::size_t d) const {
    return values_[(frame * tokens_per_frame_ + token) * dim_ + d];
  }
  /// The T*D values of one frame.
  std::span<const double> frame(std::size_t f) const {
    return std::span<const double>(values_).subspan(f * tokens_per_frame_ * dim_, tokens_per_frame_ * dim_);
  }

  friend bool operator==(const FrameTokenBlock&, const FrameTokenBlock&) = default;

 private:
  std::size_t frames_;
  std::size_t tokens_per_frame_;
  std::size_t dim_;
  std::vector<double> values_;
};

enum class FusionMode { kAverage, kConcat };

std::string_view to_string(FusionMode mode);
FusionMode parse_fusion_mode(std::string_view name);

/// L x D fused token sequence.
struct FusedTokens {
  std::size_t length = 0;
  std::size_t dim = 0;
  std::vector<double> values;
  FusionMode mode = FusionMode::kConcat;

  std::span<const double> row(std::size_t i) const { return std::span<const double>(values).subspan(i * dim, dim); }
};

/// Patch-grid token count (height/patch) * (width/patch). No classifier
/// token. Throws std::invalid_argument unless patch > 0 and divides both sides.
std::size_t visual_token_count(std::size_t height, std::size_t width, std::size_t patch);

/// Frames laid end to end in temporal order: L = F * T, values copied verbatim.
FusedTokens fuse_concat(const FrameTokenBlock& block);

/// Unweighted mean over the frame axis: L = T. Each position is summed in
/// sorted order with compensation, so the result does not depend on frame
/// order.
FusedTokens fuse_average(const FrameTokenBlock& block);

/// Inverse of fuse_concat: cuts the sequence into frames of T tokens.
FrameTokenBlock split_concat(const FusedTokens& fused, std::size_t tokens_per_frame);

/// Binary tensor file: three little-endian int64 (F, T, D) followed by
/// F*T*D little-endian float32 values, row-major.
FrameTokenBlock read_tensor_file(const std::filesystem::path& path);
void write_tensor_file(const std::filesystem::path& path, const FrameTokenBlock& block);
/// Fused output is written as a single-frame block (F = 1, T = L).
void write_tensor_file(const std::filesystem::path& path, const FusedTokens& fused);

std::vector<std::uint8_t> encode_tensor(std::size_t frames, std::size_t tokens, std::size_t dim, std::span<const double> values);
FrameTokenBlock decode_tensor(std::span<const std::uint8_t> bytes);

}  // namespace capforge
