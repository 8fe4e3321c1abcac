#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "unroll/ensemble.hpp"
#include "unroll/image.hpp"

namespace unroll {

struct ConvLayer {
  int out_channels = 0;
  int in_channels = 0;
  int kernel_h = 3;
  int kernel_w = 3;
  std::vector<float> kernel;  // (out, in, kh, kw) row-major
  std::vector<float> bias;    // out
};

// Parameters of the 8-layer 3x3 merging network. Input channel p * C + c carries
// channel c of the proposal for augmentation id p.
struct MergeWeights {
  static constexpr int layer_count = 8;
  std::vector<ConvLayer> layers;

  int input_channels() const noexcept { return layers.empty() ? 0 : layers.front().in_channels; }
  int output_channels() const noexcept { return layers.empty() ? 0 : layers.back().out_channels; }

  // Throws FormatError (with the layer index) on a broken channel chain, non-3x3
  // kernels, wrong parameter counts or non-finite values.
  void validate() const;
};

MergeWeights zero_weights(int channels, int hidden = 64);

// MRGN interchange format, little-endian: "MRGN", u32 version (1), u32 layer count, then per
// layer u32 out, in, kh, kw, float kernel[out*in*kh*kw], float bias[out].
std::vector<std::uint8_t> encode_weights(const MergeWeights& weights);
MergeWeights decode_weights(std::span<const std::uint8_t> bytes);
MergeWeights load_weights(const std::filesystem::path& path);
void save_weights(const MergeWeights& weights, const std::filesystem::path& path);

// Residual merger: output = clamp(mean + net(concat(proposals)), 0, 1). Convolutions are
// zero-padded to keep the frame size; hidden layers use ReLU, the last layer is linear
// unless the library was built with the ReLU-head option.
class MergeNet {
 public:
  explicit MergeNet(MergeWeights weights);

  const MergeWeights& weights() const noexcept { return weights_; }
  static bool relu_head() noexcept;

  Image residual(std::span<const Image> proposals) const;
  Image merge(std::span<const Image> proposals, const Image& mean) const;
  Image merge(const ProposalSet& set) const;

 private:
  MergeWeights weights_;
  std::vector<std::vector<float>> packed_;  // per layer: [ky][kx][in][out]
};

// Mean fallback when weights is empty, the network otherwise.
Image merge(const ProposalSet& set, const MergeWeights* weights);

}  // namespace unroll
