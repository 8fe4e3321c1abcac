#include "unroll/merge_net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "unroll/errors.hpp"
#include "unroll/parallel.hpp"

namespace unroll {

namespace {

constexpr std::uint32_t kVersion = 1;
constexpr char kMagic[4] = {'M', 'R', 'G', 'N'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32(int layer) {
    need(4, layer);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32(int layer) { return std::bit_cast<float>(u32(layer)); }
  void need(std::size_t n, int layer) const {
    if (bytes_.size() - pos_ < n) throw FormatError("weight file truncated", layer);
  }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  std::span<const std::uint8_t> take(std::size_t n) {
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void MergeWeights::validate() const {
  if (static_cast<int>(layers.size()) != layer_count) {
    throw FormatError("expected " + std::to_string(layer_count) + " layers, found " + std::to_string(layers.size()));
  }
  for (int l = 0; l < layer_count; ++l) {
    const ConvLayer& c = layers[l];
    if (c.kernel_h != 3 || c.kernel_w != 3) throw FormatError("kernel must be 3x3", l);
    if (c.out_channels < 1 || c.in_channels < 1) throw FormatError("empty layer", l);
    if (l > 0 && c.in_channels != layers[l - 1].out_channels) {
      throw FormatError("input channels do not match the previous layer's output", l);
    }
    if (c.kernel.size() != static_cast<std::size_t>(c.out_channels) * c.in_channels * 9 ||
        c.bias.size() != static_cast<std::size_t>(c.out_channels)) {
      throw FormatError("parameter count does not match the declared shape", l);
    }
    const auto finite = [](float v) { return std::isfinite(v); };
    if (!std::all_of(c.kernel.begin(), c.kernel.end(), finite) || !std::all_of(c.bias.begin(), c.bias.end(), finite)) {
      throw FormatError("non-finite parameter", l);
    }
  }
  if (input_channels() % 16 != 0 || input_channels() / 16 != output_channels()) {
    throw FormatError("channel plan must be 16 * C in, C out");
  }
}

MergeWeights zero_weights(int channels, int hidden) {
  if (channels < 1 || hidden < 1) throw InputError("channel counts must be positive");
  MergeWeights w;
  for (int l = 0; l < MergeWeights::layer_count; ++l) {
    ConvLayer c;
    c.in_channels = l == 0 ? 16 * channels : hidden;
    c.out_channels = l == MergeWeights::layer_count - 1 ? channels : hidden;
    c.kernel.assign(static_cast<std::size_t>(c.out_channels) * c.in_channels * 9, 0.0f);
    c.bias.assign(c.out_channels, 0.0f);
    w.layers.push_back(std::move(c));
  }
  return w;
}

std::vector<std::uint8_t> encode_weights(const MergeWeights& weights) {
  weights.validate();
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(weights.layers.size()));
  for (const ConvLayer& c : weights.layers) {
    put_u32(out, c.out_channels);
    put_u32(out, c.in_channels);
    put_u32(out, c.kernel_h);
    put_u32(out, c.kernel_w);
    for (float v : c.kernel) put_f32(out, v);
    for (float v : c.bias) put_f32(out, v);
  }
  return out;
}

MergeWeights decode_weights(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  in.need(4, -1);
  const auto magic = in.take(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw FormatError("bad magic, not an MRGN file");
  const std::uint32_t version = in.u32(-1);
  if (version != kVersion) throw FormatError("unsupported MRGN version " + std::to_string(version));
  const std::uint32_t count = in.u32(-1);
  if (count != MergeWeights::layer_count) {
    throw FormatError("expected " + std::to_string(MergeWeights::layer_count) + " layers, header says " +
                      std::to_string(count));
  }
  MergeWeights w;
  for (int l = 0; l < static_cast<int>(count); ++l) {
    ConvLayer c;
    c.out_channels = static_cast<int>(in.u32(l));
    c.in_channels = static_cast<int>(in.u32(l));
    c.kernel_h = static_cast<int>(in.u32(l));
    c.kernel_w = static_cast<int>(in.u32(l));
    if (c.kernel_h != 3 || c.kernel_w != 3) throw FormatError("kernel must be 3x3", l);
    if (c.out_channels < 1 || c.in_channels < 1 || c.out_channels > 4096 || c.in_channels > 4096) {
      throw FormatError("implausible channel count", l);
    }
    const std::size_t nk = static_cast<std::size_t>(c.out_channels) * c.in_channels * 9;
    in.need(4 * (nk + c.out_channels), l);
    c.kernel.resize(nk);
    for (float& v : c.kernel) v = in.f32(l);
    c.bias.resize(c.out_channels);
    for (float& v : c.bias) v = in.f32(l);
    w.layers.push_back(std::move(c));
  }
  if (in.remaining() != 0) throw FormatError("trailing bytes after the last layer");
  w.validate();
  return w;
}

MergeWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ResourceError("cannot open weight file " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_weights(bytes);
}

void save_weights(const MergeWeights& weights, const std::filesystem::path& path) {
  const auto bytes = encode_weights(weights);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ResourceError("cannot write weight file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ResourceError("failed writing " + path.string());
}

MergeNet::MergeNet(MergeWeights weights) : weights_(std::move(weights)) {
  weights_.validate();
  for (const ConvLayer& c : weights_.layers) {
    std::vector<float> p(c.kernel.size());
    for (int co = 0; co < c.out_channels; ++co) {
      for (int ci = 0; ci < c.in_channels; ++ci) {
        for (int k = 0; k < 9; ++k) {
          p[(static_cast<std::size_t>(k) * c.in_channels + ci) * c.out_channels + co] =
              c.kernel[(static_cast<std::size_t>(co) * c.in_channels + ci) * 9 + k];
        }
      }
    }
    packed_.push_back(std::move(p));
  }
}

bool MergeNet::relu_head() noexcept {
#ifdef UNROLL_MERGE_RELU_HEAD
  return true;
#else
  return false;
#endif
}

Image MergeNet::residual(std::span<const Image> proposals) const {
  if (proposals.size() != 16) throw InputError("merge expects 16 proposals");
  for (const Image& p : proposals) require_same_shape(proposals.front(), p, "proposals");
  const int w = proposals.front().width();
  const int h = proposals.front().height();
  const int ch = proposals.front().channels();
  if (16 * ch != weights_.input_channels()) {
    throw InputError("weights expect " + std::to_string(weights_.input_channels()) + " input channels, proposals carry " +
                     std::to_string(16 * ch));
  }
  const int pw = w + 2;
  const int ph = h + 2;

  // Zero-bordered HWC activations.
  int cin = 16 * ch;
  std::vector<float> act(static_cast<std::size_t>(pw) * ph * cin, 0.0f);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float* dst = &act[(static_cast<std::size_t>(y + 1) * pw + x + 1) * cin];
      for (int p = 0; p < 16; ++p) {
        for (int c = 0; c < ch; ++c) dst[p * ch + c] = proposals[p].at(x, y, c);
      }
    }
  }

  std::vector<float> next;
  for (int l = 0; l < MergeWeights::layer_count; ++l) {
    const ConvLayer& layer = weights_.layers[l];
    const int cout = layer.out_channels;
    const float* wk = packed_[l].data();
    const bool relu = l + 1 < MergeWeights::layer_count || relu_head();
    next.assign(static_cast<std::size_t>(pw) * ph * cout, 0.0f);
    parallel_for(h, [&](std::size_t row) {
      const int y = static_cast<int>(row);
      std::vector<float> acc(cout);
      for (int x = 0; x < w; ++x) {
        std::copy(layer.bias.begin(), layer.bias.end(), acc.begin());
        for (int ky = 0; ky < 3; ++ky) {
          for (int kx = 0; kx < 3; ++kx) {
            const float* in = &act[(static_cast<std::size_t>(y + ky) * pw + x + kx) * cin];
            const float* wp = wk + static_cast<std::size_t>(ky * 3 + kx) * cin * cout;
            for (int ci = 0; ci < cin; ++ci) {
              const float v = in[ci];
              if (v == 0.0f) continue;
              const float* wr = wp + static_cast<std::size_t>(ci) * cout;
              for (int co = 0; co < cout; ++co) acc[co] += v * wr[co];
            }
          }
        }
        float* out = &next[(static_cast<std::size_t>(y + 1) * pw + x + 1) * cout];
        for (int co = 0; co < cout; ++co) out[co] = relu ? std::max(acc[co], 0.0f) : acc[co];
      }
    });
    act.swap(next);
    cin = cout;
  }

  Image res(w, h, ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float* src = &act[(static_cast<std::size_t>(y + 1) * pw + x + 1) * ch];
      for (int c = 0; c < ch; ++c) res.at(x, y, c) = src[c];
    }
  }
  return res;
}

Image MergeNet::merge(std::span<const Image> proposals, const Image& mean) const {
  const Image res = residual(proposals);
  require_same_shape(res, mean, "merge mean");
  Image out = mean;
  auto o = out.pixels();
  const auto r = res.pixels();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::clamp(o[i] + r[i], 0.0f, 1.0f);
  return out;
}

Image MergeNet::merge(const ProposalSet& set) const { return merge(set.proposals, set.mean); }

Image merge(const ProposalSet& set, const MergeWeights* weights) {
  if (!weights) return clamp01(set.mean);
  return MergeNet(*weights).merge(set);
}

}  // namespace unroll
