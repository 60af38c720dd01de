#include "camoforge/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "camoforge/adam.hpp"
#include "camoforge/common.hpp"
#include "camoforge/io.hpp"

namespace camoforge {

DetectorNet::DetectorNet(int input_size)
    : input_size_(input_size), params_(kParamCount, 0.0) {
  if (input_size < 4) throw std::invalid_argument("detector input size must be >= 4");
}

namespace {

constexpr int kStride = 2;
constexpr int kPad = 1;
// Pixels are shifted to [-0.5, 0.5] before the first convolution.
constexpr double kInputCenter = 0.5;

int conv_out(int s) { return (s + 2 * kPad - DetectorNet::kK) / kStride + 1; }

// Output rows/columns [lo, hi) whose tap at offset k lands inside [0, s).
void tap_range(int k, int s, int so, int& lo, int& hi) {
  lo = 0;
  while (lo < so && lo * kStride + k - kPad < 0) ++lo;
  hi = so;
  while (hi > lo && (hi - 1) * kStride + k - kPad >= s) --hi;
}

// 3x3 stride-2 convolution with zero padding, CHW layout. Each output sums
// its bias and then the taps in (input channel, ky, kx) order.
void conv_forward(const double* in, int cin, int s, const double* w, const double* b, int cout,
                  double* out, int so) {
  constexpr int K = DetectorNet::kK;
  const std::size_t plane_out = static_cast<std::size_t>(so) * so;
  for (int o = 0; o < cout; ++o) {
    double* dst = out + o * plane_out;
    std::fill(dst, dst + plane_out, b[o]);
    for (int i = 0; i < cin; ++i) {
      const double* wk = w + (o * cin + i) * K * K;
      const double* plane = in + static_cast<std::size_t>(i) * s * s;
      for (int ky = 0; ky < K; ++ky) {
        int y0, y1;
        tap_range(ky, s, so, y0, y1);
        for (int kx = 0; kx < K; ++kx) {
          int x0, x1;
          tap_range(kx, s, so, x0, x1);
          const double wv = wk[ky * K + kx];
          for (int oy = y0; oy < y1; ++oy) {
            const double* row = plane + static_cast<std::size_t>(oy * kStride + ky - kPad) * s + kx - kPad;
            double* orow = dst + static_cast<std::size_t>(oy) * so;
            for (int ox = x0; ox < x1; ++ox) orow[ox] += wv * row[ox * kStride];
          }
        }
      }
    }
  }
}

// Accumulates weight/bias gradients (when dw non-null) and input gradients
// (when din non-null) for conv_forward.
void conv_backward(const double* in, int cin, int s, const double* w, int cout, const double* dout,
                   int so, double* dw, double* db, double* din) {
  constexpr int K = DetectorNet::kK;
  const std::size_t plane_out = static_cast<std::size_t>(so) * so;
  for (int o = 0; o < cout; ++o) {
    const double* g = dout + o * plane_out;
    if (db) {
      for (std::size_t p = 0; p < plane_out; ++p) db[o] += g[p];
    }
    for (int i = 0; i < cin; ++i) {
      const std::size_t wbase = static_cast<std::size_t>(o * cin + i) * K * K;
      const std::size_t pbase = static_cast<std::size_t>(i) * s * s;
      for (int ky = 0; ky < K; ++ky) {
        int y0, y1;
        tap_range(ky, s, so, y0, y1);
        for (int kx = 0; kx < K; ++kx) {
          int x0, x1;
          tap_range(kx, s, so, x0, x1);
          const double wv = w[wbase + ky * K + kx];
          double dwv = 0.0;
          for (int oy = y0; oy < y1; ++oy) {
            const std::size_t rbase = pbase + static_cast<std::size_t>(oy * kStride + ky - kPad) * s + kx - kPad;
            const double* grow = g + static_cast<std::size_t>(oy) * so;
            if (dw) {
              const double* row = in + rbase;
              for (int ox = x0; ox < x1; ++ox) dwv += grow[ox] * row[ox * kStride];
            }
            if (din) {
              double* drow = din + rbase;
              for (int ox = x0; ox < x1; ++ox) drow[ox * kStride] += grow[ox] * wv;
            }
          }
          if (dw) dw[wbase + ky * K + kx] += dwv;
        }
      }
    }
  }
}

void check_input(const DetectorNet& net, const Image& image) {
  if (image.height != net.input_size() || image.width != net.input_size() || image.channels != 3) {
    throw std::invalid_argument("detector input size mismatch: expected " +
                                std::to_string(net.input_size()) + "x" +
                                std::to_string(net.input_size()) + "x3");
  }
}

}  // namespace

DetectorNet init_detector(std::uint64_t seed, int input_size) {
  DetectorNet net(input_size);
  Rng rng(seed);
  auto fill = [&](std::size_t begin, std::size_t end, double fan_in, double fan_out) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (std::size_t i = begin; i < end; ++i) net.params()[i] = rng.uniform(-a, a);
  };
  constexpr double kk = DetectorNet::kK * DetectorNet::kK;
  fill(DetectorNet::kConv1W, DetectorNet::kConv1B, DetectorNet::kC0 * kk, DetectorNet::kC1 * kk);
  fill(DetectorNet::kConv2W, DetectorNet::kConv2B, DetectorNet::kC1 * kk, DetectorNet::kC2 * kk);
  fill(DetectorNet::kHeadW, DetectorNet::kHeadB, DetectorNet::kC2, 1);
  return net;
}

double detector_logit(const DetectorNet& net, const Image& image, DetectorTrace* trace) {
  check_input(net, image);
  DetectorTrace local;
  DetectorTrace& t = trace ? *trace : local;
  constexpr int C0 = DetectorNet::kC0, C1 = DetectorNet::kC1, C2 = DetectorNet::kC2;
  t.s0 = image.height;
  t.s1 = conv_out(t.s0);
  t.s2 = conv_out(t.s1);
  const std::size_t n0 = static_cast<std::size_t>(t.s0) * t.s0;
  const std::size_t n1 = static_cast<std::size_t>(t.s1) * t.s1;
  const std::size_t n2 = static_cast<std::size_t>(t.s2) * t.s2;

  t.input.resize(C0 * n0);
  for (std::size_t p = 0; p < n0; ++p)
    for (int c = 0; c < C0; ++c) t.input[c * n0 + p] = image.data[p * C0 + c] - kInputCenter;

  const auto w = net.params();
  t.z1.resize(C1 * n1);
  conv_forward(t.input.data(), C0, t.s0, &w[DetectorNet::kConv1W], &w[DetectorNet::kConv1B], C1,
               t.z1.data(), t.s1);
  t.a1.resize(t.z1.size());
  for (std::size_t i = 0; i < t.z1.size(); ++i) t.a1[i] = std::max(0.0, t.z1[i]);

  t.z2.resize(C2 * n2);
  conv_forward(t.a1.data(), C1, t.s1, &w[DetectorNet::kConv2W], &w[DetectorNet::kConv2B], C2,
               t.z2.data(), t.s2);
  t.a2.resize(t.z2.size());
  for (std::size_t i = 0; i < t.z2.size(); ++i) t.a2[i] = std::max(0.0, t.z2[i]);

  t.pooled.assign(C2, 0.0);
  for (int c = 0; c < C2; ++c) {
    double acc = 0.0;
    for (std::size_t p = 0; p < n2; ++p) acc += t.a2[c * n2 + p];
    t.pooled[c] = acc / static_cast<double>(n2);
  }
  double logit = w[DetectorNet::kHeadB];
  for (int c = 0; c < C2; ++c) logit += w[DetectorNet::kHeadW + c] * t.pooled[c];
  t.logit = logit;
  return logit;
}

void detector_backward(const DetectorNet& net, const DetectorTrace& t, double dlogit,
                       std::span<double> param_grad, Image* input_grad) {
  constexpr int C0 = DetectorNet::kC0, C1 = DetectorNet::kC1, C2 = DetectorNet::kC2;
  const bool want_params = !param_grad.empty();
  if (want_params && param_grad.size() != DetectorNet::kParamCount) {
    throw std::invalid_argument("detector_backward: parameter gradient size mismatch");
  }
  const auto w = net.params();
  const std::size_t n0 = static_cast<std::size_t>(t.s0) * t.s0;
  const std::size_t n1 = static_cast<std::size_t>(t.s1) * t.s1;
  const std::size_t n2 = static_cast<std::size_t>(t.s2) * t.s2;

  if (want_params) {
    param_grad[DetectorNet::kHeadB] += dlogit;
    for (int c = 0; c < C2; ++c) param_grad[DetectorNet::kHeadW + c] += dlogit * t.pooled[c];
  }
  std::vector<double> dz2(C2 * n2);
  for (int c = 0; c < C2; ++c) {
    const double g = dlogit * w[DetectorNet::kHeadW + c] / static_cast<double>(n2);
    for (std::size_t p = 0; p < n2; ++p) dz2[c * n2 + p] = t.z2[c * n2 + p] > 0.0 ? g : 0.0;
  }
  std::vector<double> da1(C1 * n1, 0.0);
  conv_backward(t.a1.data(), C1, t.s1, &w[DetectorNet::kConv2W], C2, dz2.data(), t.s2,
                want_params ? &param_grad[DetectorNet::kConv2W] : nullptr,
                want_params ? &param_grad[DetectorNet::kConv2B] : nullptr, da1.data());
  for (std::size_t i = 0; i < da1.size(); ++i) {
    if (!(t.z1[i] > 0.0)) da1[i] = 0.0;
  }
  std::vector<double> din;
  if (input_grad) din.assign(C0 * n0, 0.0);
  conv_backward(t.input.data(), C0, t.s0, &w[DetectorNet::kConv1W], C1, da1.data(), t.s1,
                want_params ? &param_grad[DetectorNet::kConv1W] : nullptr,
                want_params ? &param_grad[DetectorNet::kConv1B] : nullptr,
                input_grad ? din.data() : nullptr);
  if (input_grad) {
    *input_grad = Image(t.s0, t.s0, C0);
    for (std::size_t p = 0; p < n0; ++p)
      for (int c = 0; c < C0; ++c) input_grad->data[p * C0 + c] = din[c * n0 + p];
  }
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

constexpr double kProbFloor = 0x1.0p-1000;
constexpr double kProbCeil = 1.0 - 0x1.0p-53;

}  // namespace

double objectness(const DetectorNet& net, const Image& image) {
  return std::clamp(sigmoid(detector_logit(net, image)), kProbFloor, kProbCeil);
}

Image objectness_grad(const DetectorNet& net, const Image& image) {
  DetectorTrace trace;
  const double s = sigmoid(detector_logit(net, image, &trace));
  Image grad;
  detector_backward(net, trace, s * (1.0 - s), {}, &grad);
  return grad;
}

bool detect(const DetectorNet& net, const Image& image, double threshold) {
  return objectness(net, image) >= threshold;
}

int pooling_factor(const DetectorNet& net, const Image& image) {
  const int n = net.input_size();
  if (image.height != image.width || image.height % n != 0 || image.channels != 3) {
    throw std::invalid_argument("image size " + std::to_string(image.height) + "x" +
                                std::to_string(image.width) +
                                " is not a multiple of the detector input size " +
                                std::to_string(n));
  }
  return image.height / n;
}

Image detector_input(const DetectorNet& net, const Image& image) {
  return downsample(image, pooling_factor(net, image));
}

double detector_accuracy(const DetectorNet& net, const std::vector<LabeledImage>& data,
                         double threshold) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : data) {
    if (detect(net, s.pixels, threshold) == s.object_present) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

DetectorTrainResult train_detector(const DetectorNet& net, const std::vector<LabeledImage>& data,
                                   const DetectorTrainOptions& options) {
  const bool has_pos = std::any_of(data.begin(), data.end(), [](auto& s) { return s.object_present; });
  const bool has_neg = std::any_of(data.begin(), data.end(), [](auto& s) { return !s.object_present; });
  if (!has_pos || !has_neg) throw std::invalid_argument("train_detector: data needs both labels");
  if (options.epochs < 0 || options.batch_size < 1 || !(options.lr > 0)) {
    throw std::invalid_argument("train_detector: bad options");
  }

  DetectorTrainResult result{net, 0.0, {}, {}};
  DetectorNet& model = result.net;
  AdamState adam(DetectorNet::kParamCount);
  std::vector<double> grad(DetectorNet::kParamCount);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(options.seed, 7));
  DetectorTrace trace;

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const auto& sample = data[order[k]];
        const double z = detector_logit(model, sample.pixels, &trace);
        const double y = sample.object_present ? 1.0 : 0.0;
        // softplus(z) - y z, written to stay finite for large |z|.
        epoch_loss += std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
        detector_backward(model, trace, (sigmoid(z) - y) / static_cast<double>(end - start), grad,
                          nullptr);
      }
      adam_step(model.params(), grad, adam, options.lr);
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(data.size()));
  }
  result.train_accuracy = detector_accuracy(model, data);
  if (result.train_accuracy < 0.95) {
    result.warning = "train accuracy " + format_double(result.train_accuracy, 4) + " below 0.95";
  }
  return result;
}

namespace {

constexpr char kMagic[4] = {'C', 'F', 'D', 'N'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

std::uint32_t get_u32(const std::string& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + b])) << (8 * b);
  return v;
}

}  // namespace

std::string encode_detector(const DetectorNet& net) {
  std::string out(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(net.input_size()));
  put_u32(out, static_cast<std::uint32_t>(DetectorNet::kParamCount));
  for (double p : net.params()) {
    std::uint64_t bits;
    std::memcpy(&bits, &p, sizeof bits);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
  }
  return out;
}

DetectorNet decode_detector(const std::string& bytes) {
  if (bytes.size() < 16 || bytes.compare(0, 4, kMagic, 4) != 0) {
    throw std::runtime_error("not a detector weight file");
  }
  if (get_u32(bytes, 4) != kVersion) throw std::runtime_error("unsupported detector version");
  const auto input_size = static_cast<int>(get_u32(bytes, 8));
  const std::uint32_t count = get_u32(bytes, 12);
  if (count != DetectorNet::kParamCount || bytes.size() != 16 + 8 * std::size_t{count}) {
    throw std::runtime_error("detector weight file has wrong size");
  }
  DetectorNet net(input_size);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[16 + 8 * i + b])) << (8 * b);
    }
    std::memcpy(&net.params()[i], &bits, sizeof bits);
  }
  return net;
}

void save_detector(const std::filesystem::path& path, const DetectorNet& net) {
  write_file_atomic(path, encode_detector(net));
}

DetectorNet load_detector(const std::filesystem::path& path) {
  return decode_detector(read_file(path));
}

}  // namespace camoforge
