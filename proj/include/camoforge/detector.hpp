#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "camoforge/image.hpp"

namespace camoforge {

// Objectness scorer:
//   conv1 3->8 (3x3, stride 2, pad 1) -> ReLU
//   conv2 8->16 (3x3, stride 2, pad 1) -> ReLU
//   global average pool -> linear 16->1 -> sigmoid
// Parameters live in one flat vector in declaration order.
class DetectorNet {
 public:
  static constexpr int kC0 = 3, kC1 = 8, kC2 = 16, kK = 3;
  static constexpr std::size_t kConv1W = 0;
  static constexpr std::size_t kConv1B = kConv1W + kC1 * kC0 * kK * kK;
  static constexpr std::size_t kConv2W = kConv1B + kC1;
  static constexpr std::size_t kConv2B = kConv2W + kC2 * kC1 * kK * kK;
  static constexpr std::size_t kHeadW = kConv2B + kC2;
  static constexpr std::size_t kHeadB = kHeadW + kC2;
  static constexpr std::size_t kParamCount = kHeadB + 1;
  static_assert(kParamCount == 1409);

  explicit DetectorNet(int input_size = 64);

  int input_size() const { return input_size_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  bool operator==(const DetectorNet&) const = default;

 private:
  int input_size_;
  std::vector<double> params_;
};

// Intermediate activations kept for the backward pass.
struct DetectorTrace {
  int s0 = 0, s1 = 0, s2 = 0;
  std::vector<double> input;   // CHW
  std::vector<double> z1, a1;  // C1 x s1 x s1
  std::vector<double> z2, a2;  // C2 x s2 x s2
  std::vector<double> pooled;  // C2
  double logit = 0.0;
};

DetectorNet init_detector(std::uint64_t seed, int input_size = 64);

// Raw logit of the final linear layer. `image` must be input_size x input_size x 3.
double detector_logit(const DetectorNet& net, const Image& image, DetectorTrace* trace = nullptr);

// Back-propagates d(loss)/d(logit). Either output may be null.
// `param_grad` is accumulated into (size kParamCount).
void detector_backward(const DetectorNet& net, const DetectorTrace& trace, double dlogit,
                       std::span<double> param_grad, Image* input_grad);

double sigmoid(double x);

// L_obj: sigmoid of the logit, kept strictly inside (0, 1).
double objectness(const DetectorNet& net, const Image& image);
Image objectness_grad(const DetectorNet& net, const Image& image);
bool detect(const DetectorNet& net, const Image& image, double threshold = 0.5);

// Brings a composed image to the detector resolution by average pooling.
// Accepts the exact input size or an integer multiple of it.
Image detector_input(const DetectorNet& net, const Image& image);
int pooling_factor(const DetectorNet& net, const Image& image);

struct LabeledImage {
  Image pixels;  // detector resolution
  bool object_present = false;
};

struct DetectorTrainOptions {
  int epochs = 30;
  double lr = 0.01;
  int batch_size = 8;
  std::uint64_t seed = 0;
};

struct DetectorTrainResult {
  DetectorNet net;
  double train_accuracy = 0.0;
  std::vector<double> epoch_loss;
  std::string warning;  // non-empty when accuracy < 0.95
};

// Mean binary cross-entropy minimized with Adam over shuffled mini-batches.
DetectorTrainResult train_detector(const DetectorNet& net, const std::vector<LabeledImage>& data,
                                   const DetectorTrainOptions& options);

double detector_accuracy(const DetectorNet& net, const std::vector<LabeledImage>& data,
                         double threshold = 0.5);

// 16-byte header ("CFDN", version, input size, parameter count; u32 LE each)
// followed by the parameters as little-endian f64.
std::string encode_detector(const DetectorNet& net);
DetectorNet decode_detector(const std::string& bytes);
void save_detector(const std::filesystem::path& path, const DetectorNet& net);
DetectorNet load_detector(const std::filesystem::path& path);

}  // namespace camoforge
