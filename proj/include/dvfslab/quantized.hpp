#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dvfslab/encoder.hpp"
#include "dvfslab/governor.hpp"
#include "dvfslab/qnet.hpp"

namespace dvfs {

// Fixed-point format: a real v in [-10, 10] is stored as round(v * 2^30 / 10).
inline constexpr std::int64_t kQuantOne = std::int64_t{1} << 30;  // represents 10.0
inline constexpr double kQuantRange = 10.0;
inline constexpr double kQuantScale = double(kQuantOne) / kQuantRange;

/// round(v * 2^30 / 10), half away from zero. Throws std::out_of_range when
/// |v| > 10.
std::int32_t quantize_value(double v);
double dequantize_value(std::int64_t q);

/// Round-half-away-from-zero of acc * 10 / 2^30: brings a product of two
/// quantized values back to the quantized scale.
std::int64_t rescale_product(std::int64_t acc);

struct QuantizedLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<std::int32_t> weights;  // outputs x inputs, row-major
  std::vector<std::int32_t> biases;

  bool operator==(const QuantizedLayer&) const = default;
};

/// Integer-only mirror of a QNet.
class QuantizedQNet {
 public:
  QuantizedQNet() = default;
  explicit QuantizedQNet(std::vector<QuantizedLayer> layers);

  const std::vector<QuantizedLayer>& layers() const { return layers_; }
  std::vector<std::size_t> sizes() const;
  std::size_t input_size() const { return layers_.empty() ? 0 : layers_.front().inputs; }
  std::size_t parameter_count() const;
  std::vector<std::int32_t> parameters() const;

  /// Per layer: 64-bit multiply-accumulate, rescale, add bias, integer ReLU on
  /// hidden layers. Hidden activations saturate to the int32 range.
  std::int64_t forward(std::span<const std::int32_t> input) const;

  bool operator==(const QuantizedQNet&) const = default;

 private:
  std::vector<QuantizedLayer> layers_;
};

/// Quantizes every parameter. Throws std::out_of_range naming the first
/// parameter outside [-10, 10].
QuantizedQNet quantize(const QNet& net);

std::vector<std::int32_t> quantize_vector(std::span<const double> values);

/// Integer Q value of (state, action): the action input is the quantized
/// normalized frequency `action_q[action_index]`.
std::int64_t int_forward(const QuantizedQNet& qnet, std::span<const std::int32_t> state_q, std::size_t action_index,
                         std::span<const std::int32_t> action_q);

/// Highest integer Q value; ties go to the lowest level.
std::size_t argmax_action_int(const QuantizedQNet& qnet, std::span<const std::int32_t> state_q,
                              std::span<const std::int32_t> action_q);

/// Quantized model file, little-endian:
///   "DVQN" | u16 version | u8 layout | u8 layer_count+1 | u32 sizes[...]
///   | u32 scale_num (2^30) | u32 scale_den (10) | u32 param_count | i32 params[...]
struct QuantizedModelFile {
  StateLayout layout = StateLayout::kCompact;
  QuantizedQNet net;
};

std::vector<std::uint8_t> encode_quantized_model(const QuantizedModelFile& model);
QuantizedModelFile decode_quantized_model(std::span<const std::uint8_t> bytes);
void save_quantized_model(const QuantizedModelFile& model, const std::string& path);
QuantizedModelFile load_quantized_model(const std::string& path);

/// Governor running the integer inference path on the temporal encoding.
class QuantizedRlGovernor final : public Governor {
 public:
  QuantizedRlGovernor(QuantizedQNet net, EncoderConfig encoder, StateLayout layout);

  std::string name() const override { return "rl_int"; }
  FreqLevel initial(const FrequencyTable& table) override;
  FreqLevel next(const Observation& obs, const FrequencyTable& table) override;
  void reset() override { state_ = EncodedState::zero(encoder_); }

  const EncodedState& state() const { return state_; }

 private:
  FreqLevel decide(const FrequencyTable& table);

  QuantizedQNet net_;
  EncoderConfig encoder_;
  StateLayout layout_;
  std::vector<std::int32_t> actions_q_;
  EncodedState state_;
};

}  // namespace dvfs
