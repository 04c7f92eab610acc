#include "dvfslab/quantized.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "dvfslab/rl_agent.hpp"

namespace dvfs {

namespace {

constexpr std::uint16_t kModelVersion = 1;
constexpr char kMagic[4] = {'D', 'V', 'Q', 'N'};

std::int32_t saturate32(std::int64_t v) {
  return static_cast<std::int32_t>(
      std::clamp<std::int64_t>(v, std::numeric_limits<std::int32_t>::min(), std::numeric_limits<std::int32_t>::max()));
}

class ByteWriter {
 public:
  void bytes(const char* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v), 4); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint64_t get(int n) {
    if (pos_ + std::size_t(n) > b_.size())
      throw std::runtime_error("quantized model truncated at byte " + std::to_string(b_.size()));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t(b_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::int32_t quantize_value(double v) {
  if (!(std::abs(v) <= kQuantRange)) throw std::out_of_range("value outside [-10, 10]");
  return static_cast<std::int32_t>(std::round(v * kQuantScale));  // std::round is half away from zero
}

double dequantize_value(std::int64_t q) { return double(q) / kQuantScale; }

std::int64_t rescale_product(std::int64_t acc) {
  // acc * 10 / 2^30, split so that nothing overflows: acc = whole * 2^30 + frac
  // with whole and frac sharing acc's sign (truncating division).
  const std::int64_t whole = acc / kQuantOne;
  const std::int64_t frac = acc % kQuantOne;  // |frac| < 2^30, frac * 10 fits easily
  const std::int64_t scaled = frac * 10;
  std::int64_t q = scaled / kQuantOne;
  const std::int64_t rem = scaled % kQuantOne;
  if (2 * (rem < 0 ? -rem : rem) >= kQuantOne) q += scaled < 0 ? -1 : 1;
  return whole * 10 + q;
}

QuantizedQNet::QuantizedQNet(std::vector<QuantizedLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weights.size() != l.inputs * l.outputs || l.biases.size() != l.outputs)
      throw std::invalid_argument("quantized layer " + std::to_string(i) + " has inconsistent sizes");
    if (i > 0 && l.inputs != layers_[i - 1].outputs)
      throw std::invalid_argument("quantized layer " + std::to_string(i) + " does not chain");
  }
  if (!layers_.empty() && layers_.back().outputs != 1) throw std::invalid_argument("output layer must be scalar");
}

std::vector<std::size_t> QuantizedQNet::sizes() const {
  std::vector<std::size_t> s;
  if (layers_.empty()) return s;
  s.push_back(layers_.front().inputs);
  for (const auto& l : layers_) s.push_back(l.outputs);
  return s;
}

std::size_t QuantizedQNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.biases.size();
  return n;
}

std::vector<std::int32_t> QuantizedQNet::parameters() const {
  std::vector<std::int32_t> flat;
  for (const auto& l : layers_) {
    flat.insert(flat.end(), l.weights.begin(), l.weights.end());
    flat.insert(flat.end(), l.biases.begin(), l.biases.end());
  }
  return flat;
}

std::int64_t QuantizedQNet::forward(std::span<const std::int32_t> input) const {
  if (input.size() != input_size())
    throw std::invalid_argument("quantized network expects " + std::to_string(input_size()) + " inputs");
  std::vector<std::int64_t> a(input.begin(), input.end()), z;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    const bool hidden = li + 1 < layers_.size();
    z.assign(l.outputs, 0);
    for (std::size_t o = 0; o < l.outputs; ++o) {
      std::int64_t acc = 0;
      for (std::size_t i = 0; i < l.inputs; ++i) {
        const std::int64_t prod = std::int64_t{l.weights[o * l.inputs + i]} * a[i];
        [[maybe_unused]] const bool overflow = __builtin_add_overflow(acc, prod, &acc);
        assert(!overflow && "quantized accumulator overflow");
      }
      const std::int64_t v = rescale_product(acc) + l.biases[o];
      z[o] = hidden ? saturate32(std::max<std::int64_t>(0, v)) : v;
    }
    a.swap(z);
  }
  return a[0];
}

QuantizedQNet quantize(const QNet& net) {
  std::vector<QuantizedLayer> out;
  for (std::size_t li = 0; li < net.layers().size(); ++li) {
    const auto& l = net.layers()[li];
    QuantizedLayer q;
    q.inputs = l.inputs;
    q.outputs = l.outputs;
    auto conv = [&](double v, const char* what, std::size_t idx) {
      if (!(std::abs(v) <= kQuantRange))
        throw std::out_of_range("layer " + std::to_string(li) + " " + what + "[" + std::to_string(idx) +
                                "] = " + std::to_string(v) + " is outside [-10, 10]");
      return quantize_value(v);
    };
    for (std::size_t i = 0; i < l.weights.size(); ++i) q.weights.push_back(conv(l.weights[i], "weight", i));
    for (std::size_t i = 0; i < l.biases.size(); ++i) q.biases.push_back(conv(l.biases[i], "bias", i));
    out.push_back(std::move(q));
  }
  return QuantizedQNet(std::move(out));
}

std::vector<std::int32_t> quantize_vector(std::span<const double> values) {
  std::vector<std::int32_t> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(quantize_value(v));
  return out;
}

std::int64_t int_forward(const QuantizedQNet& qnet, std::span<const std::int32_t> state_q, std::size_t action_index,
                         std::span<const std::int32_t> action_q) {
  if (action_index >= action_q.size()) throw std::out_of_range("action index outside the action set");
  if (state_q.size() + 1 != qnet.input_size())
    throw std::invalid_argument("state length " + std::to_string(state_q.size()) + " + action does not match input " +
                                std::to_string(qnet.input_size()));
  std::vector<std::int32_t> in(state_q.begin(), state_q.end());
  in.push_back(action_q[action_index]);
  return qnet.forward(in);
}

std::size_t argmax_action_int(const QuantizedQNet& qnet, std::span<const std::int32_t> state_q,
                              std::span<const std::int32_t> action_q) {
  if (action_q.empty()) throw std::invalid_argument("no actions to choose from");
  std::size_t best = 0;
  std::int64_t best_q = int_forward(qnet, state_q, 0, action_q);
  for (std::size_t a = 1; a < action_q.size(); ++a) {
    const std::int64_t q = int_forward(qnet, state_q, a, action_q);
    if (q > best_q) {
      best = a;
      best_q = q;
    }
  }
  return best;
}

std::vector<std::uint8_t> encode_quantized_model(const QuantizedModelFile& model) {
  ByteWriter w;
  w.bytes(kMagic, 4);
  w.u16(kModelVersion);
  w.u8(model.layout == StateLayout::kCompact ? 0 : 1);
  const auto sizes = model.net.sizes();
  w.u8(static_cast<std::uint8_t>(sizes.size()));
  for (auto s : sizes) w.u32(static_cast<std::uint32_t>(s));
  w.u32(static_cast<std::uint32_t>(kQuantOne));
  w.u32(static_cast<std::uint32_t>(kQuantRange));
  const auto params = model.net.parameters();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (auto p : params) w.i32(p);
  return w.take();
}

QuantizedModelFile decode_quantized_model(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  for (char c : kMagic)
    if (static_cast<char>(r.get(1)) != c) throw std::runtime_error("not a quantized model file (bad magic)");
  const auto version = r.get(2);
  if (version != kModelVersion) throw std::runtime_error("unsupported quantized model version " + std::to_string(version));
  QuantizedModelFile m;
  const auto layout = r.get(1);
  if (layout > 1) throw std::runtime_error("unknown layout code in quantized model");
  m.layout = layout == 0 ? StateLayout::kCompact : StateLayout::kFull;
  const auto n = r.get(1);
  if (n < 2) throw std::runtime_error("quantized model needs at least two layer sizes");
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i < n; ++i) sizes.push_back(r.get(4));
  if (r.get(4) != std::uint64_t(kQuantOne) || r.get(4) != std::uint64_t(kQuantRange))
    throw std::runtime_error("quantized model uses a different scale");
  const auto count = r.get(4);
  std::vector<QuantizedLayer> layers;
  std::size_t expected = 0;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) expected += sizes[i] * sizes[i + 1] + sizes[i + 1];
  if (count != expected) throw std::runtime_error("quantized model parameter count does not match its layer sizes");
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    QuantizedLayer l;
    l.inputs = sizes[i];
    l.outputs = sizes[i + 1];
    for (std::size_t k = 0; k < l.inputs * l.outputs; ++k) l.weights.push_back(static_cast<std::int32_t>(r.get(4)));
    for (std::size_t k = 0; k < l.outputs; ++k) l.biases.push_back(static_cast<std::int32_t>(r.get(4)));
    layers.push_back(std::move(l));
  }
  if (r.remaining() != 0) throw std::runtime_error("trailing bytes after quantized model");
  m.net = QuantizedQNet(std::move(layers));
  return m;
}

void save_quantized_model(const QuantizedModelFile& model, const std::string& path) {
  const auto bytes = encode_quantized_model(model);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

QuantizedModelFile load_quantized_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_quantized_model(bytes);
}

QuantizedRlGovernor::QuantizedRlGovernor(QuantizedQNet net, EncoderConfig encoder, StateLayout layout)
    : net_(std::move(net)),
      encoder_(std::move(encoder)),
      layout_(layout),
      actions_q_(quantize_vector(action_values(encoder_.table))),
      state_(EncodedState::zero(encoder_)) {
  encoder_.validate();
  if (net_.input_size() != flattened_size(layout_, encoder_.table.size(), encoder_.interval_edges.size()) + 1)
    throw std::invalid_argument("quantized network input width does not match the layout");
}

FreqLevel QuantizedRlGovernor::initial(const FrequencyTable& table) {
  if (!(table == encoder_.table)) throw std::invalid_argument("RL governor was built for a different frequency table");
  state_ = EncodedState::zero(encoder_);
  return decide(table);
}

FreqLevel QuantizedRlGovernor::next(const Observation& obs, const FrequencyTable& table) {
  state_ = encode_step(state_, obs, encoder_);
  return decide(table);
}

FreqLevel QuantizedRlGovernor::decide(const FrequencyTable& table) {
  const auto flat = flatten(state_, layout_);
  const auto state_q = quantize_vector(flat);
  return table[argmax_action_int(net_, state_q, actions_q_)];
}

}  // namespace dvfs
