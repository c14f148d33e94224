#include "tlmdp/harness/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tlmdp/core/errors.hpp"

namespace tlmdp::harness {
namespace {

constexpr char kMagic[8] = {'T', 'L', 'M', 'D', 'P', 'C', 'K', 'P'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t x) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
  }
  void u64(std::uint64_t x) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
  }
  void f64(double x) { u64(std::bit_cast<std::uint64_t>(x)); }
  void reals(std::span<const double> xs) {
    u64(xs.size());
    for (double x : xs) f64(x);
  }

  void mlp(const MlpParams& p) {
    u64(p.layers().size());
    for (const DenseLayer& layer : p.layers()) {
      u32(static_cast<std::uint32_t>(layer.activation));
      u64(layer.out_dim());
      u64(layer.in_dim());
      reals(layer.weight.values());
      reals(layer.bias.values());
    }
  }

  void adam(const AdamWState& s) {
    f64(s.config.learning_rate);
    f64(s.config.beta1);
    f64(s.config.beta2);
    f64(s.config.weight_decay);
    f64(s.config.epsilon);
    u64(s.step);
    mlp(s.first_moment);
    mlp(s.second_moment);
  }

  // Appends a tagged field whose payload is produced by `fill`.
  template <typename F>
  void field(const char (&tag)[5], F&& fill) {
    bytes(tag, 4);
    const std::size_t size_at = out_.size();
    u64(0);
    const std::size_t start = out_.size();
    fill();
    const std::uint64_t n = out_.size() - start;
    for (int i = 0; i < 8; ++i) out_[size_at + i] = static_cast<std::uint8_t>(n >> (8 * i));
  }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size, std::string context)
      : p_(data), end_(data + size), context_(std::move(context)) {}

  void need(std::size_t n) const {
    if (static_cast<std::size_t>(end_ - p_) < n) {
      throw CheckpointError("checkpoint truncated while reading " + context_);
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(p_[i]) << (8 * i);
    p_ += 4;
    return x;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(p_[i]) << (8 * i);
    p_ += 8;
    return x;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::vector<double> reals(std::size_t expected) {
    const std::uint64_t n = u64();
    if (n != expected) {
      throw CheckpointError("checkpoint " + context_ + ": array holds " + std::to_string(n) +
                            " values, expected " + std::to_string(expected));
    }
    need(n * 8);
    std::vector<double> xs(n);
    for (double& x : xs) x = f64();
    return xs;
  }
  std::size_t dim() {
    const std::uint64_t n = u64();
    if (n == 0 || n > (1u << 24)) {
      throw CheckpointError("checkpoint " + context_ + ": implausible dimension " +
                            std::to_string(n));
    }
    return static_cast<std::size_t>(n);
  }

  MlpParams mlp() {
    const std::uint64_t count = u64();
    if (count == 0 || count > 64) {
      throw CheckpointError("checkpoint " + context_ + ": implausible layer count " +
                            std::to_string(count));
    }
    std::vector<DenseLayer> layers;
    for (std::uint64_t l = 0; l < count; ++l) {
      const std::uint32_t act = u32();
      if (act > static_cast<std::uint32_t>(Activation::kGelu)) {
        throw CheckpointError("checkpoint " + context_ + ": unknown activation code " +
                              std::to_string(act));
      }
      const std::size_t out = dim();
      const std::size_t in = dim();
      DenseLayer layer;
      layer.activation = static_cast<Activation>(act);
      layer.weight = RealArray({out, in}, reals(out * in));
      layer.bias = RealArray({out}, reals(out));
      layers.push_back(std::move(layer));
    }
    for (std::size_t l = 1; l < layers.size(); ++l) {
      if (layers[l].in_dim() != layers[l - 1].out_dim()) {
        throw CheckpointError("checkpoint " + context_ + ": layer widths do not chain");
      }
    }
    return MlpParams(std::move(layers));
  }

  AdamWState adam() {
    AdamWState s;
    s.config.learning_rate = f64();
    s.config.beta1 = f64();
    s.config.beta2 = f64();
    s.config.weight_decay = f64();
    s.config.epsilon = f64();
    s.step = u64();
    s.first_moment = mlp();
    s.second_moment = mlp();
    return s;
  }

  // Opens the next field, checks its tag and returns a reader over its payload.
  Reader field(const char (&tag)[5]) {
    need(12);
    if (std::memcmp(p_, tag, 4) != 0) {
      throw CheckpointError("checkpoint: expected field '" + std::string(tag) + "', found '" +
                            std::string(reinterpret_cast<const char*>(p_), 4) + "'");
    }
    p_ += 4;
    context_ = std::string("field ") + tag;
    const std::uint64_t n = u64();
    need(n);
    Reader inner(p_, n, context_);
    p_ += n;
    return inner;
  }

  void expect_end() const {
    if (p_ != end_) throw CheckpointError("checkpoint " + context_ + ": trailing bytes");
  }
  const std::uint8_t* cursor() const { return p_; }
  void skip(std::size_t n) {
    need(n);
    p_ += n;
  }

 private:
  const std::uint8_t* p_;
  const std::uint8_t* end_;
  std::string context_;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(ckpt.version);
  w.field("ROND", [&] { w.u64(static_cast<std::uint64_t>(ckpt.round)); });
  w.field("RNGS", [&] {
    w.u64(ckpt.rng_key);
    w.u64(ckpt.rng_position);
  });
  w.field("THTA", [&] {
    w.u64(ckpt.models.denoiser.latent_dim);
    w.u64(ckpt.models.denoiser.prompt_dim);
    w.mlp(ckpt.models.denoiser.net);
  });
  w.field("PHI_", [&] {
    w.u64(ckpt.models.critic.sample_dim);
    w.u64(static_cast<std::uint64_t>(ckpt.models.critic.stages));
    w.mlp(ckpt.models.critic.net);
  });
  w.field("OPTP", [&] { w.adam(ckpt.models.policy_optimizer); });
  w.field("OPTC", [&] { w.adam(ckpt.models.critic_optimizer); });
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes.data(), bytes.size(), "header");
  r.need(sizeof kMagic);
  if (std::memcmp(r.cursor(), kMagic, sizeof kMagic) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  r.skip(sizeof kMagic);
  Checkpoint ckpt;
  ckpt.version = r.u32();
  if (ckpt.version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(ckpt.version) +
                          " is not supported (expected " + std::to_string(kCheckpointVersion) +
                          ")");
  }
  {
    Reader f = r.field("ROND");
    ckpt.round = static_cast<int>(f.u64());
    f.expect_end();
  }
  {
    Reader f = r.field("RNGS");
    ckpt.rng_key = f.u64();
    ckpt.rng_position = f.u64();
    f.expect_end();
  }
  {
    Reader f = r.field("THTA");
    ckpt.models.denoiser.latent_dim = f.dim();
    ckpt.models.denoiser.prompt_dim = f.dim();
    ckpt.models.denoiser.net = f.mlp();
    f.expect_end();
  }
  {
    Reader f = r.field("PHI_");
    ckpt.models.critic.sample_dim = f.dim();
    ckpt.models.critic.stages = static_cast<int>(f.dim());
    ckpt.models.critic.net = f.mlp();
    f.expect_end();
  }
  {
    Reader f = r.field("OPTP");
    ckpt.models.policy_optimizer = f.adam();
    f.expect_end();
  }
  {
    Reader f = r.field("OPTC");
    ckpt.models.critic_optimizer = f.adam();
    f.expect_end();
  }
  r.expect_end();

  const auto& m = ckpt.models;
  if (!m.policy_optimizer.first_moment.same_architecture(m.denoiser.net) ||
      !m.policy_optimizer.second_moment.same_architecture(m.denoiser.net) ||
      !m.critic_optimizer.first_moment.same_architecture(m.critic.net) ||
      !m.critic_optimizer.second_moment.same_architecture(m.critic.net)) {
    throw CheckpointError("checkpoint: optimizer moments do not match their networks");
  }
  return ckpt;
}

void checkpoint_save(const std::string& path, const Checkpoint& ckpt) {
  const std::vector<std::uint8_t> bytes = encode_checkpoint(ckpt);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint '" + tmp + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("short write to checkpoint '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw CheckpointError("cannot move checkpoint into place at '" + path + "'");
  }
}

Checkpoint checkpoint_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path + ": " + e.what());
  }
}

}  // namespace tlmdp::harness
