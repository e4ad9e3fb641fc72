#include "fbp/net/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <span>

#include "fbp/hash.hpp"

namespace fbp::nn {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { buf.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  // Little-endian scalars; a plain copy on little-endian hosts.
  template <typename T>
  void scalars(std::span<const T> v) {
    if constexpr (std::endian::native == std::endian::little) {
      const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
      buf.insert(buf.end(), p, p + v.size_bytes());
    } else {
      for (T x : v) {
        if constexpr (sizeof(T) == 4)
          f32(x);
        else
          f64(x);
      }
    }
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf.insert(buf.end(), s.begin(), s.end());
  }
  std::vector<std::uint8_t> buf;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& b, std::size_t end) : buf_(b), end_(end) {}

  std::uint8_t u8() {
    need(1);
    return buf_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_++]) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(buf_.begin() + static_cast<std::ptrdiff_t>(pos_), buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  template <typename T>
  void scalars(std::span<T> out) {
    need(out.size_bytes());
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(out.data(), buf_.data() + pos_, out.size_bytes());
      pos_ += out.size_bytes();
    } else {
      for (T& x : out) {
        if constexpr (sizeof(T) == 4)
          x = f32();
        else
          x = f64();
      }
    }
  }
  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw FormatError("model: unexpected end of data", pos_);
  }
  const std::vector<std::uint8_t>& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

void put_tensor_header(Writer& w, const Shape& s) {
  w.u8(static_cast<std::uint8_t>(s.size()));
  for (auto e : s) w.u32(static_cast<std::uint32_t>(e));
}

constexpr char kMagic[4] = {'F', 'B', 'P', 'M'};

}  // namespace

template <typename T>
std::vector<std::uint8_t> encode_model(const Network<T>& net, const ChannelDescriptor& desc) {
  Writer w;
  std::size_t scalars = 0;
  for (const auto& p : net.params()) scalars += p.weight.size() + p.bias.size();
  w.buf.reserve(scalars * sizeof(T) + 4096);
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kModelVersion);
  w.u8(static_cast<std::uint8_t>(sizeof(T)));

  const NetworkSpec& s = net.spec();
  w.str(s.name);
  w.u32(static_cast<std::uint32_t>(net.in_channels()));
  w.u32(static_cast<std::uint32_t>(s.stored_size));
  w.u32(static_cast<std::uint32_t>(s.crop_size));
  w.u32(static_cast<std::uint32_t>(s.layers.size()));
  for (const LayerSpec& l : s.layers) {
    w.u8(static_cast<std::uint8_t>(l.kind));
    w.u32(static_cast<std::uint32_t>(l.out));
    w.u32(static_cast<std::uint32_t>(l.kernel));
    w.u8(l.relu ? 1 : 0);
    w.f64(l.keep_rate);
  }

  w.str(desc.channel_set);
  w.u32(static_cast<std::uint32_t>(desc.means.size()));
  for (double m : desc.means) w.f64(m);
  if (!desc.stds.empty() && desc.stds.size() != desc.means.size())
    throw ArgumentError("encode_model: channel means and stds differ in length");
  for (std::size_t i = 0; i < desc.means.size(); ++i) w.f64(desc.stds.empty() ? 1.0 : desc.stds[i]);
  w.f64(desc.wls.lambda);
  w.f64(desc.wls.alpha);
  w.f64(desc.wls.eps);
  w.f64(desc.wls.cg_tol);
  w.u64(desc.wls.cg_max_iters);

  std::uint32_t count = 0;
  for (const auto& p : net.params())
    if (!p.weight.empty()) count += 2;
  w.u32(count);
  for (const auto& p : net.params()) {
    if (p.weight.empty()) continue;
    for (const Tensor<T>* t : {&p.weight, &p.bias}) {
      put_tensor_header(w, t->shape());
      w.scalars<T>(t->data());
    }
  }
  w.u64(fnv1a64(w.buf));
  return std::move(w.buf);
}

template <typename T>
LoadedModel<T> decode_model(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 + 4 + 1 + 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("model: missing FBPM magic", 0);
  const std::size_t body = bytes.size() - 8;
  Reader tail(bytes, bytes.size());
  tail.seek(body);
  const std::uint64_t stored = tail.u64();
  const std::uint64_t actual = fnv1a64(std::span<const std::uint8_t>(bytes.data(), body));
  if (stored != actual)
    throw CorruptionError("model: checksum mismatch (stored " + hex64(stored) + ", computed " + hex64(actual) + ")");

  Reader r(bytes, body);
  r.seek(4);
  const std::uint32_t version = r.u32();
  if (version != kModelVersion)
    throw VersionError("model: file version " + std::to_string(version) + ", this build reads version " +
                       std::to_string(kModelVersion));
  const std::uint8_t width = r.u8();
  if (width != sizeof(T))
    throw ArgumentError("model: stored with " + std::to_string(width * 8) + "-bit scalars, requested " +
                        std::to_string(sizeof(T) * 8) + "-bit");

  NetworkSpec spec;
  spec.name = r.str();
  const std::size_t in_channels = r.u32();
  spec.stored_size = r.u32();
  spec.crop_size = r.u32();
  const std::uint32_t nl = r.u32();
  for (std::uint32_t i = 0; i < nl; ++i) {
    LayerSpec l;
    const std::uint8_t kind = r.u8();
    if (kind > static_cast<std::uint8_t>(LayerKind::dropout)) throw FormatError("model: bad layer kind", r.pos() - 1);
    l.kind = static_cast<LayerKind>(kind);
    l.out = r.u32();
    l.kernel = r.u32();
    l.relu = r.u8() != 0;
    l.keep_rate = r.f64();
    spec.layers.push_back(l);
  }

  ChannelDescriptor desc;
  desc.channel_set = r.str();
  const std::uint32_t nm = r.u32();
  for (std::uint32_t i = 0; i < nm; ++i) desc.means.push_back(r.f64());
  for (std::uint32_t i = 0; i < nm; ++i) desc.stds.push_back(r.f64());
  desc.wls.lambda = r.f64();
  desc.wls.alpha = r.f64();
  desc.wls.eps = r.f64();
  desc.wls.cg_tol = r.f64();
  desc.wls.cg_max_iters = r.u64();

  Network<T> net(spec, in_channels, 0);
  auto& params = net.mutable_params();
  const std::uint32_t count = r.u32();
  std::uint32_t seen = 0;
  for (auto& p : params) {
    if (p.weight.empty()) continue;
    for (Tensor<T>* t : {&p.weight, &p.bias}) {
      if (seen++ >= count) throw CorruptionError("model: fewer tensors than the network layout requires");
      const std::size_t at = r.pos();
      Shape s(r.u8());
      for (auto& e : s) e = r.u32();
      if (s != t->shape())
        throw FormatError("model: tensor shape " + shape_str(s) + " does not match spec shape " + shape_str(t->shape()), at);
      r.scalars<T>(t->data());
    }
  }
  if (seen != count || r.pos() != body) throw FormatError("model: trailing or missing tensor data", r.pos());
  return {std::move(net), std::move(desc)};
}

template <typename T>
void save_model(const Network<T>& net, const ChannelDescriptor& desc, const std::filesystem::path& path) {
  const auto bytes = encode_model(net, desc);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for model " + path.string());
}

namespace {
std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open model " + path.string());
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(in.tellg()));
  in.seekg(0);
  if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
    throw IoError("cannot read model " + path.string());
  return bytes;
}
}  // namespace

template <typename T>
LoadedModel<T> load_model(const std::filesystem::path& path) {
  return decode_model<T>(slurp(path));
}

std::size_t model_scalar_bytes(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() < 9 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("model: missing FBPM magic", 0);
  return bytes[8];
}

template std::vector<std::uint8_t> encode_model(const Network<float>&, const ChannelDescriptor&);
template std::vector<std::uint8_t> encode_model(const Network<double>&, const ChannelDescriptor&);
template LoadedModel<float> decode_model(const std::vector<std::uint8_t>&);
template LoadedModel<double> decode_model(const std::vector<std::uint8_t>&);
template void save_model(const Network<float>&, const ChannelDescriptor&, const std::filesystem::path&);
template void save_model(const Network<double>&, const ChannelDescriptor&, const std::filesystem::path&);
template LoadedModel<float> load_model(const std::filesystem::path&);
template LoadedModel<double> load_model(const std::filesystem::path&);

}  // namespace fbp::nn
