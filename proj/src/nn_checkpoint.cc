// Copyright 2026 The CISE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "cise/nn.h"

namespace cise::nn {
namespace {

constexpr char kMagic[4] = {'C', 'I', 'S', 'E'};
constexpr std::uint32_t kMaxLayers = 1024;
constexpr int kMaxDim = 1 << 16;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(const std::vector<double>& v) {
    for (double x : v) f64(x);
  }

 private:
  void le(std::uint64_t v, int bytes) {
    char b[8];
    for (int i = 0; i < bytes; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(b, bytes);
  }
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  void f64s(std::vector<double>& v) {
    for (double& x : v) x = f64();
  }
  void bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) {
      throw CheckpointError("checkpoint: truncated file");
    }
  }

 private:
  std::uint64_t le(int n) {
    unsigned char b[8];
    bytes(reinterpret_cast<char*>(b), static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  std::istream& in_;
};

void write_block(Writer& w, const Gradients& g) {
  for (const auto& l : g) {
    w.f64s(l.weights);
    w.f64s(l.bias);
  }
}

void read_block(Reader& r, Gradients& g) {
  for (auto& l : g) {
    r.f64s(l.weights);
    r.f64s(l.bias);
  }
}

bool same_structure(const ConvLayer& a, const ConvLayer& b) {
  return a.in_channels == b.in_channels && a.out_channels == b.out_channels &&
         a.kernel_width == b.kernel_width && a.padding == b.padding &&
         a.activation == b.activation;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Network& net, const AdamState* optimizer) {
  net.validate();
  Writer w(out);
  out.write(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u64(net.rng_seed);
  w.u32(static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& l : net.layers) {
    w.i32(l.in_channels);
    w.i32(l.out_channels);
    w.i32(l.kernel_width);
    w.u8(static_cast<std::uint8_t>(l.padding));
    w.u8(static_cast<std::uint8_t>(l.activation));
  }
  w.u8(optimizer != nullptr ? 1 : 0);
  if (optimizer != nullptr) {
    w.u64(optimizer->step);
    w.f64(optimizer->config.learning_rate);
    w.f64(optimizer->config.beta1);
    w.f64(optimizer->config.beta2);
    w.f64(optimizer->config.epsilon);
  }
  for (const auto& l : net.layers) {
    w.f64s(l.weights);
    w.f64s(l.bias);
  }
  if (optimizer != nullptr) {
    write_block(w, optimizer->m);
    write_block(w, optimizer->v);
  }
  if (!out) throw IoError("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  Reader r(in);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw CheckpointError("checkpoint: bad magic bytes");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint: unsupported format version " + std::to_string(version));
  }

  Checkpoint ck;
  ck.network.rng_seed = r.u64();
  const std::uint32_t n_layers = r.u32();
  if (n_layers > kMaxLayers) throw CheckpointError("checkpoint: implausible layer count");
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const int in_ch = r.i32(), out_ch = r.i32(), k = r.i32();
    const std::uint8_t pad = r.u8(), act = r.u8();
    if (in_ch <= 0 || out_ch <= 0 || k <= 0 || in_ch > kMaxDim || out_ch > kMaxDim ||
        k > kMaxDim || pad > 1 || act > 1) {
      throw CheckpointError("checkpoint: corrupt layer table");
    }
    ck.network.layers.push_back(ConvLayer::Make(in_ch, out_ch, k, static_cast<Padding>(pad),
                                                static_cast<Activation>(act)));
  }
  const bool has_opt = r.u8() != 0;
  if (has_opt) {
    AdamState s = AdamState::Make(ck.network);
    s.step = r.u64();
    s.config.learning_rate = r.f64();
    s.config.beta1 = r.f64();
    s.config.beta2 = r.f64();
    s.config.epsilon = r.f64();
    ck.optimizer = std::move(s);
  }
  for (auto& l : ck.network.layers) {
    r.f64s(l.weights);
    r.f64s(l.bias);
  }
  if (ck.optimizer) {
    read_block(r, ck.optimizer->m);
    read_block(r, ck.optimizer->v);
  }
  try {
    ck.network.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
  return ck;
}

void checkpoint_save(const std::filesystem::path& path, const Network& net,
                     const AdamState* optimizer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_checkpoint(out, net, optimizer);
}

Checkpoint checkpoint_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return read_checkpoint(in);
}

void checkpoint_load_into(const std::filesystem::path& path, Network& net,
                          AdamState* optimizer) {
  Checkpoint ck = checkpoint_load(path);
  if (ck.network.layers.size() != net.layers.size()) {
    throw StructureMismatchError("checkpoint: file has " +
                                 std::to_string(ck.network.layers.size()) +
                                 " layers, network has " + std::to_string(net.layers.size()));
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (!same_structure(ck.network.layers[i], net.layers[i])) {
      throw StructureMismatchError("checkpoint: layer " + std::to_string(i) +
                                   " shape differs from network");
    }
  }
  if (optimizer != nullptr) {
    if (!ck.optimizer) throw CheckpointError("checkpoint: no optimizer state stored");
    *optimizer = std::move(*ck.optimizer);
  }
  net = std::move(ck.network);
}

}  // namespace cise::nn
