#include "jscc/parameter_store.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace jscc {

namespace {

constexpr char kMagic[8] = {'J', 'S', 'C', 'C', 'P', 'R', 'M', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  put_u64(out, bits);
}

class ByteReader {
 public:
  ByteReader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(raw(4)); }
  std::uint64_t u64() { return raw(8); }
  double f64() {
    std::uint64_t bits = raw(8);
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool exhausted() const { return pos_ == data_.size(); }

 private:
  std::uint64_t raw(std::size_t n) {
    need(n);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += n;
    return v;
  }
  void need(std::size_t n) {
    if (pos_ + n > data_.size())
      throw std::runtime_error("checkpoint '" + path_ + "' is truncated");
  }

  std::string data_;
  std::string path_;
  std::size_t pos_ = 0;
};

ByteReader open_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteReader reader(std::move(data), path);
  std::string magic = reader.bytes(8);
  if (std::memcmp(magic.data(), kMagic, 8) != 0)
    throw std::runtime_error("'" + path + "' is not a checkpoint (bad magic)");
  return reader;
}

}  // namespace

ParameterStore::ParameterStore(std::uint64_t init_seed)
    : init_seed_(init_seed), init_rng_(Rng(init_seed).child(0x1a17)) {}

Tensor ParameterStore::insert(const std::string& name, Tensor t) {
  if (name.empty()) throw std::runtime_error("parameter name must be non-empty");
  auto [it, inserted] = tensors_.emplace(name, t);
  if (!inserted) throw std::runtime_error("duplicate parameter name '" + name + "'");
  return it->second;
}

Tensor ParameterStore::gaussian(const std::string& name, std::vector<std::size_t> shape,
                                double stddev) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  std::vector<double> values(n);
  for (double& v : values) v = stddev * init_rng_.normal();
  return insert(name, Tensor::parameter(std::move(shape), std::move(values)));
}

Tensor ParameterStore::zeros(const std::string& name, std::vector<std::size_t> shape) {
  return filled(name, std::move(shape), 0.0);
}

Tensor ParameterStore::filled(const std::string& name, std::vector<std::size_t> shape,
                              double value) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return insert(name, Tensor::parameter(std::move(shape), std::vector<double>(n, value)));
}

Tensor ParameterStore::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::runtime_error("no parameter named '" + name + "'");
  return it->second;
}

bool ParameterStore::has(const std::string& name) const { return tensors_.count(name) != 0; }

std::size_t ParameterStore::total_parameters() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors_) n += t.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [name, t] : tensors_) t.node()->grad.assign(t.size(), 0.0);
}

SgdOptimizer::SgdOptimizer(double learning_rate, double momentum)
    : learning_rate_(learning_rate), momentum_(momentum) {
  if (!(learning_rate >= 0.0)) throw std::runtime_error("learning rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::runtime_error("momentum must be in [0, 1)");
}

void SgdOptimizer::step(ParameterStore& params) {
  for (const auto& [name, t] : params.tensors()) {
    const std::vector<double>& grad = t.node()->grad;
    if (grad.empty()) continue;
    if (grad.size() != t.size()) {
      throw std::runtime_error("gradient for '" + name + "' has wrong size");
    }
    std::vector<double>& v = velocity_[name];
    if (v.empty()) v.assign(t.size(), 0.0);
    std::vector<double>& theta = t.node()->values;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      v[i] = momentum_ * v[i] + grad[i];
      theta[i] -= learning_rate_ * v[i];
    }
  }
}

void save_checkpoint(const ParameterStore& params, const std::string& path) {
  std::string out;
  out.append(kMagic, 8);
  put_u64(out, params.tensors().size());
  for (const auto& [name, t] : params.tensors()) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.append(name);
    put_u32(out, static_cast<std::uint32_t>(t.shape().size()));
    for (std::size_t d : t.shape()) put_u64(out, d);
    for (double v : t.values()) put_f64(out, v);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("short write to checkpoint '" + path + "'");
}

std::map<std::string, CheckpointEntry> read_checkpoint(const std::string& path) {
  ByteReader reader = open_checkpoint(path);
  std::uint64_t count = reader.u64();
  std::map<std::string, CheckpointEntry> entries;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint32_t name_len = reader.u32();
    std::string name = reader.bytes(name_len);
    std::uint32_t rank = reader.u32();
    CheckpointEntry entry;
    std::size_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      entry.shape.push_back(reader.u64());
      numel *= entry.shape.back();
    }
    entry.values.resize(numel);
    for (std::size_t j = 0; j < numel; ++j) entry.values[j] = reader.f64();
    if (!entries.emplace(name, std::move(entry)).second)
      throw std::runtime_error("checkpoint '" + path + "' repeats tensor '" + name + "'");
  }
  if (!reader.exhausted())
    throw std::runtime_error("checkpoint '" + path + "' has trailing bytes");
  return entries;
}

void load_checkpoint(ParameterStore& params, const std::string& path) {
  std::map<std::string, CheckpointEntry> entries = read_checkpoint(path);
  for (const auto& [name, t] : params.tensors()) {
    auto it = entries.find(name);
    if (it == entries.end())
      throw std::runtime_error("checkpoint '" + path + "' is missing tensor '" + name + "'");
    if (it->second.shape != t.shape()) {
      throw std::runtime_error("checkpoint tensor '" + name + "' has shape " +
                               format_shape(it->second.shape) + ", expected " +
                               format_shape(t.shape()));
    }
  }
  for (const auto& [name, entry] : entries) {
    if (!params.has(name))
      throw std::runtime_error("checkpoint '" + path + "' has unknown tensor '" + name + "'");
    Tensor t = params.get(name);  // handle shares the node; writes stick
    t.mutable_values() = entry.values;
  }
}

}  // namespace jscc
