// Copyright 2026 The mcgasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mcgasr/checkpoint.h"

#include <cstring>
#include <fstream>

#include "mcgasr/io_util.h"

namespace mcgasr {

namespace {

template <typename T>
constexpr Checkpoint::Dtype dtype_of();
template <>
constexpr Checkpoint::Dtype dtype_of<float>() { return Checkpoint::Dtype::kF32; }
template <>
constexpr Checkpoint::Dtype dtype_of<double>() { return Checkpoint::Dtype::kF64; }

const char* dtype_name(Checkpoint::Dtype d) {
  return d == Checkpoint::Dtype::kF32 ? "f32" : "f64";
}

}  // namespace

template <typename T>
void Checkpoint::put_tensor(const std::string& name, const Shape& shape,
                            const std::vector<T>& data) {
  if (static_cast<Index>(data.size()) != numel(shape)) {
    throw ShapeError(str_cat("checkpoint: '", name, "' data size ", data.size(),
                             " does not match shape ", shape_str(shape)));
  }
  Entry e;
  e.dtype = dtype_of<T>();
  e.shape = shape;
  e.bytes.resize(data.size() * sizeof(T));
  std::memcpy(e.bytes.data(), data.data(), e.bytes.size());
  if (tensors_.find(name) == tensors_.end()) order_.push_back(name);
  tensors_[name] = std::move(e);
}

const Checkpoint::Entry& Checkpoint::entry(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw IoError(str_cat("checkpoint: missing tensor '", name, "'"));
  return it->second;
}

template <typename T>
std::vector<T> Checkpoint::get_tensor(const std::string& name, const Shape& expect_shape) const {
  const Entry& e = entry(name);
  if (e.dtype != dtype_of<T>()) {
    throw IoError(str_cat("checkpoint: '", name, "' stored as ", dtype_name(e.dtype),
                          ", requested ", dtype_name(dtype_of<T>())));
  }
  if (e.shape != expect_shape) {
    throw ShapeError(str_cat("checkpoint: '", name, "' has shape ", shape_str(e.shape),
                             ", expected ", shape_str(expect_shape)));
  }
  std::vector<T> out(e.bytes.size() / sizeof(T));
  std::memcpy(out.data(), e.bytes.data(), e.bytes.size());
  return out;
}

bool Checkpoint::has_tensor(const std::string& name) const {
  return tensors_.find(name) != tensors_.end();
}

std::vector<std::string> Checkpoint::tensor_names() const { return order_; }

void Checkpoint::put_meta(const std::string& key, double value) {
  if (meta_.find(key) == meta_.end()) meta_order_.push_back(key);
  meta_[key] = value;
}

double Checkpoint::meta(const std::string& key) const {
  auto it = meta_.find(key);
  if (it == meta_.end()) throw IoError(str_cat("checkpoint: missing meta key '", key, "'"));
  return it->second;
}

bool Checkpoint::has_meta(const std::string& key) const {
  return meta_.find(key) != meta_.end();
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(str_cat("checkpoint: cannot open '", path, "' for writing"));
  os.write(kMagic, 8);
  write_pod<std::uint32_t>(os, kVersion);
  write_pod<std::uint64_t>(os, order_.size());
  write_pod<std::uint64_t>(os, meta_order_.size());
  std::uint64_t offset = 0;
  for (const auto& name : order_) {
    const Entry& e = tensors_.at(name);
    write_string(os, name);
    write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(e.dtype));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(e.shape.size()));
    for (Index d : e.shape) write_pod<std::int64_t>(os, d);
    write_pod<std::uint64_t>(os, offset);
    write_pod<std::uint64_t>(os, e.bytes.size());
    offset += e.bytes.size();
  }
  for (const auto& key : meta_order_) {
    write_string(os, key);
    write_pod<double>(os, meta_.at(key));
  }
  write_pod<std::uint64_t>(os, offset);  // total payload size
  for (const auto& name : order_) {
    const Entry& e = tensors_.at(name);
    os.write(e.bytes.data(), static_cast<std::streamsize>(e.bytes.size()));
  }
  if (!os) throw IoError(str_cat("checkpoint: write failed for '", path, "'"));
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(str_cat("checkpoint: cannot open '", path, "'"));
  expect_magic(is, kMagic, "checkpoint");
  auto version = read_pod<std::uint32_t>(is, "checkpoint version");
  if (version != kVersion) {
    throw IoError(str_cat("checkpoint: unsupported format version ", version));
  }
  auto n_tensors = read_pod<std::uint64_t>(is, "tensor count");
  auto n_meta = read_pod<std::uint64_t>(is, "meta count");

  Checkpoint ck;
  struct Pending {
    std::string name;
    std::uint64_t offset;
    std::uint64_t nbytes;
  };
  std::vector<Pending> pending;
  for (std::uint64_t i = 0; i < n_tensors; ++i) {
    std::string name = read_string(is, "tensor name");
    Entry e;
    e.dtype = static_cast<Dtype>(read_pod<std::uint8_t>(is, "dtype"));
    auto ndim = read_pod<std::uint32_t>(is, "rank");
    e.shape.resize(ndim);
    for (auto& d : e.shape) d = read_pod<std::int64_t>(is, "dim");
    auto offset = read_pod<std::uint64_t>(is, "offset");
    auto nbytes = read_pod<std::uint64_t>(is, "payload size");
    size_t elem = e.dtype == Dtype::kF32 ? 4 : 8;
    if (nbytes != static_cast<std::uint64_t>(numel(e.shape)) * elem) {
      throw IoError(str_cat("checkpoint: '", name, "' payload size inconsistent with shape"));
    }
    pending.push_back({name, offset, nbytes});
    ck.order_.push_back(name);
    ck.tensors_[name] = std::move(e);
  }
  for (std::uint64_t i = 0; i < n_meta; ++i) {
    std::string key = read_string(is, "meta key");
    double v = read_pod<double>(is, "meta value");
    ck.meta_order_.push_back(key);
    ck.meta_[key] = v;
  }
  auto payload_size = read_pod<std::uint64_t>(is, "total payload size");
  std::vector<char> payload;
  read_vec(is, payload, payload_size, "payload");
  for (const auto& p : pending) {
    if (p.offset + p.nbytes > payload.size()) {
      throw IoError(str_cat("checkpoint: '", p.name, "' payload range out of bounds"));
    }
    auto& e = ck.tensors_[p.name];
    e.bytes.assign(payload.begin() + static_cast<std::ptrdiff_t>(p.offset),
                   payload.begin() + static_cast<std::ptrdiff_t>(p.offset + p.nbytes));
  }
  return ck;
}

template void Checkpoint::put_tensor<float>(const std::string&, const Shape&,
                                            const std::vector<float>&);
template void Checkpoint::put_tensor<double>(const std::string&, const Shape&,
                                             const std::vector<double>&);
template std::vector<float> Checkpoint::get_tensor<float>(const std::string&, const Shape&) const;
template std::vector<double> Checkpoint::get_tensor<double>(const std::string&,
                                                            const Shape&) const;

}  // namespace mcgasr
