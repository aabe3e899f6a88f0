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

#ifndef MCGASR_CHECKPOINT_H_
#define MCGASR_CHECKPOINT_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mcgasr/common.h"

namespace mcgasr {

// Versioned binary container for training state: magic, format version, a
// table of (name, dtype, shape, offset) entries, a key/value meta table for
// counters (step, epoch, schedule state), then raw little-endian payloads.
// Everything needed for bit-exact resume goes through here.
class Checkpoint {
 public:
  static constexpr char kMagic[9] = "MCGASRCK";
  static constexpr std::uint32_t kVersion = 1;

  enum class Dtype : std::uint8_t { kF32 = 0, kF64 = 1 };

  template <typename T>
  void put_tensor(const std::string& name, const Shape& shape, const std::vector<T>& data);

  template <typename T>
  std::vector<T> get_tensor(const std::string& name, const Shape& expect_shape) const;

  bool has_tensor(const std::string& name) const;
  std::vector<std::string> tensor_names() const;

  void put_meta(const std::string& key, double value);
  double meta(const std::string& key) const;
  bool has_meta(const std::string& key) const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  struct Entry {
    Dtype dtype;
    Shape shape;
    std::vector<char> bytes;
  };

  const Entry& entry(const std::string& name) const;

  // insertion order kept so saved files are deterministic
  std::vector<std::string> order_;
  std::map<std::string, Entry> tensors_;
  std::vector<std::string> meta_order_;
  std::map<std::string, double> meta_;
};

}  // namespace mcgasr

#endif  // MCGASR_CHECKPOINT_H_
