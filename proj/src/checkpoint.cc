// Copyright (c) 2026 The ge2e-asv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ge2e/checkpoint.h"

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "binary_io.h"

namespace ge2e {

namespace {

constexpr char kMagic[5] = "GE2E";
constexpr uint32_t kVersion = 1;

struct RawTensor {
  std::vector<uint32_t> dims;
  std::vector<float> data;
};

void WriteTensor(std::ostream& os, const std::string& name,
                 const std::vector<uint32_t>& dims,
                 const std::vector<float>& data) {
  internal::WriteUInt<uint16_t>(os, static_cast<uint16_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  internal::WriteUInt<uint8_t>(os, static_cast<uint8_t>(dims.size()));
  for (uint32_t d : dims) internal::WriteUInt<uint32_t>(os, d);
  for (float v : data) internal::WriteF32(os, v);
}

template <typename Derived>
void WriteEigen(std::ostream& os, const std::string& name,
                const Eigen::MatrixBase<Derived>& m) {
  std::vector<uint32_t> dims;
  if (m.cols() == 1) {
    dims = {static_cast<uint32_t>(m.rows())};
  } else {
    dims = {static_cast<uint32_t>(m.rows()), static_cast<uint32_t>(m.cols())};
  }
  std::vector<float> data;
  data.reserve(static_cast<size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  WriteTensor(os, name, dims, data);
}

[[noreturn]] void Fail(const std::filesystem::path& path,
                       const std::string& msg) {
  throw IoError(path.string() + ": " + msg);
}

const RawTensor& Require(const std::map<std::string, RawTensor>& tensors,
                         const std::filesystem::path& path,
                         const std::string& name,
                         const std::vector<uint32_t>& dims) {
  auto it = tensors.find(name);
  if (it == tensors.end()) Fail(path, "missing tensor " + name);
  if (it->second.dims != dims) {
    std::string want, got;
    for (auto d : dims) want += std::to_string(d) + " ";
    for (auto d : it->second.dims) got += std::to_string(d) + " ";
    Fail(path, "tensor " + name + " has dims [" + got + "], expected [" +
                   want + "]");
  }
  return it->second;
}

template <typename Derived>
void Fill(Eigen::MatrixBase<Derived>& m, const RawTensor& t) {
  size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = t.data[k++];
  }
}

}  // namespace

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  internal::WriteMagic(os, kMagic);
  internal::WriteUInt<uint32_t>(os, kVersion);
  ckpt.params.ForEachTensor(
      [&](const std::string& name, const auto& t) { WriteEigen(os, name, t); });
  WriteTensor(os, "ge2e.w", {}, {static_cast<float>(ckpt.scalars.w)});
  WriteTensor(os, "ge2e.b", {}, {static_cast<float>(ckpt.scalars.b)});
  if (!os) throw IoError(path.string() + ": write failed");
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail(path, "cannot open checkpoint");
  if (!internal::ReadMagic(is, kMagic)) Fail(path, "not a GE2E checkpoint");
  const auto version = internal::ReadUInt<uint32_t>(is, "checkpoint version");
  if (version != kVersion) {
    Fail(path, "unsupported checkpoint version " + std::to_string(version));
  }

  std::map<std::string, RawTensor> tensors;
  while (is.peek() != std::char_traits<char>::eof()) {
    const auto len = internal::ReadUInt<uint16_t>(is, "tensor name length");
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) Fail(path, "truncated tensor name");
    RawTensor t;
    const auto rank = internal::ReadUInt<uint8_t>(is, "tensor rank");
    if (rank > 2) Fail(path, "tensor " + name + " has unsupported rank");
    size_t count = 1;
    for (uint8_t r = 0; r < rank; ++r) {
      t.dims.push_back(internal::ReadUInt<uint32_t>(is, "tensor dim"));
      count *= t.dims.back();
    }
    if (count > (size_t{1} << 31)) Fail(path, "tensor " + name + " too large");
    t.data.resize(count);
    for (auto& v : t.data) v = internal::ReadF32(is, "tensor data");
    if (!tensors.emplace(name, std::move(t)).second) {
      Fail(path, "duplicate tensor " + name);
    }
  }

  NetworkShape shape;
  shape.layers = 0;
  while (tensors.count("lstm." + std::to_string(shape.layers) + ".weight_ih")) {
    ++shape.layers;
  }
  if (shape.layers == 0) Fail(path, "no LSTM layers found");
  const auto& first = tensors.at("lstm.0.weight_ih");
  if (first.dims.size() != 2 || first.dims[0] % 4 != 0 || first.dims[0] == 0) {
    Fail(path, "malformed lstm.0.weight_ih");
  }
  shape.hidden = static_cast<int>(first.dims[0] / 4);
  shape.input_dim = static_cast<int>(first.dims[1]);
  auto proj = tensors.find("proj.weight");
  if (proj == tensors.end() || proj->second.dims.size() != 2) {
    Fail(path, "missing or malformed proj.weight");
  }
  shape.embedding = static_cast<int>(proj->second.dims[0]);
  if (shape.input_dim < 1 || shape.embedding < 1) {
    Fail(path, "degenerate network dimensions");
  }

  Checkpoint ckpt;
  ckpt.params = NetworkParams<float>::Zeros(shape);
  size_t used = 0;
  ckpt.params.ForEachTensor([&](const std::string& name, auto& m) {
    std::vector<uint32_t> dims;
    if (m.cols() == 1) {
      dims = {static_cast<uint32_t>(m.rows())};
    } else {
      dims = {static_cast<uint32_t>(m.rows()), static_cast<uint32_t>(m.cols())};
    }
    Fill(m, Require(tensors, path, name, dims));
    ++used;
  });
  ckpt.scalars.w = Require(tensors, path, "ge2e.w", {}).data[0];
  ckpt.scalars.b = Require(tensors, path, "ge2e.b", {}).data[0];
  used += 2;
  if (used != tensors.size()) Fail(path, "unexpected extra tensors");
  if (!(ckpt.scalars.w > 0.0)) Fail(path, "GE2E scale w must be positive");
  return ckpt;
}

}  // namespace ge2e
