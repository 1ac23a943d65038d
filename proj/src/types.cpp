/* Copyright 2026 the pipeplan authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pipeplan/types.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace pipeplan {

namespace {

std::string layer_context(const ModelProfile &model, std::size_t pos) {
  std::ostringstream os;
  os << "model '" << model.name << "' layer at position " << pos + 1;
  return os.str();
}

} // namespace

const LayerSpec &ModelProfile::layer(int index) const {
  if (index < 1 || index > layer_count()) {
    std::ostringstream os;
    os << "layer index " << index << " outside 1.." << layer_count();
    throw InvalidArgument(os.str());
  }
  return layers[static_cast<std::size_t>(index - 1)];
}

std::int64_t ModelProfile::memory_in_range(int first_layer,
                                           int last_layer) const {
  if (first_layer < 1 || last_layer > layer_count() ||
      first_layer > last_layer) {
    std::ostringstream os;
    os << "layer range " << first_layer << ".." << last_layer
       << " outside 1.." << layer_count();
    throw InvalidArgument(os.str());
  }
  std::int64_t total = 0;
  for (int k = first_layer; k <= last_layer; ++k) {
    total += layers[static_cast<std::size_t>(k - 1)].memory_bytes;
  }
  return total;
}

void ModelProfile::validate() const {
  if (layers.empty()) {
    throw ValidationError("model '" + name + "' has no layers");
  }
  for (std::size_t pos = 0; pos < layers.size(); ++pos) {
    const LayerSpec &l = layers[pos];
    if (l.index != static_cast<int>(pos) + 1) {
      std::ostringstream os;
      os << layer_context(*this, pos) << " has index " << l.index
         << ", expected " << pos + 1;
      throw ValidationError(os.str());
    }
    if (l.base_time_per_sample < 0 || l.fixed_overhead < 0 ||
        l.output_bytes_per_sample < 0) {
      throw ValidationError(layer_context(*this, pos) +
                            " has a negative time or byte field");
    }
    if (l.memory_bytes <= 0) {
      throw ValidationError(layer_context(*this, pos) +
                            " must have memory_bytes > 0");
    }
  }
}

int DevicePool::index_of(const std::string &id) const {
  for (std::size_t i = 0; i < devices.size(); ++i) {
    if (devices[i].id == id) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

double DevicePool::bandwidth(int from, int to) const {
  return bandwidth_bps.at(static_cast<std::size_t>(from))
      .at(static_cast<std::size_t>(to));
}

double DevicePool::latency(int from, int to) const {
  if (latency_s.empty()) {
    return 0.0;
  }
  return latency_s.at(static_cast<std::size_t>(from))
      .at(static_cast<std::size_t>(to));
}

namespace {

void check_matrix_shape(const std::vector<std::vector<double>> &m,
                        std::size_t n, const char *what) {
  if (m.size() != n) {
    std::ostringstream os;
    os << what << " matrix has " << m.size() << " rows, expected " << n;
    throw ValidationError(os.str());
  }
  for (std::size_t r = 0; r < n; ++r) {
    if (m[r].size() != n) {
      std::ostringstream os;
      os << what << " matrix row " << r << " has " << m[r].size()
         << " entries, expected " << n;
      throw ValidationError(os.str());
    }
  }
}

// Entry-by-entry invariance under swapping devices a and b.
bool swap_invariant(const std::vector<std::vector<double>> &m, std::size_t a,
                    std::size_t b) {
  std::size_t n = m.size();
  auto mapped = [&](std::size_t i) { return i == a ? b : i == b ? a : i; };
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (m[mapped(r)][mapped(c)] != m[r][c]) {
        return false;
      }
    }
  }
  return true;
}

} // namespace

void DevicePool::validate() const {
  if (devices.empty()) {
    throw ValidationError("device pool is empty");
  }
  std::set<std::string> ids;
  for (const Device &d : devices) {
    if (d.id.empty()) {
      throw ValidationError("device with empty id");
    }
    if (!ids.insert(d.id).second) {
      throw ValidationError("duplicate device id '" + d.id + "'");
    }
    if (d.speed <= 0) {
      throw ValidationError("device '" + d.id + "' must have speed > 0");
    }
    if (d.memory_bytes <= 0) {
      throw ValidationError("device '" + d.id + "' must have memory_bytes > 0");
    }
  }

  std::size_t n = devices.size();
  check_matrix_shape(bandwidth_bps, n, "bandwidth");
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (r != c && bandwidth_bps[r][c] <= 0) {
        std::ostringstream os;
        os << "bandwidth between '" << devices[r].id << "' and '"
           << devices[c].id << "' must be > 0";
        throw ValidationError(os.str());
      }
    }
  }
  if (!latency_s.empty()) {
    check_matrix_shape(latency_s, n, "latency");
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        if (latency_s[r][c] < 0) {
          std::ostringstream os;
          os << "latency between '" << devices[r].id << "' and '"
             << devices[c].id << "' must be >= 0";
          throw ValidationError(os.str());
        }
      }
    }
  }

  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (devices[a].category != devices[b].category) {
        continue;
      }
      const Device &u = devices[a];
      const Device &v = devices[b];
      if (u.speed != v.speed || u.memory_bytes != v.memory_bytes) {
        throw ValidationError("devices '" + u.id + "' and '" + v.id +
                              "' share category '" + u.category +
                              "' but differ in speed or memory");
      }
      if (!swap_invariant(bandwidth_bps, a, b) ||
          (!latency_s.empty() && !swap_invariant(latency_s, a, b))) {
        throw ValidationError("devices '" + u.id + "' and '" + v.id +
                              "' share category '" + u.category +
                              "' but have different link rows or columns");
      }
    }
  }
}

std::vector<std::pair<std::string, std::vector<int>>>
DevicePool::categories() const {
  std::map<std::string, std::vector<int>> grouped;
  for (int i = 0; i < device_count(); ++i) {
    grouped[devices[static_cast<std::size_t>(i)].category].push_back(i);
  }
  std::vector<std::pair<std::string, std::vector<int>>> out;
  out.reserve(grouped.size());
  for (auto &[label, members] : grouped) {
    std::sort(members.begin(), members.end(), [this](int a, int b) {
      return devices[static_cast<std::size_t>(a)].id <
             devices[static_cast<std::size_t>(b)].id;
    });
    out.emplace_back(label, members);
  }
  return out;
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
  case ViolationKind::Coverage:
    return "coverage";
  case ViolationKind::Contiguity:
    return "contiguity";
  case ViolationKind::DeviceReuse:
    return "device-reuse";
  case ViolationKind::Memory:
    return "memory";
  case ViolationKind::UnknownDevice:
    return "unknown-device";
  case ViolationKind::LayerRange:
    return "layer-range";
  case ViolationKind::Microbatch:
    return "microbatch";
  }
  return "unknown";
}

std::string describe(const std::vector<Violation> &violations) {
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i > 0) {
      os << "; ";
    }
    os << to_string(violations[i].kind);
    if (violations[i].stage_index >= 0) {
      os << " at stage " << violations[i].stage_index;
    }
    os << ": " << violations[i].detail;
  }
  return os.str();
}

} // namespace pipeplan
