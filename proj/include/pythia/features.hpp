/*
 *    Copyright 2026 The pythia-sim Contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pythia/common.hpp"
#include "pythia/trace.hpp"

namespace pythia {

enum class ControlComponent { PC, PCPath3, PCxorBranchPC, None };
enum class DataComponent { LineAddress, PageNumber, PageOffset, Delta, Last4Offsets, Last4Deltas, OffsetXorDelta, None };

inline constexpr std::array<ControlComponent, 4> kControlComponents{ControlComponent::PC, ControlComponent::PCPath3,
                                                                    ControlComponent::PCxorBranchPC, ControlComponent::None};
inline constexpr std::array<DataComponent, 8> kDataComponents{
    DataComponent::LineAddress, DataComponent::PageNumber,  DataComponent::PageOffset,     DataComponent::Delta,
    DataComponent::Last4Offsets, DataComponent::Last4Deltas, DataComponent::OffsetXorDelta, DataComponent::None};

constexpr std::string_view to_string(ControlComponent c)
{
  switch (c) {
  case ControlComponent::PC: return "pc";
  case ControlComponent::PCPath3: return "pcpath";
  case ControlComponent::PCxorBranchPC: return "pcxorbranch";
  case ControlComponent::None: return "none";
  }
  return "?";
}

constexpr std::string_view to_string(DataComponent d)
{
  switch (d) {
  case DataComponent::LineAddress: return "line";
  case DataComponent::PageNumber: return "page";
  case DataComponent::PageOffset: return "offset";
  case DataComponent::Delta: return "delta";
  case DataComponent::Last4Offsets: return "last4offsets";
  case DataComponent::Last4Deltas: return "last4deltas";
  case DataComponent::OffsetXorDelta: return "offsetxordelta";
  case DataComponent::None: return "none";
  }
  return "?";
}

class UnsupportedFeature : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

struct FeatureSpec {
  ControlComponent control = ControlComponent::None;
  DataComponent data = DataComponent::None;

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;

  std::string name() const { return std::string(to_string(control)) + "+" + std::string(to_string(data)); }

  // The trace format has no branch channel, so the branch-XOR component
  // cannot be computed; (none, none) carries no information.
  bool supported() const
  {
    return control != ControlComponent::PCxorBranchPC && !(control == ControlComponent::None && data == DataComponent::None);
  }

  // Parses canonical names such as "pc+delta" or "none+last4deltas".
  static FeatureSpec parse(std::string_view text)
  {
    auto plus = text.find('+');
    if (plus == std::string_view::npos)
      throw std::invalid_argument("feature '" + std::string(text) + "' is not of the form control+data");
    auto c = text.substr(0, plus);
    auto d = text.substr(plus + 1);
    FeatureSpec spec;
    bool found = false;
    for (auto cc : kControlComponents)
      if (to_string(cc) == c) {
        spec.control = cc;
        found = true;
      }
    if (!found)
      throw std::invalid_argument("unknown control-flow component '" + std::string(c) + "'");
    found = false;
    for (auto dd : kDataComponents)
      if (to_string(dd) == d) {
        spec.data = dd;
        found = true;
      }
    if (!found)
      throw std::invalid_argument("unknown data-flow component '" + std::string(d) + "'");
    return spec;
  }
};

inline void validate_features(const std::vector<FeatureSpec>& specs)
{
  if (specs.empty())
    throw std::invalid_argument("feature set must not be empty");
  for (const auto& s : specs) {
    if (s.control == ControlComponent::None && s.data == DataComponent::None)
      throw std::invalid_argument("feature none+none is rejected");
    if (s.control == ControlComponent::PCxorBranchPC)
      throw UnsupportedFeature("feature " + s.name() + " needs branch PCs, which traces do not carry");
  }
}

// Every control x data combination: 4 x 8 = 32 entries.
inline std::vector<FeatureSpec> enumerate_feature_space()
{
  std::vector<FeatureSpec> out;
  for (auto c : kControlComponents)
    for (auto d : kDataComponents)
      out.push_back({c, d});
  return out;
}

struct StateVector {
  std::vector<std::uint64_t> values;
  std::shared_ptr<const std::vector<FeatureSpec>> specs;

  std::size_t size() const { return values.size(); }
  friend bool operator==(const StateVector& a, const StateVector& b) { return a.values == b.values; }
};

namespace detail {

inline constexpr std::uint64_t kSequenceSeed = 0x243f6a8885a308d3ULL;

template <typename Range>
std::uint64_t fold_sequence(const Range& oldest_to_newest)
{
  std::uint64_t h = kSequenceSeed;
  for (auto v : oldest_to_newest)
    h = mix64(h ^ static_cast<std::uint64_t>(v));
  return h;
}

} // namespace detail

// Joins a control-flow value with a data-flow value into one 64-bit feature.
constexpr std::uint64_t fold_components(std::uint64_t control, std::uint64_t data)
{
  return mix64(mix64(control + 0x9e3779b97f4a7c15ULL) ^ data);
}

// Per-simulation history behind the sequence and delta components.
class FeatureComponentState
{
public:
  static constexpr std::size_t kPcHistory = 3;
  static constexpr std::size_t kSequenceLength = 4;

  explicit FeatureComponentState(bool global_delta = false) : global_delta_(global_delta) {}

  struct Components {
    std::uint64_t pc;
    std::uint64_t pc_path;
    LineAddr line;
    std::uint64_t page;
    std::uint64_t offset;
    std::int64_t delta;
    std::uint64_t last4_offsets;
    std::uint64_t last4_deltas;
  };

  // Component values for `req`, with sequences holding the previous entries
  // followed by the current one. Does not modify history.
  Components peek(const MemoryRequest& req) const
  {
    Components c{};
    c.pc = req.pc;
    c.line = line_of(req.address);
    c.page = page_of_line(c.line);
    c.offset = page_offset_of_line(c.line);
    c.delta = 0;
    if (global_delta_) {
      if (last_line_)
        c.delta = static_cast<std::int64_t>(c.line) - static_cast<std::int64_t>(*last_line_);
    } else if (auto it = page_last_line_.find(c.page); it != page_last_line_.end()) {
      c.delta = static_cast<std::int64_t>(c.line) - static_cast<std::int64_t>(it->second);
    }

    c.pc_path = c.pc;
    for (std::size_t i = pcs_.size() >= kPcHistory ? pcs_.size() - (kPcHistory - 1) : 0; i < pcs_.size(); ++i)
      c.pc_path ^= pcs_[i];

    auto seq = [](const auto& hist, auto current) {
      std::array<std::uint64_t, kSequenceLength> buf{};
      std::size_t n = 0;
      std::size_t start = hist.size() >= kSequenceLength ? hist.size() - (kSequenceLength - 1) : 0;
      for (std::size_t i = start; i < hist.size(); ++i)
        buf[n++] = static_cast<std::uint64_t>(hist[i]);
      buf[n++] = static_cast<std::uint64_t>(current);
      return detail::fold_sequence(std::span<const std::uint64_t>(buf.data(), n));
    };
    c.last4_offsets = seq(offsets_, c.offset);
    c.last4_deltas = seq(deltas_, c.delta);
    return c;
  }

  void update(const Components& c)
  {
    push(pcs_, c.pc, kPcHistory);
    push(offsets_, c.offset, kSequenceLength);
    push(deltas_, c.delta, kSequenceLength);
    page_last_line_[c.page] = c.line;
    last_line_ = c.line;
  }

  const std::deque<std::uint64_t>& pc_history() const { return pcs_; }
  const std::deque<std::uint64_t>& offset_history() const { return offsets_; }
  const std::deque<std::int64_t>& delta_history() const { return deltas_; }

private:
  template <typename T>
  static void push(std::deque<T>& q, T v, std::size_t cap)
  {
    q.push_back(v);
    while (q.size() > cap)
      q.pop_front();
  }

  bool global_delta_;
  std::unordered_map<std::uint64_t, LineAddr> page_last_line_;
  std::optional<LineAddr> last_line_;
  std::deque<std::uint64_t> pcs_;
  std::deque<std::uint64_t> offsets_;
  std::deque<std::int64_t> deltas_;
};

inline std::uint64_t control_value(ControlComponent c, const FeatureComponentState::Components& v)
{
  switch (c) {
  case ControlComponent::PC: return v.pc;
  case ControlComponent::PCPath3: return v.pc_path;
  case ControlComponent::None: return 0;
  case ControlComponent::PCxorBranchPC: break;
  }
  throw UnsupportedFeature("control component pcxorbranch needs branch PCs, which traces do not carry");
}

inline std::uint64_t data_value(DataComponent d, const FeatureComponentState::Components& v)
{
  switch (d) {
  case DataComponent::LineAddress: return v.line;
  case DataComponent::PageNumber: return v.page;
  case DataComponent::PageOffset: return v.offset;
  case DataComponent::Delta: return static_cast<std::uint64_t>(v.delta);
  case DataComponent::Last4Offsets: return v.last4_offsets;
  case DataComponent::Last4Deltas: return v.last4_deltas;
  case DataComponent::OffsetXorDelta: return v.offset ^ static_cast<std::uint64_t>(v.delta);
  case DataComponent::None: return 0;
  }
  return 0;
}

inline std::uint64_t feature_value(const FeatureSpec& spec, const FeatureComponentState::Components& v)
{
  return fold_components(control_value(spec.control, v), data_value(spec.data, v));
}

// Builds the state vector for `req` and then advances the history registers.
inline StateVector extract_state(const MemoryRequest& req, FeatureComponentState& state,
                                 const std::shared_ptr<const std::vector<FeatureSpec>>& specs)
{
  auto comps = state.peek(req);
  StateVector sv;
  sv.specs = specs;
  sv.values.reserve(specs->size());
  for (const auto& s : *specs)
    sv.values.push_back(feature_value(s, comps));
  state.update(comps);
  return sv;
}

inline StateVector extract_state(const MemoryRequest& req, FeatureComponentState& state, const std::vector<FeatureSpec>& specs)
{
  return extract_state(req, state, std::make_shared<const std::vector<FeatureSpec>>(specs));
}

} // namespace pythia
