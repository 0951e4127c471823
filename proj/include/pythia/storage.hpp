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

#include <cstdint>
#include <ostream>

namespace pythia {

// Hardware budget of the prefetcher's metadata. The functional model keeps
// wider values at runtime; these widths describe the storage a hardware
// implementation would provision.
struct StorageBudget {
  std::uint64_t vaults = 2;
  std::uint64_t planes_per_vault = 3;
  std::uint64_t feature_bins = 128;
  std::uint64_t actions = 16;
  std::uint64_t q_value_bits = 16;

  std::uint64_t eq_entries = 256;
  std::uint64_t state_bits = 21;
  std::uint64_t action_bits = 5;
  std::uint64_t reward_bits = 5;
  std::uint64_t filled_bits = 1;
  std::uint64_t address_bits = 16;
};

struct StorageReport {
  std::uint64_t qvstore_bits = 0;
  std::uint64_t eq_entry_bits = 0;
  std::uint64_t eq_bits = 0;

  std::uint64_t total_bits() const { return qvstore_bits + eq_bits; }
  static double kib(std::uint64_t bits) { return static_cast<double>(bits) / 8.0 / 1024.0; }
  double qvstore_kib() const { return kib(qvstore_bits); }
  double eq_kib() const { return kib(eq_bits); }
  double total_kib() const { return kib(total_bits()); }
};

inline StorageReport storage_report(const StorageBudget& b = {})
{
  StorageReport r;
  r.qvstore_bits = b.vaults * b.planes_per_vault * b.feature_bins * b.actions * b.q_value_bits;
  r.eq_entry_bits = b.state_bits + b.action_bits + b.reward_bits + b.filled_bits + b.address_bits;
  r.eq_bits = b.eq_entries * r.eq_entry_bits;
  return r;
}

inline void print_storage_report(std::ostream& out, const StorageBudget& b, const StorageReport& r)
{
  out << "structure,description,bits,KiB\n";
  out << "QVStore," << b.vaults << " vaults x " << b.planes_per_vault << " planes x " << b.feature_bins << " x "
      << b.actions << " entries x " << b.q_value_bits << "b," << r.qvstore_bits << ',' << r.qvstore_kib() << '\n';
  out << "EQ," << b.eq_entries << " entries x " << r.eq_entry_bits << "b," << r.eq_bits << ',' << r.eq_kib() << '\n';
  out << "Total,," << r.total_bits() << ',' << r.total_kib() << '\n';
}

} // namespace pythia
