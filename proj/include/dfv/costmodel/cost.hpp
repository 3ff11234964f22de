#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dfv/flowcore/provider.hpp"

namespace dfv::cost {

inline constexpr double kGiB = 1073741824.0;

/// One row of the attention-memory table. Multi-scale architectures have no
/// single attention shape and only carry their cited value.
struct ArchSpec {
  std::string name;
  bool multi_scale = false;
  std::uint64_t batch = 1;
  std::uint64_t heads = 1;
  std::uint64_t seq = 0;
  std::uint64_t blocks = 1;
  std::uint64_t dtype_bytes = 4;
  std::uint64_t frames = 1;
  std::optional<double> reference_gb;
};

void validate(const ArchSpec& spec);

/// batch * heads * seq^2 * dtype_bytes * blocks: every full score map of one
/// timestep. Throws UnsupportedShape for multi-scale specs and Domain when
/// the product overflows 64 bits.
std::uint64_t attention_bytes(const ArchSpec& spec);

enum class Verdict { Pass, Fail, NoReference, OutOfModel };
std::string_view to_string(Verdict v) noexcept;

struct MemoryRow {
  ArchSpec spec;
  std::optional<double> estimate_gib;
  std::optional<double> relative_error;  // (estimate - reference) / reference
  Verdict verdict = Verdict::NoReference;
};

std::vector<MemoryRow> memory_table(const std::vector<ArchSpec>& specs, double tolerance = 0.10);

void write_memory_csv(std::ostream& out, const std::vector<MemoryRow>& rows);
void write_memory_text(std::ostream& out, const std::vector<MemoryRow>& rows);

/// The six rows of the reference table (two of them multi-scale).
std::vector<ArchSpec> reference_architectures();

/// Reads `arch.<row>.<field>` keys (name, batch, heads, seq, blocks,
/// dtype_bytes, frames, reference_gb, shape=multi-scale). Rows keep the
/// order of their first key. Throws Config naming the row on bad input.
std::vector<ArchSpec> arch_specs_from_keys(const std::vector<std::pair<std::string, std::string>>& kv);

// --- measured efficiency ---------------------------------------------------

struct RunMeasurement {
  flow::CallStats calls;
  double millis = 0.0;
  std::int64_t peak_live_bytes = 0;  // grid bytes above the level at start
  Extents geometry;
  int steps = 0;
};

/// Runs `body` once, recording the model calls it makes, its wall-clock and
/// the peak of simultaneously live grid bytes.
RunMeasurement measure_run(flow::VelocityProvider& model, Extents geometry, int steps,
                           const std::function<void()>& body);

struct EfficiencyReport {
  std::uint64_t model_calls_edit = 0;
  std::uint64_t model_calls_sample = 0;
  std::uint64_t items_edit = 0;
  std::uint64_t items_sample = 0;
  double wall_millis_edit = 0.0;
  double wall_millis_sample = 0.0;
  std::int64_t peak_bytes_edit = 0;
  std::int64_t peak_bytes_sample = 0;
  double latency_ratio = 0.0;
  double memory_ratio = 0.0;
};

/// Throws Config if the two runs differ in geometry or step count.
EfficiencyReport measure_efficiency(const RunMeasurement& edit, const RunMeasurement& sample);

void write_efficiency_csv(std::ostream& out, const EfficiencyReport& r);

}  // namespace dfv::cost
