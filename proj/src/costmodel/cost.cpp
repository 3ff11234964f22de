#include "dfv/costmodel/cost.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "dfv/numcore/error.hpp"

namespace dfv::cost {

void validate(const ArchSpec& spec) {
  if (spec.name.empty()) fail(ErrorKind::Parameter, "architecture without a name");
  if (spec.multi_scale) return;
  if (spec.batch == 0 || spec.heads == 0 || spec.seq == 0 || spec.blocks == 0 || spec.dtype_bytes == 0 ||
      spec.frames == 0) {
    fail(ErrorKind::Parameter, spec.name + ": every extent must be positive");
  }
}

std::uint64_t attention_bytes(const ArchSpec& spec) {
  validate(spec);
  if (spec.multi_scale) fail(ErrorKind::UnsupportedShape, spec.name + ": multi-scale attention has no closed form here");
  std::uint64_t bytes = 1;
  for (std::uint64_t f : {spec.batch, spec.heads, spec.seq, spec.seq, spec.dtype_bytes, spec.blocks}) {
    if (__builtin_mul_overflow(bytes, f, &bytes)) fail(ErrorKind::Domain, spec.name + ": byte count overflows");
  }
  return bytes;
}

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::NoReference: return "n/a";
    case Verdict::OutOfModel: return "out-of-model";
  }
  return "?";
}

std::vector<MemoryRow> memory_table(const std::vector<ArchSpec>& specs, double tolerance) {
  std::vector<MemoryRow> rows;
  rows.reserve(specs.size());
  for (const auto& s : specs) {
    MemoryRow row{s, std::nullopt, std::nullopt, Verdict::OutOfModel};
    if (!s.multi_scale) {
      const double gib = double(attention_bytes(s)) / kGiB;
      row.estimate_gib = gib;
      if (s.reference_gb) {
        row.relative_error = (gib - *s.reference_gb) / *s.reference_gb;
        row.verdict = std::abs(*row.relative_error) <= tolerance ? Verdict::Pass : Verdict::Fail;
      } else {
        row.verdict = Verdict::NoReference;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string shape_of(const ArchSpec& s) {
  if (s.multi_scale) return "multi-scale";
  return fmt::format("[{},{},{},{}]", s.batch, s.heads, s.seq, s.seq);
}

std::string opt_num(const std::optional<double>& v, const char* spec) {
  return v ? fmt::format(fmt::runtime(spec), *v) : std::string("n/a");
}

}  // namespace

void write_memory_csv(std::ostream& out, const std::vector<MemoryRow>& rows) {
  out << "name,shape,blocks,dtype_bytes,frames,estimate_gib,reference_gb,relative_error,verdict\n";
  for (const auto& r : rows) {
    out << r.spec.name << ',' << shape_of(r.spec) << ',' << r.spec.blocks << ',' << r.spec.dtype_bytes << ','
        << r.spec.frames << ',' << opt_num(r.estimate_gib, "{:.4f}") << ',' << opt_num(r.spec.reference_gb, "{:g}")
        << ',' << opt_num(r.relative_error, "{:.4f}") << ',' << to_string(r.verdict) << '\n';
  }
}

void write_memory_text(std::ostream& out, const std::vector<MemoryRow>& rows) {
  out << fmt::format("{:<16} {:>26} {:>6} {:>12} {:>10} {:>8}  {}\n", "model", "attention shape", "blocks",
                     "estimate GiB", "cited GB", "rel err", "verdict");
  for (const auto& r : rows) {
    const std::string rel = r.relative_error ? fmt::format("{:+.1f}%", 100.0 * *r.relative_error) : "n/a";
    out << fmt::format("{:<16} {:>26} {:>6} {:>12} {:>10} {:>8}  {}\n", r.spec.name, shape_of(r.spec), r.spec.blocks,
                       opt_num(r.estimate_gib, "{:.2f}"), opt_num(r.spec.reference_gb, "{:g}"), rel,
                       to_string(r.verdict));
  }
}

std::vector<ArchSpec> reference_architectures() {
  return {
      {"StableDiffusion", true, 0, 0, 0, 32, 4, 1, 7.0},
      {"HunyuanDiT", false, 2, 1, 4096, 80, 4, 1, 10.0},
      {"Zeroscope", true, 0, 0, 0, 64, 4, 8, 25.0},
      {"HunyuanVideo", false, 1, 24, 11520, 48, 4, 41, 612.0},
      {"Wan2.1-14B", false, 1, 40, 11264, 40, 4, 41, 794.0},
      {"CogVideoX-5B", false, 2, 48, 11490, 40, 4, 41, 1871.0},
  };
}

std::vector<ArchSpec> arch_specs_from_keys(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::vector<std::string> order;
  std::map<std::string, ArchSpec> rows;
  for (const auto& [key, value] : kv) {
    if (key.rfind("arch.", 0) != 0) continue;
    const auto dot = key.find('.', 5);
    if (dot == std::string::npos) fail(ErrorKind::Config, "key '" + key + "' needs the form arch.<row>.<field>");
    const std::string row = key.substr(5, dot - 5);
    const std::string field = key.substr(dot + 1);
    auto [it, fresh] = rows.try_emplace(row);
    if (fresh) order.push_back(row);
    ArchSpec& s = it->second;
    auto bad = [&](const std::string& why) { fail(ErrorKind::Config, "arch row '" + row + "': " + why); };
    auto as_u64 = [&](std::uint64_t& dst) {
      const char* b = value.data();
      const auto [p, ec] = std::from_chars(b, b + value.size(), dst);
      if (ec != std::errc() || p != b + value.size()) bad(field + " must be a non-negative integer, got '" + value + "'");
    };
    if (field == "name") {
      s.name = value;
    } else if (field == "shape") {
      if (value != "multi-scale") bad("shape only accepts 'multi-scale'");
      s.multi_scale = true;
    } else if (field == "batch") {
      as_u64(s.batch);
    } else if (field == "heads") {
      as_u64(s.heads);
    } else if (field == "seq") {
      as_u64(s.seq);
    } else if (field == "blocks") {
      as_u64(s.blocks);
    } else if (field == "dtype_bytes") {
      as_u64(s.dtype_bytes);
    } else if (field == "frames") {
      as_u64(s.frames);
    } else if (field == "reference_gb") {
      double v = 0.0;
      const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || p != value.data() + value.size() || !(v > 0.0)) bad("reference_gb must be a positive number");
      s.reference_gb = v;
    } else {
      bad("unknown field '" + field + "'");
    }
  }
  std::vector<ArchSpec> out;
  for (const auto& row : order) {
    ArchSpec s = rows.at(row);
    if (s.name.empty()) s.name = row;
    try {
      validate(s);
    } catch (const Error& e) {
      fail(ErrorKind::Config, "arch row '" + row + "': " + e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

RunMeasurement measure_run(flow::VelocityProvider& model, Extents geometry, int steps,
                           const std::function<void()>& body) {
  const flow::CallStats before = model.stats();
  const std::int64_t base = grid_memory().live_bytes;
  reset_grid_peak();
  const auto t0 = std::chrono::steady_clock::now();
  body();
  const auto t1 = std::chrono::steady_clock::now();
  RunMeasurement m;
  m.peak_live_bytes = grid_memory().peak_bytes - base;
  m.millis = std::chrono::duration<double, std::milli>(t1 - t0).count();
  const flow::CallStats& now = model.stats();
  m.calls.calls = now.calls - before.calls;
  m.calls.items = now.items - before.items;
  for (const auto& [batch, n] : now.calls_by_batch) {
    const auto it = before.calls_by_batch.find(batch);
    const std::uint64_t prev = it == before.calls_by_batch.end() ? 0 : it->second;
    if (n > prev) m.calls.calls_by_batch[batch] = n - prev;
  }
  m.geometry = std::move(geometry);
  m.steps = steps;
  return m;
}

EfficiencyReport measure_efficiency(const RunMeasurement& edit, const RunMeasurement& sample) {
  if (edit.geometry != sample.geometry) fail(ErrorKind::Config, "edit and sample runs use different geometries");
  if (edit.steps != sample.steps) fail(ErrorKind::Config, "edit and sample runs use different step counts");
  EfficiencyReport r;
  r.model_calls_edit = edit.calls.calls;
  r.model_calls_sample = sample.calls.calls;
  r.items_edit = edit.calls.items;
  r.items_sample = sample.calls.items;
  r.wall_millis_edit = edit.millis;
  r.wall_millis_sample = sample.millis;
  r.peak_bytes_edit = edit.peak_live_bytes;
  r.peak_bytes_sample = sample.peak_live_bytes;
  r.latency_ratio = sample.millis > 0.0 ? edit.millis / sample.millis : 0.0;
  r.memory_ratio = sample.peak_live_bytes > 0 ? double(edit.peak_live_bytes) / double(sample.peak_live_bytes) : 0.0;
  return r;
}

void write_efficiency_csv(std::ostream& out, const EfficiencyReport& r) {
  out << "model_calls_edit,model_calls_sample,items_edit,items_sample,wall_millis_edit,wall_millis_sample,"
         "peak_bytes_edit,peak_bytes_sample,latency_ratio,memory_ratio\n";
  out << fmt::format("{},{},{},{},{:.3f},{:.3f},{},{},{:.4f},{:.4f}\n", r.model_calls_edit, r.model_calls_sample,
                     r.items_edit, r.items_sample, r.wall_millis_edit, r.wall_millis_sample, r.peak_bytes_edit,
                     r.peak_bytes_sample, r.latency_ratio, r.memory_ratio);
}

}  // namespace dfv::cost
