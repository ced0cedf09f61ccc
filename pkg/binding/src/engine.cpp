// Native permutation engine for dataloader integration.
//
// Reimplements the pinned randomness contract (SplitMix64 stream, FNV-1a
// seed derivation, threshold-rejection bounded draws, gap-bijection subset
// sampling, Fisher-Yates shuffles) so that for identical inputs the index
// lists are bit-identical to the reference pipeline. The batch entry point
// drops the GIL while it works, so dataloader worker threads scale.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace py = pybind11;

namespace {

constexpr uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;
constexpr uint64_t kMix1 = 0xBF58476D1CE4E5B9ULL;
constexpr uint64_t kMix2 = 0x94D049BB133111EBULL;
constexpr uint64_t kFnvOffset = 0xCBF29CE484222325ULL;
constexpr uint64_t kFnvPrime = 0x100000001B3ULL;
constexpr int kRequireMoveRetries = 16;

struct Rng {
  uint64_t state;
};

inline uint64_t next_u64(Rng& rng) {
  uint64_t z = (rng.state += kGoldenGamma);
  z = (z ^ (z >> 30)) * kMix1;
  z = (z ^ (z >> 27)) * kMix2;
  return z ^ (z >> 31);
}

uint64_t fnv1a64(const std::string& data) {
  uint64_t h = kFnvOffset;
  for (unsigned char byte : data) {
    h = (h ^ byte) * kFnvPrime;
  }
  return h;
}

uint64_t derive_clip_seed(uint64_t global_seed, const std::string& clip_id) {
  Rng rng{fnv1a64(clip_id) ^ global_seed};
  return next_u64(rng);
}

uint64_t bounded_uniform(Rng& rng, uint64_t bound) {
  // bound >= 1; threshold is 2^64 mod bound via unsigned wraparound.
  const uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const uint64_t r = next_u64(rng);
    if (r >= threshold) return r % bound;
  }
}

struct InfeasibleError : std::runtime_error {
  InfeasibleError(long long requested, long long feasible, long long n, long long gap)
      : std::runtime_error("cannot select " + std::to_string(requested) + " of " +
                           std::to_string(n) + " indices with min gap " + std::to_string(gap) +
                           "; feasible max is " + std::to_string(feasible)) {}
};

struct EngineSpec {
  bool block_mode = false;
  bool has_count = false;
  long long count = 0;
  double ratio = 0.0;
  long long block_size = 0;
  long long min_gap = 0;
  bool has_gap_ratio = false;
  double gap_ratio = 0.0;
  bool require_move = false;
};

long long feasible_max_count(long long n, long long min_gap) {
  if (min_gap <= 1) return n;
  return n > 0 ? (n - 1) / min_gap + 1 : 0;
}

long long resolve_count(const EngineSpec& spec, long long units) {
  if (spec.has_count) return spec.count;
  return static_cast<long long>(std::floor(spec.ratio * static_cast<double>(units)));
}

long long resolve_gap(const EngineSpec& spec, long long units) {
  if (spec.has_gap_ratio) {
    return static_cast<long long>(std::floor(spec.gap_ratio * static_cast<double>(units)));
  }
  return spec.min_gap;
}

std::vector<long long> select_subset(long long n, long long count, long long min_gap, Rng& rng) {
  const long long feasible = feasible_max_count(n, min_gap);
  if (count > feasible) throw InfeasibleError(count, feasible, n, min_gap);
  std::vector<long long> out;
  if (count == 0) return out;
  const long long spread = std::max<long long>(1, min_gap) - 1;
  const long long m = n - (count - 1) * spread;
  std::set<long long> chosen;  // iterates ascending, matching the sorted compact set
  for (long long j = m - count; j < m; ++j) {
    const long long t =
        static_cast<long long>(bounded_uniform(rng, static_cast<uint64_t>(j + 1)));
    if (chosen.count(t)) {
      chosen.insert(j);
    } else {
      chosen.insert(t);
    }
  }
  out.reserve(count);
  long long i = 0;
  for (long long y : chosen) out.push_back(y + (i++) * spread);
  return out;
}

void fisher_yates(std::vector<long long>& items, Rng& rng) {
  for (long long i = static_cast<long long>(items.size()) - 1; i > 0; --i) {
    const uint64_t j = bounded_uniform(rng, static_cast<uint64_t>(i + 1));
    std::swap(items[i], items[static_cast<long long>(j)]);
  }
}

std::vector<long long> permute_selected(const std::vector<long long>& positions,
                                        bool require_move, Rng& rng) {
  if (positions.size() < 2) return positions;
  for (int attempt = 0; attempt < kRequireMoveRetries + 1; ++attempt) {
    std::vector<long long> shuffled = positions;
    fisher_yates(shuffled, rng);
    if (!require_move || shuffled != positions) return shuffled;
  }
  std::vector<long long> rotated(positions.begin() + 1, positions.end());
  rotated.push_back(positions.front());
  return rotated;
}

std::vector<long long> frame_permutation(long long n, const EngineSpec& spec, Rng& rng) {
  const long long count = resolve_count(spec, n);
  const auto selection = select_subset(n, count, resolve_gap(spec, n), rng);
  const auto targets = permute_selected(selection, spec.require_move, rng);
  std::vector<long long> map(n);
  std::iota(map.begin(), map.end(), 0);
  for (size_t i = 0; i < selection.size(); ++i) map[selection[i]] = targets[i];
  return map;
}

std::vector<long long> block_permutation(long long n, const EngineSpec& spec, Rng& rng) {
  const long long k = spec.block_size;
  const long long m = n / k;
  const long long count = resolve_count(spec, m);
  const auto selection = select_subset(m, count, resolve_gap(spec, m), rng);
  const auto targets = permute_selected(selection, spec.require_move, rng);
  std::vector<long long> block_map(m);
  std::iota(block_map.begin(), block_map.end(), 0);
  for (size_t i = 0; i < selection.size(); ++i) block_map[selection[i]] = targets[i];
  std::vector<long long> map(n);
  std::iota(map.begin(), map.end(), 0);
  for (long long b = 0; b < m; ++b) {
    if (block_map[b] == b) continue;
    for (long long offset = 0; offset < k; ++offset) {
      map[b * k + offset] = block_map[b] * k + offset;
    }
  }
  return map;
}

std::vector<long long> permute_one(const std::string& clip_id, long long n_frames,
                                   const EngineSpec& spec, uint64_t global_seed) {
  Rng rng{derive_clip_seed(global_seed, clip_id)};
  return spec.block_mode ? block_permutation(n_frames, spec, rng)
                         : frame_permutation(n_frames, spec, rng);
}

std::vector<std::vector<long long>> permute_batch(const std::vector<std::string>& clip_ids,
                                                  const std::vector<long long>& n_frames,
                                                  const EngineSpec& spec, uint64_t global_seed) {
  std::vector<std::vector<long long>> out;
  out.reserve(clip_ids.size());
  for (size_t i = 0; i < clip_ids.size(); ++i) {
    out.push_back(permute_one(clip_ids[i], n_frames[i], spec, global_seed));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_engine, m) {
  m.doc() = "Seed-deterministic frame/block permutation engine";

  py::register_exception<InfeasibleError>(m, "EngineInfeasible");

  py::class_<EngineSpec>(m, "EngineSpec")
      .def(py::init<>())
      .def_readwrite("block_mode", &EngineSpec::block_mode)
      .def_readwrite("has_count", &EngineSpec::has_count)
      .def_readwrite("count", &EngineSpec::count)
      .def_readwrite("ratio", &EngineSpec::ratio)
      .def_readwrite("block_size", &EngineSpec::block_size)
      .def_readwrite("min_gap", &EngineSpec::min_gap)
      .def_readwrite("has_gap_ratio", &EngineSpec::has_gap_ratio)
      .def_readwrite("gap_ratio", &EngineSpec::gap_ratio)
      .def_readwrite("require_move", &EngineSpec::require_move);

  m.def("derive_clip_seed", &derive_clip_seed, py::arg("global_seed"), py::arg("clip_id"));
  m.def("permute_one", &permute_one, py::arg("clip_id"), py::arg("n_frames"), py::arg("spec"),
        py::arg("global_seed"));
  m.def("permute_batch", &permute_batch, py::arg("clip_ids"), py::arg("n_frames"),
        py::arg("spec"), py::arg("global_seed"),
        py::call_guard<py::gil_scoped_release>());
}
