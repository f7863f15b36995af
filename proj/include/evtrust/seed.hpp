#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace evtrust {

/// Engine used for every seeded stream in the simulator.
using Rng = std::mt19937_64;

/// Purpose tags used for seed derivation. Any string works; these are the
/// ones the simulator uses.
namespace seed_tag {
inline constexpr std::string_view kDataset = "dataset";
inline constexpr std::string_view kPartition = "partition";
inline constexpr std::string_view kSplit = "split";
inline constexpr std::string_view kTopology = "topology";
inline constexpr std::string_view kNodeInit = "node-init";
inline constexpr std::string_view kNodeShuffle = "node-shuffle";
inline constexpr std::string_view kValSubset = "val-subset";
inline constexpr std::string_view kAttempt = "attempt";
}  // namespace seed_tag

/// 64-bit FNV-1a of the tag bytes.
std::uint64_t hash_tag(std::string_view tag);

/// Pure, platform-independent seed mix of (master, tag, index). Built from
/// splitmix64 finalizers so neighbouring inputs land far apart.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view tag, std::uint64_t index);

}  // namespace evtrust
