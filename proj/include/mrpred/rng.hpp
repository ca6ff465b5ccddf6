#pragma once

#include <cstdint>
#include <random>

namespace mrpred {

using Engine = std::mt19937_64;

// SplitMix64 finalizer (Steele, Lea & Flood).
std::uint64_t splitmix64(std::uint64_t x);

// Seed for replication `index` of an experiment. Depends only on the pair,
// so replications can run on any worker in any order.
std::uint64_t child_seed(std::uint64_t master_seed, std::uint64_t index);

Engine make_engine(std::uint64_t seed);

}  // namespace mrpred
