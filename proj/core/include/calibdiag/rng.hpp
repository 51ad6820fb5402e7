#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace calibdiag {

using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Independent stream seed for one (cell, replication) of an experiment, so
// results do not depend on the order in which replications run.
std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t cell,
                          std::uint64_t replication) noexcept;

// Beta(a, b) via two gamma draws.
double sample_beta(Engine& engine, double a, double b);

// Runs body(i) for i in [0, n) on up to `threads` workers (0 = hardware
// concurrency). Callers write results by index, so the outcome does not
// depend on scheduling. The first exception thrown by a body is rethrown.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace calibdiag
