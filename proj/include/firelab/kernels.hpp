#pragma once

// Data-parallel kernels. Each has a serial reference that the OpenMP version
// must reproduce exactly; the test suite compares them and bench/ times them.

#include <cstdint>
#include <span>
#include <vector>

#include "firelab/graph_spaces.hpp"

namespace firelab {

/// Selects the serial reference or the OpenMP path of a kernel.
enum class Execution { Serial, Parallel };

} // namespace firelab

namespace firelab::kernels {

/// neighbors(spec, front[i]) for every i.
std::vector<std::vector<Vertex>> neighbor_lists_serial(const GraphSpec& spec, std::span<const Vertex> front);
std::vector<std::vector<Vertex>> neighbor_lists(const GraphSpec& spec, std::span<const Vertex> front);

/// Neighbor lists of `front` concatenated in front order.
std::vector<Vertex> expand_frontier_serial(const GraphSpec& spec, std::span<const Vertex> front);
std::vector<Vertex> expand_frontier(const GraphSpec& spec, std::span<const Vertex> front);

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int thread_count();

} // namespace firelab::kernels
