#pragma once

// Independent reference solvers used to cross-check the optimization kernel.
// They share no code with the kernel: LPs are solved by enumerating candidate
// active sets (every subset of n constraints from rows and bounds), MILPs by
// walking the integer lattice and solving the continuous remainder per point.

#include <optional>
#include <random>

#include "flexbid/opt_kernel.hpp"

namespace testkit {

// Minimum objective over all vertices, or nullopt when no feasible vertex
// exists. Requires every variable to have finite bounds (the feasible region
// is then a polytope, so nonempty implies a feasible vertex).
std::optional<double> lp_vertex_optimum(const flexbid::opt::Model& model);

// Enumerates all integer assignments; continuous leftovers are handled with
// the vertex oracle. nullopt when infeasible. Integrality marks are honored
// regardless of kBinary/kInteger.
std::optional<double> mip_enum_optimum(const flexbid::opt::Model& model);

// Random instance generators with small integer-ish data (denominator 2) so
// the oracles stay well conditioned. Both produce finite boxes only.
flexbid::opt::Model random_box_lp(std::mt19937_64& rng, int max_vars, int max_rows);
flexbid::opt::Model random_milp(std::mt19937_64& rng, int num_int, int num_cont,
                                int max_rows);

}  // namespace testkit
