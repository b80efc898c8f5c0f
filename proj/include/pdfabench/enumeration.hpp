#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pdfabench/pdfa.hpp"

namespace pdfabench {

inline constexpr int kMaxEnumeratedStates = 4;

/// Labeled-transition skeleton of a binary unifilar machine: targets[s][x] is
/// the successor of state s on symbol x, or -1 when x is not emitted.
struct Topology {
    std::vector<std::array<int, kAlphabetSize>> targets;
    std::string canonical_key;

    std::size_t n_states() const noexcept { return targets.size(); }
    friend bool operator==(Topology const&, Topology const&) = default;
};

/// Minimum over all state relabelings of the edge-list encoding. Symbols are
/// never relabeled. Equal keys iff the topologies are isomorphic.
std::string canonical_form(Topology const& topology);

bool is_strongly_connected(Topology const& topology);

/// Moore reduction with each state's set of emitted symbols as its output.
bool is_topologically_minimal(Topology const& topology);

/// All strongly connected, topologically minimal topologies on exactly
/// n_states states, one per isomorphism class, sorted by canonical key.
/// Throws UnsupportedSize outside 1..4.
std::vector<Topology> enumerate_topologies(int n_states);

/// Random emission probabilities: p(1|s) ~ Uniform(0,1) where both symbols
/// are allowed, 1 on single-edge states. Draws that fail is_minimal are
/// redrawn; after 100 failures throws DegenerateTopology.
Pdfa assign_emissions(Topology const& topology, std::uint64_t seed, std::string machine_id = {});

inline constexpr int kMaxEmissionAttempts = 100;

/// Library of every topology with 1..max_states states, `draws` emission
/// draws each. Ids look like "n3_0042_d0". Seeds derive from `seed`.
/// Degenerate topologies are skipped and reported through `skipped`.
std::vector<Pdfa> build_library(int max_states, int draws, std::uint64_t seed,
                                std::vector<std::string>* skipped = nullptr);

/// One topology per line: canonical key, a tab, then "from,symbol,to" triples.
void write_topologies(std::ostream& out, std::vector<Topology> const& topologies);
std::vector<Topology> read_topologies(std::istream& in, std::string const& source = "<stream>");

}  // namespace pdfabench
