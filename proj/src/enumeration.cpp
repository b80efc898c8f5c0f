#include "pdfabench/enumeration.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "pdfabench/error.hpp"
#include "pdfabench/seeds.hpp"

namespace pdfabench {

namespace {

std::string encode(Topology const& topology, std::vector<int> const& relabel) {
    auto const n = topology.n_states();
    std::vector<std::size_t> original(n);
    for (std::size_t s = 0; s < n; ++s) original[static_cast<std::size_t>(relabel[s])] = s;

    std::string key = std::to_string(n) + ":";
    for (std::size_t i = 0; i < n; ++i) {
        if (i) key += ',';
        for (int x = 0; x < kAlphabetSize; ++x) {
            int const t = topology.targets[original[i]][static_cast<std::size_t>(x)];
            key += t < 0 ? '-' : static_cast<char>('0' + relabel[static_cast<std::size_t>(t)]);
        }
    }
    return key;
}

}  // namespace

std::string canonical_form(Topology const& topology) {
    std::vector<int> relabel(topology.n_states());
    std::iota(relabel.begin(), relabel.end(), 0);
    std::string best = encode(topology, relabel);
    while (std::next_permutation(relabel.begin(), relabel.end())) {
        std::string candidate = encode(topology, relabel);
        if (candidate < best) best = std::move(candidate);
    }
    return best;
}

bool is_strongly_connected(Topology const& topology) {
    auto const n = topology.n_states();
    // Reachability closure; n <= 4 so a dense matrix is fine.
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (std::size_t s = 0; s < n; ++s) {
        reach[s][s] = true;
        for (int t : topology.targets[s]) {
            if (t >= 0) reach[s][static_cast<std::size_t>(t)] = true;
        }
    }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (reach[i][k] && reach[k][j]) reach[i][j] = true;
    for (auto const& row : reach)
        for (bool r : row)
            if (!r) return false;
    return true;
}

bool is_topologically_minimal(Topology const& topology) {
    auto const n = topology.n_states();
    std::vector<int> block(n);
    std::set<int> outputs;
    for (std::size_t s = 0; s < n; ++s) {
        auto const& t = topology.targets[s];
        block[s] = (t[0] >= 0 ? 1 : 0) | (t[1] >= 0 ? 2 : 0);
        outputs.insert(block[s]);
    }
    std::size_t n_blocks = outputs.size();
    while (true) {
        std::map<std::tuple<int, int, int>, int> signatures;
        std::vector<int> refined(n);
        for (std::size_t s = 0; s < n; ++s) {
            auto const& t = topology.targets[s];
            auto succ = [&](int x) {
                int const target = t[static_cast<std::size_t>(x)];
                return target < 0 ? -1 : block[static_cast<std::size_t>(target)];
            };
            auto [it, _] = signatures.try_emplace(std::make_tuple(block[s], succ(0), succ(1)),
                                                  static_cast<int>(signatures.size()));
            refined[s] = it->second;
        }
        block = std::move(refined);
        if (signatures.size() == n_blocks) break;
        n_blocks = signatures.size();
    }
    return n_blocks == n;
}

std::vector<Topology> enumerate_topologies(int n_states) {
    if (n_states < 1 || n_states > kMaxEnumeratedStates) {
        throw UnsupportedSize("topology enumeration supports 1.." +
                              std::to_string(kMaxEnumeratedStates) + " states, got " +
                              std::to_string(n_states));
    }
    auto const n = static_cast<std::size_t>(n_states);

    std::vector<std::array<int, kAlphabetSize>> choices;
    for (int t0 = -1; t0 < n_states; ++t0)
        for (int t1 = -1; t1 < n_states; ++t1)
            if (t0 >= 0 || t1 >= 0) choices.push_back({t0, t1});

    std::map<std::string, Topology> unique;
    std::vector<std::size_t> odometer(n, 0);
    Topology candidate;
    candidate.targets.resize(n);
    while (true) {
        for (std::size_t s = 0; s < n; ++s) candidate.targets[s] = choices[odometer[s]];
        if (is_strongly_connected(candidate) && is_topologically_minimal(candidate)) {
            std::string key = canonical_form(candidate);
            if (!unique.contains(key)) {
                Topology accepted;
                // Store the canonical labeling itself so the key decodes to the edges.
                std::istringstream parse(key.substr(key.find(':') + 1));
                std::string group;
                while (std::getline(parse, group, ',')) {
                    accepted.targets.push_back({group[0] == '-' ? -1 : group[0] - '0',
                                                group[1] == '-' ? -1 : group[1] - '0'});
                }
                accepted.canonical_key = key;
                unique.emplace(std::move(key), std::move(accepted));
            }
        }
        std::size_t digit = 0;
        while (digit < n && ++odometer[digit] == choices.size()) odometer[digit++] = 0;
        if (digit == n) break;
    }

    std::vector<Topology> result;
    result.reserve(unique.size());
    for (auto& [key, topology] : unique) result.push_back(std::move(topology));
    return result;
}

Pdfa assign_emissions(Topology const& topology, std::uint64_t seed, std::string machine_id) {
    if (machine_id.empty()) {
        machine_id = "topology[" + canonical_form(topology) + "]#" + std::to_string(seed);
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto const n = topology.n_states();
    for (int attempt = 0; attempt < kMaxEmissionAttempts; ++attempt) {
        std::vector<TransitionRow> rows(n);
        for (std::size_t s = 0; s < n; ++s) {
            auto const& t = topology.targets[s];
            if (t[0] >= 0 && t[1] >= 0) {
                double p_one = 0.0;
                while (p_one == 0.0) p_one = unit(rng);
                rows[s][0] = Transition{t[0], 1.0 - p_one};
                rows[s][1] = Transition{t[1], p_one};
            } else {
                int const x = t[0] >= 0 ? 0 : 1;
                rows[s][static_cast<std::size_t>(x)] = Transition{t[static_cast<std::size_t>(x)], 1.0};
            }
        }
        Pdfa pdfa(machine_id, std::move(rows));
        if (validate(pdfa).ok()) return pdfa;
    }
    throw DegenerateTopology("topology " + canonical_form(topology) + " gave " +
                             std::to_string(kMaxEmissionAttempts) +
                             " consecutive non-minimal emission draws");
}

std::vector<Pdfa> build_library(int max_states, int draws, std::uint64_t seed,
                                std::vector<std::string>* skipped) {
    std::vector<Pdfa> machines;
    for (int n = 1; n <= max_states; ++n) {
        auto const topologies = enumerate_topologies(n);
        for (std::size_t i = 0; i < topologies.size(); ++i) {
            for (int d = 0; d < draws; ++d) {
                char id[48];
                std::snprintf(id, sizeof id, "n%d_%04zu_d%d", n, i, d);
                try {
                    machines.push_back(assign_emissions(topologies[i], derive_seed(seed, id), id));
                } catch (DegenerateTopology const&) {
                    if (skipped) skipped->emplace_back(id);
                }
            }
        }
    }
    return machines;
}

void write_topologies(std::ostream& out, std::vector<Topology> const& topologies) {
    for (auto const& t : topologies) {
        out << t.canonical_key << '\t';
        bool first = true;
        for (std::size_t s = 0; s < t.n_states(); ++s) {
            for (int x = 0; x < kAlphabetSize; ++x) {
                int const target = t.targets[s][static_cast<std::size_t>(x)];
                if (target < 0) continue;
                if (!first) out << ' ';
                first = false;
                out << s << ',' << x << ',' << target;
            }
        }
        out << '\n';
    }
}

std::vector<Topology> read_topologies(std::istream& in, std::string const& source) {
    std::vector<Topology> result;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.empty()) continue;
        auto const tab = text.find('\t');
        auto const colon = text.find(':');
        if (tab == std::string::npos || colon == std::string::npos || colon > tab) {
            throw ParseError(source, line, "expected '<key>\\t<edges>'");
        }
        Topology t;
        t.canonical_key = text.substr(0, tab);
        int n = 0;
        try {
            n = std::stoi(t.canonical_key.substr(0, colon));
        } catch (std::exception const&) {
            throw ParseError(source, line, "bad state count in key");
        }
        if (n < 1 || n > kMaxEnumeratedStates) throw ParseError(source, line, "bad state count in key");
        t.targets.assign(static_cast<std::size_t>(n), {-1, -1});
        std::istringstream edges(text.substr(tab + 1));
        std::string triple;
        while (edges >> triple) {
            int from = 0, x = 0, to = 0;
            char c1 = 0, c2 = 0;
            std::istringstream parts(triple);
            if (!(parts >> from >> c1 >> x >> c2 >> to) || c1 != ',' || c2 != ',' || from < 0 ||
                from >= n || to < 0 || to >= n || (x != 0 && x != 1)) {
                throw ParseError(source, line, "bad edge '" + triple + "'");
            }
            t.targets[static_cast<std::size_t>(from)][static_cast<std::size_t>(x)] = to;
        }
        if (canonical_form(t) != t.canonical_key) {
            throw ParseError(source, line, "edges do not match canonical key");
        }
        result.push_back(std::move(t));
    }
    return result;
}

}  // namespace pdfabench
