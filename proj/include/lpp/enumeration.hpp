#pragma once

// Exhaustive enumeration of switch configurations for the ground-truth
// solving path. Each yielded assignment covers every binary: feeder states
// respecting switchability and file fixings, bus states consistent with
// endpoint coupling and mode pins, the energized subgraph a forest, and the
// tree count agreeing with the configured counting policy (each tree holds
// exactly one energized root under the derived policy, at least one root
// and an exact total under a fixed count).

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "network.hpp"

namespace lpp {

struct BinaryAssignment {
    std::vector<int> v;  // per bus, 0/1
    std::vector<int> w;  // per feeder, 0/1

    bool operator==(const BinaryAssignment& o) const { return v == o.v && w == o.w; }
};

/// Deterministic order used to break objective ties between configurations:
/// the sorted energized feeder ids, then the sorted energized bus ids,
/// compared lexicographically. Every optimizer that ranks configurations
/// must break ties with this same key so their winners agree.
using ConfigKey = std::pair<std::vector<std::string>, std::vector<std::string>>;

inline ConfigKey config_tie_key(const Network& net, const BinaryAssignment& a) {
    ConfigKey k;
    for (std::size_t f = 0; f < net.feeders.size(); ++f)
        if (a.w[f] != 0) k.first.push_back(net.feeders[f].id);
    for (std::size_t i = 0; i < net.buses.size(); ++i)
        if (a.v[i] != 0) k.second.push_back(net.buses[i].id);
    std::sort(k.first.begin(), k.first.end());
    std::sort(k.second.begin(), k.second.end());
    return k;
}

namespace enum_detail {

struct UnionFind {
    std::vector<int> parent;

    explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
        for (int i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
    }
    int find(int a) {
        while (parent[static_cast<std::size_t>(a)] != a) {
            parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
            a = parent[static_cast<std::size_t>(a)];
        }
        return a;
    }
    // false when a and b are already connected (joining them closes a cycle)
    bool join(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[static_cast<std::size_t>(a)] = b;
        return true;
    }
};

}  // namespace enum_detail

inline std::vector<BinaryAssignment> enumerate_radial_configurations(const Network& net,
                                                                     const RunConfig& cfg) {
    const int nb = static_cast<int>(net.buses.size());
    const int nf = static_cast<int>(net.feeders.size());

    int switchable = 0;
    for (const auto& f : net.feeders) switchable += f.switchable ? 1 : 0;
    if (switchable > cfg.enumeration_cap)
        throw Error("enumerate_radial_configurations: " + std::to_string(switchable) +
                    " switchable feeders exceed the enumeration cap of " +
                    std::to_string(cfg.enumeration_cap) +
                    "; solve this network with the external backend instead");

    // -1 marks a state the enumeration is free to choose
    std::vector<int> w_forced(static_cast<std::size_t>(nf), -1);
    std::vector<int> free_feeders;
    for (int i = 0; i < nf; ++i) {
        const Feeder& f = net.feeders[static_cast<std::size_t>(i)];
        if (f.fixed_state == FeederState::open)
            w_forced[static_cast<std::size_t>(i)] = 0;
        else if (f.fixed_state == FeederState::closed || !f.switchable)
            w_forced[static_cast<std::size_t>(i)] = 1;
        else
            free_feeders.push_back(i);
    }

    // file fixings win over the mode pin; reconfiguration serves every bus
    std::vector<int> v_forced(static_cast<std::size_t>(nb), -1);
    for (int i = 0; i < nb; ++i) {
        const Bus& b = net.buses[static_cast<std::size_t>(i)];
        if (b.fixed_state == BusState::energized)
            v_forced[static_cast<std::size_t>(i)] = 1;
        else if (b.fixed_state == BusState::de_energized)
            v_forced[static_cast<std::size_t>(i)] = 0;
        else if (cfg.mode == Mode::reconfiguration)
            v_forced[static_cast<std::size_t>(i)] = 1;
    }

    std::vector<int> from_idx(static_cast<std::size_t>(nf)), to_idx(static_cast<std::size_t>(nf));
    for (int i = 0; i < nf; ++i) {
        from_idx[static_cast<std::size_t>(i)] =
            static_cast<int>(net.bus_index(net.feeders[static_cast<std::size_t>(i)].from));
        to_idx[static_cast<std::size_t>(i)] =
            static_cast<int>(net.bus_index(net.feeders[static_cast<std::size_t>(i)].to));
    }

    std::vector<BinaryAssignment> out;
    std::vector<int> w(static_cast<std::size_t>(nf));
    const std::uint64_t total = std::uint64_t{1} << free_feeders.size();
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        for (int i = 0; i < nf; ++i) w[static_cast<std::size_t>(i)] = w_forced[static_cast<std::size_t>(i)];
        for (std::size_t t = 0; t < free_feeders.size(); ++t)
            w[static_cast<std::size_t>(free_feeders[t])] = (mask >> t) & 1 ? 1 : 0;

        // a closed feeder energizes both ends; a dark pin there kills the mask
        bool ok = true;
        enum_detail::UnionFind uf(nb);
        std::vector<char> touched(static_cast<std::size_t>(nb), 0);
        for (int i = 0; i < nf && ok; ++i) {
            if (w[static_cast<std::size_t>(i)] == 0) continue;
            const int a = from_idx[static_cast<std::size_t>(i)];
            const int b = to_idx[static_cast<std::size_t>(i)];
            if (v_forced[static_cast<std::size_t>(a)] == 0 || v_forced[static_cast<std::size_t>(b)] == 0) ok = false;
            else if (!uf.join(a, b)) ok = false;  // cycle
            touched[static_cast<std::size_t>(a)] = touched[static_cast<std::size_t>(b)] = 1;
        }
        if (!ok) continue;

        // roots per connected tree of closed feeders
        std::vector<int> root_count(static_cast<std::size_t>(nb), 0);
        for (int i = 0; i < nb; ++i)
            if (touched[static_cast<std::size_t>(i)] && net.buses[static_cast<std::size_t>(i)].is_root)
                ++root_count[static_cast<std::size_t>(uf.find(i))];
        int edge_trees = 0;
        for (int i = 0; i < nb && ok; ++i) {
            if (!touched[static_cast<std::size_t>(i)] || uf.find(i) != i) continue;
            ++edge_trees;
            const int roots = root_count[static_cast<std::size_t>(i)];
            if (cfg.n_s.derived ? roots != 1 : roots < 1) ok = false;
        }
        if (!ok) continue;

        // buses with no closed feeder: forced states apply directly, free
        // root-capable buses may stand alone as single-bus trees either way
        std::vector<int> v(static_cast<std::size_t>(nb), 0);
        std::vector<int> lone_roots;
        int forced_singletons = 0;
        for (int i = 0; i < nb && ok; ++i) {
            if (touched[static_cast<std::size_t>(i)]) {
                v[static_cast<std::size_t>(i)] = 1;
                continue;
            }
            const int fv = v_forced[static_cast<std::size_t>(i)];
            if (fv == 1) {
                if (!net.buses[static_cast<std::size_t>(i)].is_root) ok = false;  // rootless tree of one
                v[static_cast<std::size_t>(i)] = 1;
                ++forced_singletons;
            } else if (fv == -1 && net.buses[static_cast<std::size_t>(i)].is_root) {
                lone_roots.push_back(i);
            }
        }
        if (!ok) continue;

        const std::uint64_t branches = std::uint64_t{1} << lone_roots.size();
        for (std::uint64_t pick = 0; pick < branches; ++pick) {
            int trees = edge_trees + forced_singletons;
            for (std::size_t t = 0; t < lone_roots.size(); ++t) {
                const int on = (pick >> t) & 1 ? 1 : 0;
                v[static_cast<std::size_t>(lone_roots[t])] = on;
                trees += on;
            }
            if (!cfg.n_s.derived && trees != cfg.n_s.fixed_value) continue;
            out.push_back({v, w});
        }
    }
    return out;
}

}  // namespace lpp
