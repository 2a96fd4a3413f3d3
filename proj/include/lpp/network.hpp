#pragma once

// Radial distribution network description in per-unit, plus the run
// configuration shared by the model builder, solver backends and the
// multi-step driver.

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lpp {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Forced value of a binary decision, when the input pins it.
enum class BusState { free_state, energized, de_energized };
enum class FeederState { free_state, closed, open };

struct Bus {
    std::string id;
    bool is_root = false;  // may head an energized tree (substation or grid-forming DG)
    double load_p = 0.0;   // demand at nominal service, per-unit
    double load_q = 0.0;
    double gen_p_min = 0.0;
    double gen_p_max = 0.0;
    double gen_q_min = 0.0;
    double gen_q_max = 0.0;
    BusState fixed_state = BusState::free_state;
};

struct Feeder {
    std::string id;
    std::string from;
    std::string to;
    double r = 0.0;      // per-unit resistance
    double x = 0.0;      // per-unit reactance
    double i_max = 0.0;  // per-unit ampacity
    bool switchable = true;
    FeederState fixed_state = FeederState::free_state;
};

struct Network {
    std::string name;
    double base_mva = 1.0;
    double base_kv = 1.0;
    double v_norm = 1.0;  // nominal voltage, per-unit
    double v_min = 0.95;
    double v_max = 1.05;
    std::vector<Bus> buses;
    std::vector<Feeder> feeders;

    std::size_t bus_index(const std::string& id) const {
        for (std::size_t i = 0; i < buses.size(); ++i)
            if (buses[i].id == id) return i;
        throw Error("unknown bus id: " + id);
    }
    std::size_t feeder_index(const std::string& id) const {
        for (std::size_t i = 0; i < feeders.size(); ++i)
            if (feeders[i].id == id) return i;
        throw Error("unknown feeder id: " + id);
    }
    bool has_bus(const std::string& id) const {
        for (const auto& b : buses)
            if (b.id == id) return true;
        return false;
    }
};

enum class Mode { reconfiguration, restoration };

// How the tree count on the right-hand side of the radiality counting
// constraint is fixed: a constant, or the number of energized root buses.
struct NsPolicy {
    bool derived = true;
    int fixed_value = 1;
    static NsPolicy derive() { return NsPolicy{true, 0}; }
    static NsPolicy fixed(int k) { return NsPolicy{false, k}; }
};

struct BigMPolicy {
    bool tight = true;     // per-row values computed from current bounds
    double fixed = 1e4;    // scalar used for every row when !tight
    static BigMPolicy tight_policy() { return BigMPolicy{true, 0.0}; }
    static BigMPolicy fixed_policy(double m) { return BigMPolicy{false, m}; }
};

struct RunConfig {
    Mode mode = Mode::reconfiguration;
    int lambda = 10;           // PWL segment count per axis
    int max_iters = 5;         // bound-renewal iterations after the direct solve
    double eps_p = 0.1;        // threshold on the mean active-power error index, percent
    double eps_q = 0.1;        // threshold on the mean reactive-power error index, percent
    double mip_gap = 1e-4;     // relative optimality gap handed to backends
    NsPolicy n_s = NsPolicy::derive();
    BigMPolicy big_m = BigMPolicy::tight_policy();
    int enumeration_cap = 20;  // max switchable feeders the enumerative backend accepts
    unsigned seed = 0;         // threaded through to randomized harnesses, echoed in reports
};

// ---------------------------------------------------------------------------
// validation

struct Violation {
    std::string code;
    std::string where;  // offending bus/feeder id, empty for network-level issues
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

namespace detail {
inline std::size_t uf_find(std::vector<std::size_t>& p, std::size_t a) {
    while (p[a] != a) {
        p[a] = p[p[a]];
        a = p[a];
    }
    return a;
}
}  // namespace detail

// Structural checks only; never mutates, never throws on bad data.
inline ValidationReport validate_network(const Network& net) {
    ValidationReport rep;
    auto add = [&rep](const std::string& code, const std::string& where, const std::string& msg) {
        rep.violations.push_back({code, where, msg});
    };

    if (!(net.v_min > 0.0) || !(net.v_min < net.v_max))
        add("voltage_box", "", "need 0 < v_min < v_max");
    if (!(net.v_norm >= net.v_min) || !(net.v_norm <= net.v_max))
        add("voltage_box", "", "v_norm must lie inside [v_min, v_max]");

    std::map<std::string, int> bus_seen;
    for (const auto& b : net.buses) {
        if (++bus_seen[b.id] == 2) add("duplicate_id", b.id, "bus id appears more than once");
        if (!(b.load_p >= 0.0) || !std::isfinite(b.load_p) || !std::isfinite(b.load_q))
            add("bad_load", b.id, "load_p must be >= 0 and loads finite");
        if (b.gen_p_min > b.gen_p_max || b.gen_q_min > b.gen_q_max)
            add("gen_bounds", b.id, "generator bounds inverted");
    }

    std::map<std::string, int> feeder_seen;
    for (const auto& f : net.feeders) {
        if (++feeder_seen[f.id] == 2) add("duplicate_id", f.id, "feeder id appears more than once");
        if (!net.has_bus(f.from) || !net.has_bus(f.to)) {
            add("unknown_endpoint", f.id, "feeder endpoint references a missing bus");
            continue;
        }
        if (f.from == f.to) add("self_loop", f.id, "feeder connects a bus to itself");
        if (!(f.r >= 0.0) || !std::isfinite(f.x))
            add("bad_impedance", f.id, "need r >= 0 and finite x");
        if (f.r == 0.0 && f.x == 0.0)
            add("zero_impedance", f.id, "feeder has zero impedance");
        if (!(f.i_max > 0.0))
            add("bad_ampacity", f.id, "ampacity must be positive");
        // A closed feeder with an endpoint pinned dark can never satisfy the
        // endpoint coupling; reject it here rather than at solve time.
        auto dark = [&net](const std::string& id) {
            return net.buses[net.bus_index(id)].fixed_state == BusState::de_energized;
        };
        if (f.fixed_state == FeederState::closed && (dark(f.from) || dark(f.to)))
            add("state_conflict", f.id, "feeder fixed closed but an endpoint is fixed de-energized");
    }

    bool any_root = false;
    for (const auto& b : net.buses) any_root |= b.is_root;
    if (!any_root) add("no_root", "", "no root-capable bus in the network");

    // Every connected component must hold at least one root-capable bus,
    // otherwise no spanning forest can ever energize it.
    if (!net.buses.empty() && bus_seen.size() == net.buses.size()) {
        std::vector<std::size_t> parent(net.buses.size());
        for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
        for (const auto& f : net.feeders) {
            if (!net.has_bus(f.from) || !net.has_bus(f.to)) continue;
            auto a = detail::uf_find(parent, net.bus_index(f.from));
            auto b = detail::uf_find(parent, net.bus_index(f.to));
            parent[a] = b;
        }
        std::map<std::size_t, bool> comp_rooted;
        for (std::size_t i = 0; i < net.buses.size(); ++i)
            comp_rooted[detail::uf_find(parent, i)] |= net.buses[i].is_root;
        for (const auto& [comp, rooted] : comp_rooted)
            if (!rooted)
                add("unrooted_component", net.buses[comp].id,
                    "connected component has no root-capable bus");
    }
    return rep;
}

// ---------------------------------------------------------------------------
// per-unit ingestion

enum class ImpedanceUnit { ohm, per_unit };
enum class AmpacityUnit { ampere, per_unit };

struct RawBus {
    std::string id;
    bool is_root = false;
    double load_p_mw = 0.0;
    double load_q_mvar = 0.0;
    double gen_p_min_mw = 0.0;
    double gen_p_max_mw = 0.0;
    double gen_q_min_mvar = 0.0;
    double gen_q_max_mvar = 0.0;
    BusState fixed_state = BusState::free_state;
};

struct RawFeeder {
    std::string id;
    std::string from;
    std::string to;
    double r = 0.0;
    double x = 0.0;
    ImpedanceUnit impedance_unit = ImpedanceUnit::ohm;
    double i_max = 0.0;
    AmpacityUnit ampacity_unit = AmpacityUnit::ampere;
    bool switchable = true;
    FeederState fixed_state = FeederState::free_state;
};

struct RawNetwork {
    std::string name;
    double base_mva = 1.0;
    double base_kv = 1.0;
    double v_norm = 1.0;
    double v_min = 0.95;
    double v_max = 1.05;
    std::vector<RawBus> buses;
    std::vector<RawFeeder> feeders;
};

inline double impedance_base_ohm(double base_mva, double base_kv) {
    return base_kv * base_kv / base_mva;
}

/// Three-phase current base in amperes for an MVA/kV pair.
inline double current_base_ampere(double base_mva, double base_kv) {
    return base_mva * 1000.0 / (std::sqrt(3.0) * base_kv);
}

inline Network per_unit_ingest(const RawNetwork& raw) {
    if (!(raw.base_mva > 0.0) || !(raw.base_kv > 0.0))
        throw Error("per_unit_ingest: base_mva and base_kv must be positive");
    Network net;
    net.name = raw.name;
    net.base_mva = raw.base_mva;
    net.base_kv = raw.base_kv;
    net.v_norm = raw.v_norm;
    net.v_min = raw.v_min;
    net.v_max = raw.v_max;
    const double z_base = impedance_base_ohm(raw.base_mva, raw.base_kv);
    const double i_base = current_base_ampere(raw.base_mva, raw.base_kv);
    for (const auto& rb : raw.buses) {
        Bus b;
        b.id = rb.id;
        b.is_root = rb.is_root;
        b.load_p = rb.load_p_mw / raw.base_mva;
        b.load_q = rb.load_q_mvar / raw.base_mva;
        b.gen_p_min = rb.gen_p_min_mw / raw.base_mva;
        b.gen_p_max = rb.gen_p_max_mw / raw.base_mva;
        b.gen_q_min = rb.gen_q_min_mvar / raw.base_mva;
        b.gen_q_max = rb.gen_q_max_mvar / raw.base_mva;
        b.fixed_state = rb.fixed_state;
        net.buses.push_back(b);
    }
    for (const auto& rf : raw.feeders) {
        Feeder f;
        f.id = rf.id;
        f.from = rf.from;
        f.to = rf.to;
        f.r = rf.impedance_unit == ImpedanceUnit::ohm ? rf.r / z_base : rf.r;
        f.x = rf.impedance_unit == ImpedanceUnit::ohm ? rf.x / z_base : rf.x;
        f.i_max = rf.ampacity_unit == AmpacityUnit::ampere ? rf.i_max / i_base : rf.i_max;
        f.switchable = rf.switchable;
        f.fixed_state = rf.fixed_state;
        net.feeders.push_back(f);
    }
    return net;
}

/// Inverse of per_unit_ingest; ohm/ampere units on every feeder.
inline RawNetwork to_engineering(const Network& net) {
    RawNetwork raw;
    raw.name = net.name;
    raw.base_mva = net.base_mva;
    raw.base_kv = net.base_kv;
    raw.v_norm = net.v_norm;
    raw.v_min = net.v_min;
    raw.v_max = net.v_max;
    const double z_base = impedance_base_ohm(net.base_mva, net.base_kv);
    const double i_base = current_base_ampere(net.base_mva, net.base_kv);
    for (const auto& b : net.buses) {
        RawBus rb;
        rb.id = b.id;
        rb.is_root = b.is_root;
        rb.load_p_mw = b.load_p * net.base_mva;
        rb.load_q_mvar = b.load_q * net.base_mva;
        rb.gen_p_min_mw = b.gen_p_min * net.base_mva;
        rb.gen_p_max_mw = b.gen_p_max * net.base_mva;
        rb.gen_q_min_mvar = b.gen_q_min * net.base_mva;
        rb.gen_q_max_mvar = b.gen_q_max * net.base_mva;
        rb.fixed_state = b.fixed_state;
        raw.buses.push_back(rb);
    }
    for (const auto& f : net.feeders) {
        RawFeeder rf;
        rf.id = f.id;
        rf.from = f.from;
        rf.to = f.to;
        rf.r = f.r * z_base;
        rf.x = f.x * z_base;
        rf.impedance_unit = ImpedanceUnit::ohm;
        rf.i_max = f.i_max * i_base;
        rf.ampacity_unit = AmpacityUnit::ampere;
        rf.switchable = f.switchable;
        rf.fixed_state = f.fixed_state;
        raw.feeders.push_back(rf);
    }
    return raw;
}

}  // namespace lpp
