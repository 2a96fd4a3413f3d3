#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <string>

#include "lpp/network.hpp"

using namespace lpp;
using Catch::Approx;

namespace {

// Small healthy three-bus network used as a validation baseline.
Network three_bus() {
    Network net;
    net.name = "tiny";
    net.v_norm = 1.0;
    net.v_min = 0.95;
    net.v_max = 1.05;
    Bus root;
    root.id = "s";
    root.is_root = true;
    root.gen_p_max = 2.0;
    root.gen_q_min = -2.0;
    root.gen_q_max = 2.0;
    net.buses.push_back(root);
    Bus a;
    a.id = "a";
    a.load_p = 0.3;
    a.load_q = 0.1;
    net.buses.push_back(a);
    Bus b;
    b.id = "b";
    b.load_p = 0.2;
    b.load_q = 0.05;
    net.buses.push_back(b);
    Feeder f1{"f1", "s", "a", 0.002, 0.001, 3.0, true, FeederState::free_state};
    Feeder f2{"f2", "a", "b", 0.002, 0.001, 3.0, true, FeederState::free_state};
    net.feeders.push_back(f1);
    net.feeders.push_back(f2);
    return net;
}

bool has_violation(const ValidationReport& rep, const std::string& code,
                   const std::string& where) {
    for (const auto& v : rep.violations)
        if (v.code == code && v.where == where) return true;
    return false;
}

}  // namespace

TEST_CASE("healthy network validates cleanly, twice") {
    const Network net = three_bus();
    const auto rep1 = validate_network(net);
    REQUIRE(rep1.ok());
    const auto rep2 = validate_network(net);
    REQUIRE(rep2.violations.size() == rep1.violations.size());
}

TEST_CASE("zero-impedance feeder is flagged by id") {
    Network net = three_bus();
    net.feeders[1].r = 0.0;
    net.feeders[1].x = 0.0;
    const auto rep = validate_network(net);
    REQUIRE_FALSE(rep.ok());
    REQUIRE(has_violation(rep, "zero_impedance", "f2"));
}

TEST_CASE("structural defects each produce a named violation") {
    SECTION("duplicate bus id") {
        Network net = three_bus();
        net.buses.push_back(net.buses[1]);
        REQUIRE(has_violation(validate_network(net), "duplicate_id", "a"));
    }
    SECTION("duplicate feeder id") {
        Network net = three_bus();
        net.feeders.push_back(net.feeders[0]);
        REQUIRE(has_violation(validate_network(net), "duplicate_id", "f1"));
    }
    SECTION("missing endpoint") {
        Network net = three_bus();
        net.feeders[0].to = "ghost";
        REQUIRE(has_violation(validate_network(net), "unknown_endpoint", "f1"));
    }
    SECTION("self loop") {
        Network net = three_bus();
        net.feeders[0].to = "s";
        REQUIRE(has_violation(validate_network(net), "self_loop", "f1"));
    }
    SECTION("inverted generator bounds") {
        Network net = three_bus();
        net.buses[0].gen_p_min = 3.0;
        REQUIRE(has_violation(validate_network(net), "gen_bounds", "s"));
    }
    SECTION("negative load") {
        Network net = three_bus();
        net.buses[2].load_p = -0.1;
        REQUIRE(has_violation(validate_network(net), "bad_load", "b"));
    }
    SECTION("bad ampacity") {
        Network net = three_bus();
        net.feeders[0].i_max = 0.0;
        REQUIRE(has_violation(validate_network(net), "bad_ampacity", "f1"));
    }
    SECTION("voltage box") {
        Network net = three_bus();
        net.v_min = 1.2;
        REQUIRE_FALSE(validate_network(net).ok());
    }
    SECTION("no root anywhere") {
        Network net = three_bus();
        net.buses[0].is_root = false;
        REQUIRE(has_violation(validate_network(net), "no_root", ""));
    }
    SECTION("component without a root") {
        Network net = three_bus();
        Bus lone;
        lone.id = "island";
        lone.load_p = 0.1;
        net.buses.push_back(lone);
        const auto rep = validate_network(net);
        REQUIRE(has_violation(rep, "unrooted_component", "island"));
    }
    SECTION("closed feeder into a dark bus") {
        Network net = three_bus();
        net.buses[2].fixed_state = BusState::de_energized;
        net.feeders[1].fixed_state = FeederState::closed;
        REQUIRE(has_violation(validate_network(net), "state_conflict", "f2"));
    }
}

TEST_CASE("per-unit bases for a 1 MVA / 6.6 kV system") {
    REQUIRE(impedance_base_ohm(1.0, 6.6) == Approx(43.56).epsilon(1e-12));
    REQUIRE(current_base_ampere(1.0, 6.6) == Approx(87.4773).margin(5e-5));
}

TEST_CASE("ingestion converts engineering units to per-unit") {
    RawNetwork raw;
    raw.name = "conv";
    raw.base_mva = 1.0;
    raw.base_kv = 6.6;
    RawBus rb;
    rb.id = "1";
    rb.is_root = true;
    rb.load_p_mw = 0.2420;
    rb.load_q_mvar = 0.0878;
    raw.buses.push_back(rb);
    RawBus rb2;
    rb2.id = "2";
    raw.buses.push_back(rb2);
    RawFeeder rf;
    rf.id = "L1";
    rf.from = "1";
    rf.to = "2";
    rf.r = 0.08;
    rf.x = 0.06;
    rf.impedance_unit = ImpedanceUnit::ohm;
    rf.i_max = 250.0;
    rf.ampacity_unit = AmpacityUnit::ampere;
    raw.feeders.push_back(rf);

    const Network net = per_unit_ingest(raw);
    REQUIRE(net.buses[0].load_p == 0.2420);  // 1 MVA base keeps megawatt figures
    REQUIRE(net.buses[0].load_q == 0.0878);
    REQUIRE(net.feeders[0].r == Approx(0.08 / 43.56).epsilon(1e-12));
    REQUIRE(net.feeders[0].x == Approx(0.06 / 43.56).epsilon(1e-12));
    REQUIRE(net.feeders[0].i_max == Approx(2.8579).margin(5e-5));
}

TEST_CASE("per-unit fields pass through untouched") {
    RawNetwork raw;
    raw.base_mva = 10.0;
    raw.base_kv = 11.0;
    RawBus rb;
    rb.id = "1";
    rb.is_root = true;
    raw.buses.push_back(rb);
    RawBus rb2;
    rb2.id = "2";
    raw.buses.push_back(rb2);
    RawFeeder rf;
    rf.id = "L1";
    rf.from = "1";
    rf.to = "2";
    rf.r = 0.004;
    rf.x = 0.003;
    rf.impedance_unit = ImpedanceUnit::per_unit;
    rf.i_max = 1.5;
    rf.ampacity_unit = AmpacityUnit::per_unit;
    raw.feeders.push_back(rf);
    const Network net = per_unit_ingest(raw);
    REQUIRE(net.feeders[0].r == 0.004);
    REQUIRE(net.feeders[0].x == 0.003);
    REQUIRE(net.feeders[0].i_max == 1.5);
}

TEST_CASE("round trip through engineering units is lossless") {
    std::mt19937 rng(71);
    std::uniform_real_distribution<double> mva(0.5, 100.0);
    std::uniform_real_distribution<double> kv(0.4, 132.0);
    std::uniform_real_distribution<double> val(0.0, 5.0);
    for (int trial = 0; trial < 200; ++trial) {
        RawNetwork raw;
        raw.base_mva = mva(rng);
        raw.base_kv = kv(rng);
        RawBus rb;
        rb.id = "1";
        rb.is_root = true;
        rb.load_p_mw = val(rng);
        rb.load_q_mvar = val(rng) - 2.0;
        rb.gen_p_max_mw = val(rng);
        rb.gen_q_min_mvar = -val(rng);
        rb.gen_q_max_mvar = val(rng);
        raw.buses.push_back(rb);
        RawBus rb2;
        rb2.id = "2";
        rb2.load_p_mw = val(rng);
        raw.buses.push_back(rb2);
        RawFeeder rf;
        rf.id = "L1";
        rf.from = "1";
        rf.to = "2";
        rf.r = val(rng) + 0.01;
        rf.x = val(rng);
        rf.i_max = 100.0 + 100.0 * val(rng);
        raw.feeders.push_back(rf);

        const RawNetwork back = to_engineering(per_unit_ingest(raw));
        REQUIRE(back.buses[0].load_p_mw == Approx(raw.buses[0].load_p_mw).epsilon(1e-12));
        REQUIRE(back.buses[0].gen_q_min_mvar ==
                Approx(raw.buses[0].gen_q_min_mvar).epsilon(1e-12).margin(1e-14));
        REQUIRE(back.feeders[0].r == Approx(raw.feeders[0].r).epsilon(1e-12));
        REQUIRE(back.feeders[0].x == Approx(raw.feeders[0].x).epsilon(1e-12).margin(1e-14));
        REQUIRE(back.feeders[0].i_max == Approx(raw.feeders[0].i_max).epsilon(1e-12));
    }
}

TEST_CASE("nonpositive bases are rejected") {
    RawNetwork raw;
    raw.base_mva = 0.0;
    REQUIRE_THROWS_AS(per_unit_ingest(raw), Error);
    raw.base_mva = 1.0;
    raw.base_kv = -6.6;
    REQUIRE_THROWS_AS(per_unit_ingest(raw), Error);
}

TEST_CASE("index lookups resolve ids and reject strangers") {
    const Network net = three_bus();
    REQUIRE(net.bus_index("b") == 2);
    REQUIRE(net.feeder_index("f2") == 1);
    REQUIRE_THROWS_AS(net.bus_index("zz"), Error);
    REQUIRE_THROWS_AS(net.feeder_index("zz"), Error);
}
