#include "lpp/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

using Catch::Matchers::ContainsSubstring;
using namespace lpp;

namespace {

// two buses, one switchable feeder, pu units throughout
const char* kPairFile = R"({
  "name": "pair",
  "base_mva": 1.0,
  "base_kv": 6.6,
  "units": {"power": "pu", "impedance": "pu", "ampacity": "pu"},
  "buses": [
    {"id": "b0", "root": true, "gen_p": [0.0, 10.0], "gen_q": [-10.0, 10.0]},
    {"id": "b1", "load_p": 0.1, "load_q": 0.05}
  ],
  "feeders": [
    {"id": "f0", "from": "b0", "to": "b1", "r": 0.01, "x": 0.01, "i_max": 3.0}
  ]
})";

// same pair but the ampacity cannot carry the load, so every closed
// configuration fails and the open one leaves b1 unserved
const char* kChokedFile = R"({
  "name": "choked",
  "base_mva": 1.0,
  "base_kv": 6.6,
  "units": {"power": "pu", "impedance": "pu", "ampacity": "pu"},
  "buses": [
    {"id": "b0", "root": true, "gen_p": [0.0, 10.0], "gen_q": [-10.0, 10.0]},
    {"id": "b1", "load_p": 0.1, "load_q": 0.05}
  ],
  "feeders": [
    {"id": "f0", "from": "b0", "to": "b1", "r": 0.01, "x": 0.01, "i_max": 0.05}
  ]
})";

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv = {"lpp"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    f << text;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("reconfigure runs to threshold and writes the report") {
    write_file("cli_pair.net", kPairFile);
    CliRun r = run_cli({"reconfigure", "cli_pair.net", "--lambda", "10", "--out",
                        "cli_pair_report.json"});
    CHECK(r.code == 0);
    CHECK(r.err.empty());
    CHECK_THAT(r.out, ContainsSubstring("Iteration number"));
    CHECK_THAT(r.out, ContainsSubstring("threshold-met"));

    json rep = json::parse(slurp("cli_pair_report.json"));
    CHECK(rep["termination"] == "threshold-met");
    CHECK(rep["mode"] == "reconfiguration");
    CHECK(rep["final"]["status"] == "optimal");
    std::remove("cli_pair.net");
    std::remove("cli_pair_report.json");
}

TEST_CASE("restore prints the restoration columns") {
    write_file("cli_restore.net", kPairFile);
    CliRun r = run_cli({"restore", "cli_restore.net"});
    CHECK(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("The number of restored buses"));
    CHECK_THAT(r.out, ContainsSubstring("The number of self-healing islands"));
    std::remove("cli_restore.net");
}

TEST_CASE("validate accepts a good file and rejects broken ones") {
    write_file("cli_good.net", kPairFile);
    CliRun good = run_cli({"validate", "cli_good.net"});
    CHECK(good.code == 0);
    CHECK_THAT(good.out, ContainsSubstring("valid, 2 buses, 1 feeders"));
    std::remove("cli_good.net");

    write_file("cli_bad.net", "{ this is not json");
    CliRun bad = run_cli({"validate", "cli_bad.net"});
    CHECK(bad.code == 1);
    CHECK_THAT(bad.err, ContainsSubstring("cli_bad.net"));
    std::remove("cli_bad.net");

    // parses fine but the feeder dangles
    write_file("cli_dangling.net", R"({
      "base_mva": 1.0, "base_kv": 6.6,
      "buses": [{"id": "b0", "root": true, "gen_p": [0.0, 1.0]}],
      "feeders": [{"id": "f0", "from": "b0", "to": "nowhere",
                   "r": 0.08, "x": 0.06, "i_max": 100.0}]
    })");
    CliRun dangling = run_cli({"validate", "cli_dangling.net"});
    CHECK(dangling.code == 1);
    CHECK_THAT(dangling.err, ContainsSubstring("unknown_endpoint"));
    std::remove("cli_dangling.net");
}

TEST_CASE("missing network file reports an error") {
    CliRun r = run_cli({"reconfigure", "no_such_file.net"});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("no_such_file.net"));
}

TEST_CASE("unknown flags and missing subcommands are usage errors") {
    CliRun unknown = run_cli({"reconfigure", "x.net", "--frobnicate"});
    CHECK(unknown.code == 2);

    CliRun none = run_cli({});
    CHECK(none.code == 2);
}

TEST_CASE("infeasible network exits nonzero with a diagnostic") {
    write_file("cli_choked.net", kChokedFile);
    CliRun r = run_cli({"reconfigure", "cli_choked.net"});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("no operable configuration"));
    std::remove("cli_choked.net");
}

TEST_CASE("sweep-lambda prints one row per segment count") {
    write_file("cli_sweep.net", kPairFile);
    CliRun r = run_cli({"sweep-lambda", "cli_sweep.net", "--lambdas", "3,7", "--out",
                        "cli_sweep.json"});
    CHECK(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("Set value of Lambda"));
    // header plus one line per requested count
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 3);

    json doc = json::parse(slurp("cli_sweep.json"));
    REQUIRE(doc.size() == 2);
    CHECK(doc[0]["lambda"] == 3);
    CHECK(doc[1]["lambda"] == 7);
    // finer segmentation cannot make the model objective worse
    CHECK(doc[1]["objective"].get<double>() <= doc[0]["objective"].get<double>() + 1e-12);
    std::remove("cli_sweep.net");
    std::remove("cli_sweep.json");
}

TEST_CASE("dump-model writes the direct model before solving") {
    write_file("cli_dump.net", kPairFile);
    CliRun r = run_cli({"reconfigure", "cli_dump.net", "--dump-model", "cli_dump.lp"});
    CHECK(r.code == 0);
    const std::string lp = slurp("cli_dump.lp");
    CHECK_THAT(lp, ContainsSubstring("Subject To"));
    CHECK_THAT(lp, ContainsSubstring("Binaries"));
    std::remove("cli_dump.net");
    std::remove("cli_dump.lp");
}

TEST_CASE("big-m flag takes tight or fixed:<value>") {
    write_file("cli_bigm.net", kPairFile);
    CHECK(run_cli({"reconfigure", "cli_bigm.net", "--big-m", "fixed:5000"}).code == 0);
    CHECK(run_cli({"reconfigure", "cli_bigm.net", "--big-m", "fixed:abc"}).code == 2);
    CHECK(run_cli({"reconfigure", "cli_bigm.net", "--big-m", "fixed:-3"}).code == 2);
    CHECK(run_cli({"reconfigure", "cli_bigm.net", "--backend", "bogus"}).code == 2);
    std::remove("cli_bigm.net");
}

TEST_CASE("external backend without a command is a runtime error") {
    write_file("cli_ext.net", kPairFile);
    const char* saved = std::getenv("LPP_EXTERNAL_SOLVER");
    std::string saved_value = saved ? saved : "";
    unsetenv("LPP_EXTERNAL_SOLVER");
    CliRun r = run_cli({"reconfigure", "cli_ext.net", "--backend", "external"});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("unavailable"));
    if (saved) setenv("LPP_EXTERNAL_SOLVER", saved_value.c_str(), 1);
    std::remove("cli_ext.net");
}

TEST_CASE("help is not an error") {
    CliRun top = run_cli({"--help"});
    CHECK(top.code == 0);
    CHECK_THAT(top.out, ContainsSubstring("reconfigure"));
    CHECK_THAT(top.out, ContainsSubstring("restore"));

    CliRun sub = run_cli({"reconfigure", "--help"});
    CHECK(sub.code == 0);
    CHECK_THAT(sub.out, ContainsSubstring("--lambda"));
}
