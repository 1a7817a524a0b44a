#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "fixtures.hpp"
#include "cpv/cli.hpp"
#include "cpv/io.hpp"

using namespace cpv;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
  json doc() const { return json::parse(out); }
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path dir;
  TempDir() {
    dir = fs::temp_directory_path() / ("cpv_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

const char* kLeaf = R"({"query":null,"children":[]})";

std::string two_query_json() {
  std::string l = kLeaf;
  return R"({"schema":"cpv-1","tree":[
    {"query":{"kind":"elicit","agent":1,"cells":[["A"],["B"]]},"children":[1,2]},
    {"query":{"kind":"elicit","agent":2,"cells":[["A"],["B"]]},"children":[3,4]},
    {"query":{"kind":"elicit","agent":2,"cells":[["A"],["B"]]},"children":[5,6]},)" +
         l + "," + l + "," + l + "," + l + "]}";
}

}  // namespace

TEST_CASE("builtin and validate") {
  TempDir t;
  auto r = cli({"builtin", "fair_tiebreak_2x2", "--emit", t.path("fair.json")});
  CHECK(r.code == 0);
  auto v = cli({"validate", t.path("fair.json")});
  CHECK(v.code == 0);
  CHECK(v.doc()["profiles"] == 4);
  CHECK(v.doc()["valid"] == true);
  CHECK(read_json_file(t.path("fair.json"))["rule"]["table"].size() == 4);

  cli({"builtin", "second_price", "--params", R"({"n":3,"m":3})", "--emit", t.path("sp.json")});
  CHECK(read_json_file(t.path("sp.json"))["rule"]["table"].size() == 27);
  auto list = cli({"builtin", "--list"});
  CHECK(list.code == 0);
  CHECK(list.out.find("serial_dictatorship") != std::string::npos);
}

TEST_CASE("defects and errors exit with 2") {
  TempDir t;
  cli({"builtin", "fair_tiebreak_2x2", "--emit", t.path("fair.json")});
  std::string l = kLeaf;
  auto ov = t.write("ov.json", R"({"schema":"cpv-1","tree":[{"query":{"kind":"elicit","agent":1,"cells":[["A"],["A","B"]]},"children":[1,2]},)" + l + "," + l + "]}");
  auto r = cli({"validate", t.path("fair.json"), ov});
  CHECK(r.code == 2);
  CHECK(r.doc()["error"]["message"] == "overlap at node /tree/0");
  CHECK(r.err.find("overlap at node /tree/0") != std::string::npos);

  auto bad = t.write("bad.json", "{\"agents\": 2,\n");
  r = cli({"validate", bad});
  CHECK(r.code == 2);
  CHECK(r.doc()["error"]["kind"] == "parse");
  CHECK(r.doc()["error"]["line"] == 2);

  auto schema = t.write("schema.json", R"({"schema":"cpv-1","agents":2,"types":[["A","B"]],"outcomes":["x"],"rule":{"table":[]}})");
  r = cli({"validate", schema});
  CHECK(r.code == 2);
  CHECK(r.doc()["error"]["kind"] == "schema");

  CHECK(cli({"validate", t.path("missing.json")}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"check", t.path("fair.json"), "--property", "nonsense"}).code == 2);
}

TEST_CASE("check, run and synth") {
  TempDir t;
  cli({"builtin", "fair_tiebreak_2x2", "--emit", t.path("fair.json")});
  auto p = t.write("p.json", two_query_json());
  auto r = cli({"check", t.path("fair.json"), p, "--property", "cp"});
  CHECK(r.code == 1);
  auto doc = r.doc();
  CHECK(doc["holds"] == false);
  bool agent2 = false;
  for (const auto& v : doc["violations_by_agent"]) agent2 = agent2 || v["agent"] == 2;
  CHECK(agent2);

  auto run = cli({"run", t.path("fair.json"), p, "--profile", "B,A"});
  CHECK(run.code == 0);
  CHECK(run.doc()["outcome"] == "x'");
  CHECK(run.doc()["steps"].size() == 2);

  auto syn = cli({"synth", t.path("fair.json")});
  CHECK(syn.code == 1);
  CHECK(syn.doc()["status"] == "witness");

  cli({"builtin", "serial_dictatorship", "--emit", t.path("sd.json")});
  auto ok = cli({"synth", t.path("sd.json"), "--emit", t.path("sd_p.json")});
  CHECK(ok.code == 0);
  auto again = cli({"check", t.path("sd.json"), t.path("sd_p.json"), "--property", "cp"});
  CHECK(again.code == 0);
  CHECK(cli({"check", t.path("sd.json"), "--property", "nonbossy"}).code == 0);
  CHECK(cli({"check", t.path("fair.json"), "--property", "corners"}).code == 1);
}

TEST_CASE("enumerate") {
  TempDir t;
  cli({"builtin", "school_four_profiles", "--emit", t.path("a.json")});
  auto r = cli({"enumerate", t.path("a.json"), "--queries", "elicit,count"});
  CHECK(r.code == 1);
  CHECK(r.doc()["status"] == "proven-nonexistent");
  auto any = cli({"enumerate", t.path("a.json"), "--queries", "elicit,count:any", "--emit", t.path("a_p.json")});
  CHECK(any.code == 0);
  CHECK(any.doc()["status"] == "found");
  CHECK(cli({"check", t.path("a.json"), t.path("a_p.json"), "--property", "cp"}).code == 0);

  cli({"builtin", "serial_dictatorship", "--params", R"({"n":3,"objects":["A","B","C"]})", "--emit", t.path("sd3.json")});
  auto b = cli({"enumerate", t.path("sd3.json"), "--max-states", "2"});
  CHECK(b.code == 2);
  CHECK(b.doc()["status"] == "budget-exhausted");
  // stdout is deterministic
  CHECK(cli({"enumerate", t.path("a.json"), "--queries", "elicit,count:any"}).out == any.out);
}

TEST_CASE("round trip through files") {
  TempDir t;
  for (const auto& name : builtin_protocol_names()) {
    CAPTURE(name);
    auto bp = builtin_protocol(name);
    auto inst = t.path(name + ".json"), prot = t.path(name + "_p.json");
    write_json_file(inst, instance_to_json(bp.rule, bp.model));
    write_json_file(prot, protocol_to_json(bp.protocol, bp.phase));
    auto loaded = instance_from_json(read_json_file(inst));
    CHECK(loaded.rule.table() == bp.rule.table());
    auto lp = protocol_from_json(read_json_file(prot), loaded.rule.space());
    CHECK(lp.protocol.size() == bp.protocol.size());
    CHECK(lp.protocol.leaf_map() == bp.protocol.leaf_map());
    CHECK(lp.phase == bp.phase);
    CHECK(protocol_to_json(lp.protocol, lp.phase) == protocol_to_json(bp.protocol, bp.phase));
    CHECK(cli({"validate", inst, prot}).code == 0);
  }
}
