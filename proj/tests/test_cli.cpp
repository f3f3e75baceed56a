#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "json.hpp"

using nlohmann::json;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  std::string cmd = std::string(CLI_PATH) + " " + args + " 2>&1";
  FILE* f = popen(cmd.c_str(), "r");
  REQUIRE(f != nullptr);
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
  int status = pclose(f);
  RunResult res;
  res.out = std::move(out);
  res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string proto(const char* name) { return std::string(PROTO_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Just enough of a JSON Schema checker for the shipped report schema:
// type, required, properties, additionalProperties:false, items, enum, minimum.
bool validates(const json& schema, const json& value, std::string& why) {
  if (schema.contains("enum")) {
    for (const auto& alt : schema["enum"])
      if (alt == value) return true;
    why = "value not in enum: " + value.dump();
    return false;
  }
  if (schema.contains("type")) {
    const std::string t = schema["type"];
    bool ok = (t == "object" && value.is_object()) || (t == "array" && value.is_array()) ||
              (t == "string" && value.is_string()) || (t == "boolean" && value.is_boolean()) ||
              (t == "integer" && value.is_number_integer()) || (t == "number" && value.is_number());
    if (!ok) {
      why = "expected " + t + ", got " + value.dump().substr(0, 60);
      return false;
    }
  }
  if (schema.contains("minimum") && value.is_number() &&
      value.get<double>() < schema["minimum"].get<double>()) {
    why = "below minimum: " + value.dump();
    return false;
  }
  if (value.is_object()) {
    if (schema.contains("required"))
      for (const auto& key : schema["required"])
        if (!value.contains(key.get<std::string>())) {
          why = "missing required key " + key.get<std::string>();
          return false;
        }
    const json props = schema.value("properties", json::object());
    for (auto it = value.begin(); it != value.end(); ++it) {
      if (props.contains(it.key())) {
        if (!validates(props[it.key()], it.value(), why)) {
          why = it.key() + ": " + why;
          return false;
        }
      } else if (schema.value("additionalProperties", json(true)) == json(false)) {
        why = "unexpected key " + it.key();
        return false;
      }
    }
  }
  if (value.is_array() && schema.contains("items")) {
    for (std::size_t i = 0; i < value.size(); ++i)
      if (!validates(schema["items"], value[i], why)) {
        why = "[" + std::to_string(i) + "]: " + why;
        return false;
      }
  }
  return true;
}

}  // namespace

TEST_CASE("the published example invocations exit as documented") {
  RunResult dns = run("check " + proto("dns.mpst"));
  CHECK(dns.code == 1);
  CHECK(dns.out.find("safe") != std::string::npos);
  CHECK(dns.out.find("nterm") != std::string::npos);
  CHECK(dns.out.find("✓") != std::string::npos);
  CHECK(dns.out.find("✗") != std::string::npos);
  CHECK(dns.out.find("101 states and 427 transitions") != std::string::npos);

  RunResult adder = run("check " + proto("adder.mpst") + " --property safe");
  CHECK(adder.code == 0);

  RunResult missing = run("lts missing.mpst --format dot");
  CHECK(missing.code == 2);
  CHECK(missing.out.find("error:") != std::string::npos);
}

TEST_CASE("input failures exit 2 with a diagnostic") {
  CHECK(run("check " + proto("dns.mpst") + " --property bogus").code == 2);
  {
    std::ofstream out("/tmp/mpstcrash_bad.mpst");
    out << "session s\ns[p] = q!{oops\n";
  }
  RunResult r = run("check /tmp/mpstcrash_bad.mpst");
  CHECK(r.code == 2);
  CHECK(r.out.find("error:") != std::string::npos);
  CHECK(run("check " + proto("dns.mpst") + " --max-states 10").code == 2);
  CHECK(run("check " + proto("dns.mpst") + " --reliable z").code == 2);
}

TEST_CASE("every corpus protocol fails at least one property") {
  for (const char* name : {"dns.mpst", "adder.mpst", "twobuyers.mpst", "negotiate.mpst",
                           "broadcast.mpst", "gamma_a.mpst", "gamma_b.mpst", "gamma_c.mpst"}) {
    CAPTURE(name);
    CHECK(run("check " + proto(name)).code == 1);
  }
}

TEST_CASE("JSON reports validate against the shipped schema") {
  json schema = json::parse(slurp(SCHEMA_PATH));

  RunResult r = run("check " + proto("gamma_c.mpst") + " --reliable p --json");
  CHECK(r.code == 1);
  json report = json::parse(r.out);
  std::string why;
  CHECK_MESSAGE(validates(schema, report, why), why);
  CHECK(report["input"].get<std::string>().find("gamma_c.mpst") != std::string::npos);
  CHECK(report["session"] == "s");
  CHECK(report["reliable"] == json::array({"p"}));
  REQUIRE(report["properties"].size() == 5);
  const char* order[] = {"safe", "df", "live", "term", "nterm"};
  const bool holds[] = {true, true, true, false, false};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(report["properties"][i]["name"] == order[i]);
    CHECK(report["properties"][i]["holds"] == holds[i]);
    CHECK(report["properties"][i]["conclusive"] == true);
    CHECK(report["properties"][i]["ms"].get<double>() >= 0.0);
  }
  CHECK(report["lts"]["states"] == 48);
  CHECK(report["lts"]["edges"] == 212);
  CHECK(report["lts"]["reduction_reachable_states"] == 15);
  CHECK(report["lts"]["reduction_reachable_edges"] == 28);
  // failing properties carry witnesses in the report
  CHECK(report["properties"][3]["witness"].size() >= 2);

  // subsetted runs validate too
  RunResult sub = run("check " + proto("dns.mpst") + " --property safe,term --json");
  json sub_report = json::parse(sub.out);
  CHECK_MESSAGE(validates(schema, sub_report, why), why);
  REQUIRE(sub_report["properties"].size() == 2);
  CHECK(sub_report["properties"][0]["name"] == "safe");
  CHECK(sub_report["properties"][1]["name"] == "term");
}

TEST_CASE("reports record the published-figure comparisons") {
  RunResult tb = run("check " + proto("twobuyers.mpst") + " --json");
  CHECK(tb.code == 1);
  json report = json::parse(tb.out);
  bool figures = false, discrepancy = false;
  for (const auto& note : report["notes"]) {
    std::string text = note.get<std::string>();
    figures = figures || text.find("1409 states and 10248 transitions") != std::string::npos;
    discrepancy = discrepancy || text.find("omits this protocol") != std::string::npos;
  }
  CHECK(figures);
  CHECK(discrepancy);

  RunResult ad = run("check " + proto("adder.mpst") + " --json");
  json adder_report = json::parse(ad.out);
  bool adder_note = false;
  for (const auto& note : adder_report["notes"])
    adder_note = adder_note ||
                 note.get<std::string>().find("terminating") != std::string::npos;
  CHECK(adder_note);
}

TEST_CASE("witness printing is opt-in and replayable in shape") {
  RunResult quiet = run("check " + proto("dns.mpst") + " --reliable \"\" --property safe");
  CHECK(quiet.code == 1);
  CHECK(quiet.out.find("witness") == std::string::npos);
  RunResult loud = run("check " + proto("dns.mpst") + " --reliable \"\" --property safe --witness");
  CHECK(loud.code == 1);
  CHECK(loud.out.find("witness for safe:") != std::string::npos);
  CHECK(loud.out.find("violation: ") != std::string::npos);
  CHECK(loud.out.find("--[ ") != std::string::npos);
}

TEST_CASE("state spaces export as DOT and JSON") {
  RunResult dot = run("lts " + proto("dns.mpst") + " --format dot");
  CHECK(dot.code == 0);
  CHECK(dot.out.rfind("digraph", 0) == 0);
  RunResult js = run("lts " + proto("dns.mpst") + " --format json");
  CHECK(js.code == 0);
  json lts = json::parse(js.out);
  CHECK(lts["stats"]["states"] == 80);
  CHECK(lts["stats"]["edges"] == 269);
  RunResult to_file = run("lts " + proto("dns.mpst") + " --format dot -o /tmp/mpstcrash_dns.dot");
  CHECK(to_file.code == 0);
  CHECK(slurp("/tmp/mpstcrash_dns.dot").rfind("digraph", 0) == 0);
}

TEST_CASE("typechecking reports verdicts with the right exit codes") {
  RunResult ok = run("typecheck " + proto("dns.proc") + " --context " + proto("dns.mpst"));
  CHECK(ok.code == 0);
  CHECK(ok.out.find("well-typed") != std::string::npos);
  RunResult explored =
      run("typecheck " + proto("dns.proc") + " --context " + proto("dns.mpst") + " --explore");
  CHECK(explored.code == 0);
  CHECK(explored.out.find("no error term reachable") != std::string::npos);
  RunResult standalone = run("typecheck " + proto("carried.proc") + " --explore");
  CHECK(standalone.code == 0);
  // untypable: the system uses endpoints the context does not grant
  {
    std::ofstream out("/tmp/mpstcrash_bad.proc");
    out << "s[p][q]!zzz(()). 0\n";
  }
  RunResult bad = run("typecheck /tmp/mpstcrash_bad.proc --context " + proto("dns.mpst"));
  CHECK(bad.code == 1);
  CHECK(bad.out.find("type error") != std::string::npos);
  CHECK(run("typecheck /no/such.proc").code == 2);
}

TEST_CASE("help is reachable and exits cleanly") {
  CHECK(run("--help").code == 0);
  CHECK(run("check --help").code == 0);
  CHECK(run("").code == 2);
}
