#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

// COREFINE_TOOL is injected by the build: path of the corefine binary

namespace {

struct Cmd {
  int code = -1;
  std::string out;  // stdout + stderr merged
};

Cmd run_cmd(const std::string& args) {
  std::string full = std::string(COREFINE_TOOL) + " " + args + " 2>&1";
  FILE* p = popen(full.c_str(), "r");
  REQUIRE(p != nullptr);
  Cmd r;
  char buf[4096];
  size_t k;
  while ((k = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, k);
  int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

const std::string& tmp_dir() {
  static std::string dir = [] {
    std::string t = "/tmp/corefine_cli_test.XXXXXX";
    char* d = mkdtemp(t.data());
    REQUIRE(d != nullptr);
    return t;
  }();
  return dir;
}

std::string tmp_path(const std::string& name) { return tmp_dir() + "/" + name; }

std::string put_file(const std::string& name, const std::string& text) {
  std::string path = tmp_path(name);
  std::ofstream os(path, std::ios::binary);
  os << text;
  REQUIRE(os.good());
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

const char* kDfa =
    "{f,n} x X^{a,b}\n"
    "\n"
    "q: (n, {a: p, b: r})\n"
    "p: (n, {a: q, b: r})\n"
    "r: (f, {a: q, b: p})\n";

const char* kMarkov =
    "D X\n"
    "\n"
    "q: {q: 1/2, p: 1/2}\n"
    "p: {q: 1/4, r: 3/4}\n"
    "r: {r: 1}\n";

}  // namespace

TEST_CASE("minimize agrees across all four engines on the figure inputs") {
  std::string dfa = put_file("dfa.txt", kDfa);
  std::string markov = put_file("markov.txt", kMarkov);

  const char* engines[] = {"seq-exact", "seq-hashed", "dist-inproc", "dist-tcp"};
  for (const char* eng : engines) {
    CAPTURE(eng);
    std::string part = tmp_path(std::string("dfa.part.") + eng);
    std::string stats = tmp_path(std::string("dfa.stats.") + eng);
    Cmd r = run_cmd("minimize -i " + dfa + " -e " + eng + " -w 3 -o " + part + " -s " + stats);
    CHECK(r.code == 0);
    CHECK(slurp(part) == "q: 0\np: 0\nr: 1\n");
    std::string st = slurp(stats);
    CHECK(st.find("blocks=2\n") != std::string::npos);
    CHECK(st.find("iterations=2\n") != std::string::npos);
    CHECK(st.find("n=3\n") != std::string::npos);
  }

  Cmd r = run_cmd("minimize -i " + markov + " -e dist-inproc -w 3 -s " +
                  tmp_path("markov.stats"));
  CHECK(r.code == 0);
  CHECK(r.out == "q: 0\np: 0\nr: 0\n");  // partition on stdout when no -o
  CHECK(slurp(tmp_path("markov.stats")).find("blocks=1\n") != std::string::npos);
}

TEST_CASE("exit codes distinguish parse, protocol, and overflow failures") {
  Cmd missing = run_cmd("minimize -i " + tmp_path("does_not_exist.txt"));
  CHECK(missing.code == 1);
  CHECK(missing.out.find("cannot open") != std::string::npos);

  std::string bad = put_file("bad.txt", "Q X\n\ns0: {}\n");
  Cmd parse = run_cmd("minimize -i " + bad);
  CHECK(parse.code == 1);
  CHECK(parse.out.find("line 1") != std::string::npos);

  // bag multiplicities merge across a block: u64 sum overflows
  std::string over = put_file("overflow.txt",
                              "B X\n"
                              "\n"
                              "s0: {s0: 18446744073709551615, s1: 1}\n"
                              "s1: {s0: 1}\n");
  Cmd of = run_cmd("minimize -i " + over);
  CHECK(of.code == 3);

  std::string chain = put_file("chain.txt",
                               "D X\n\n"
                               "s0: {s1: 1}\ns1: {s2: 1}\ns2: {s3: 1}\ns3: {s4: 1}\n"
                               "s4: {s5: 1}\ns5: {s6: 1}\ns6: {s7: 1}\ns7: {s8: 1}\n"
                               "s8: {s9: 1}\ns9: {s9: 1}\n");
  CHECK(run_cmd("split -i " + chain + " -w 4 -p " + tmp_path("ch")).code == 0);
  std::string bad_roster =
      put_file("bad.roster", "0 127.0.0.1:19401\n1 127.0.0.1:19402\n2 127.0.0.1:19403\n");
  Cmd wrong_w = run_cmd("worker --id 1 --roster " + bad_roster + " --slice " +
                        tmp_path("ch.1.slice"));
  CHECK(wrong_w.code == 2);
  CHECK(wrong_w.out.find("roster lists 3") != std::string::npos);

  std::string whole = slurp(tmp_path("ch.0.slice"));
  put_file("ch.corrupt.slice", whole.substr(0, whole.size() / 2));
  std::string roster4 = put_file("ok.roster",
                                 "0 127.0.0.1:19404\n1 127.0.0.1:19405\n"
                                 "2 127.0.0.1:19406\n3 127.0.0.1:19407\n");
  Cmd corrupt = run_cmd("worker --id 0 --roster " + roster4 + " --slice " +
                        tmp_path("ch.corrupt.slice"));
  CHECK(corrupt.code == 2);
  CHECK(corrupt.out.find("checksum") != std::string::npos);
}

TEST_CASE("split writes the ceiling ranges and a checksummed manifest") {
  std::string chain = put_file("chain2.txt",
                               "D X\n\n"
                               "s0: {s1: 1}\ns1: {s2: 1}\ns2: {s3: 1}\ns3: {s4: 1}\n"
                               "s4: {s5: 1}\ns5: {s6: 1}\ns6: {s7: 1}\ns7: {s8: 1}\n"
                               "s8: {s9: 1}\ns9: {s9: 1}\n");
  CHECK(run_cmd("split -i " + chain + " -w 4 -p " + tmp_path("sp")).code == 0);
  std::string man = slurp(tmp_path("sp.manifest"));
  CHECK(man.find("workers 4\n") != std::string::npos);
  CHECK(man.find("states 10\n") != std::string::npos);
  size_t threes = 0, twos = 0, pos = 0;
  while ((pos = man.find(" states 3 ", pos)) != std::string::npos) threes++, pos++;
  pos = 0;
  while ((pos = man.find(" states 2 ", pos)) != std::string::npos) twos++, pos++;
  CHECK(threes == 2);
  CHECK(twos == 2);
  // deterministic: a second split writes identical slices
  CHECK(run_cmd("split -i " + chain + " -w 4 -p " + tmp_path("sp2")).code == 0);
  CHECK(slurp(tmp_path("sp.2.slice")) == slurp(tmp_path("sp2.2.slice")));
}

TEST_CASE("generate-wta is deterministic and sized as promised") {
  std::string out1 = tmp_path("gen1.txt");
  std::string out2 = tmp_path("gen2.txt");
  CHECK(run_cmd("generate-wta -n 20 -r 1 --seed 7 -o " + out1).code == 0);
  CHECK(run_cmd("generate-wta -n 20 -r 1 --seed 7 -o " + out2).code == 0);
  CHECK(slurp(out1) == slurp(out2));

  std::string stats = tmp_path("gen.stats");
  CHECK(run_cmd("minimize -i " + out1 + " -s " + stats + " -o /dev/null").code == 0);
  std::string st = slurp(stats);
  CHECK(st.find("n=20\n") != std::string::npos);
  CHECK(st.find("n_prime=1020\n") != std::string::npos);
  CHECK(st.find("m=2000\n") != std::string::npos);

  CHECK(run_cmd("generate-wta -n 10 -r 1").code == 1);  // 500 > 4*10^2
  CHECK(run_cmd("generate-wta -n 20 -r 9").code == 1);
}

TEST_CASE("dist-tcp partition file is byte-identical to seq-exact") {
  std::string gen = tmp_path("tcp_gen.txt");
  CHECK(run_cmd("generate-wta -n 20 -r 1 -m bool-or --seed 3 -o " + gen).code == 0);
  std::string p_seq = tmp_path("tcp.seq.part");
  std::string p_tcp = tmp_path("tcp.tcp.part");
  CHECK(run_cmd("minimize -i " + gen + " -e seq-exact -o " + p_seq).code == 0);
  CHECK(run_cmd("minimize -i " + gen + " -e dist-tcp -w 4 -o " + p_tcp).code == 0);
  CHECK(slurp(p_seq) == slurp(p_tcp));
}

TEST_CASE("oracle-check agrees on a figure input and rejects big inputs") {
  std::string dfa = put_file("oc_dfa.txt", kDfa);
  Cmd ok = run_cmd("oracle-check -i " + dfa);
  CHECK(ok.code == 0);
  CHECK(ok.out.find("agree") != std::string::npos);
  CHECK(ok.out.find("blocks=2") != std::string::npos);

  std::ostringstream big;
  big << "P X\n\n";
  for (int i = 0; i < 7; i++) big << "s" << i << ": {}\n";
  Cmd rej = run_cmd("oracle-check -i " + put_file("oc_big.txt", big.str()));
  CHECK(rej.code == 1);
  CHECK(rej.out.find("at most 6") != std::string::npos);
}
