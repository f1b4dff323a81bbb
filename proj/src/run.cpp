#include "corefine/run.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <signal.h>
#include <stdlib.h>
#include <sys/resource.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

#include "corefine/dist_refine.hpp"
#include "corefine/errors.hpp"
#include "corefine/hash128.hpp"
#include "corefine/transport.hpp"

namespace corefine {

namespace {

using clock_type = std::chrono::steady_clock;

uint64_t ms_since(clock_type::time_point t0) {
  return static_cast<uint64_t>(
      std::chrono::duration_cast<std::chrono::milliseconds>(clock_type::now() - t0).count());
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream os(path, std::ios::binary);
  os.write(data.data(), static_cast<std::streamsize>(data.size()));
  os.flush();
  if (!os) throw std::invalid_argument("cannot write " + path);
}

uint64_t parse_u64(const std::string& s, const char* what) {
  try {
    size_t pos = 0;
    uint64_t v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ProtocolError(std::string("malformed ") + what + " in a worker stats fragment");
  }
}

// "key=value" lines, as written by the worker stats fragments
std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ProtocolError("malformed worker stats fragment");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

uint64_t kv_u64(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end())
    throw ProtocolError("worker stats fragment is missing key " + key);
  return parse_u64(it->second, key.c_str());
}

// partition text written by write_partition, read back against known names
std::vector<uint64_t> parse_partition_text(const std::string& text,
                                           const std::vector<std::string>& names) {
  std::vector<uint64_t> block_of;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto colon = line.rfind(": ");
    if (colon == std::string::npos)
      throw ProtocolError("malformed line in the worker partition file");
    size_t i = block_of.size();
    if (i >= names.size() || line.substr(0, colon) != names[i])
      throw ProtocolError("worker partition file does not match the input states");
    block_of.push_back(parse_u64(line.substr(colon + 2), "block id"));
  }
  if (block_of.size() != names.size())
    throw ProtocolError("worker partition file does not cover all states");
  return block_of;
}

struct TempTree {
  std::string dir;
  std::vector<std::string> files;
  ~TempTree() {
    for (const std::string& f : files) ::unlink(f.c_str());
    if (!dir.empty()) ::rmdir(dir.c_str());
  }
};

std::string make_temp_dir() {
  const char* base = getenv("TMPDIR");
  std::string tmpl = std::string(base && *base ? base : "/tmp") + "/corefine.XXXXXX";
  std::vector<char> buf(tmpl.begin(), tmpl.end());
  buf.push_back('\0');
  if (!mkdtemp(buf.data()))
    throw std::runtime_error("cannot create a temporary directory under " + tmpl);
  return std::string(buf.data());
}

int bind_listener_loopback(uint16_t& port_out) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw ProtocolError(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  sa.sin_port = 0;
  socklen_t len = sizeof sa;
  if (::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0 ||
      ::listen(fd, SOMAXCONN) != 0 ||
      ::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len) != 0) {
    int e = errno;
    ::close(fd);
    throw ProtocolError(std::string("cannot bind a loopback listener: ") + std::strerror(e));
  }
  port_out = ntohs(sa.sin_port);
  return fd;
}

int bind_listener_addr(const std::string& addr) {
  auto colon = addr.rfind(':');
  std::string host = addr.substr(0, colon);
  std::string port = addr.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0)
    throw ProtocolError("cannot resolve " + addr + ": " + gai_strerror(rc));
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, SOMAXCONN) == 0) {
      ::freeaddrinfo(res);
      return fd;
    }
    ::close(fd);
  }
  ::freeaddrinfo(res);
  throw ProtocolError("cannot bind listener for " + addr);
}

std::string hex128(Hash128 h) {
  std::ostringstream os;
  os << std::hex << std::setfill('0') << std::setw(16) << h.hi << std::setw(16) << h.lo;
  return os.str();
}

// fork one worker process per rank over pre-bound loopback listeners, reap
// them all, then read back worker 0's partition and the stats fragments
RefineResult tcp_run(const EncodedCoalgebra& enc, const std::vector<std::string>& names,
                     const RunConfig& cfg, uint64_t& worker_rss_out) {
  const uint32_t w = cfg.workers;
  TempTree tmp;
  tmp.dir = make_temp_dir();

  std::vector<std::string> slice_paths, stats_paths;
  for (uint32_t i = 0; i < w; i++) {
    WorkerSlice sl = make_slice(enc, w, i);
    std::string path = tmp.dir + "/slice." + std::to_string(i);
    std::ostringstream body(std::ios::binary);
    write_slice(body, sl);
    write_file(path, body.str());
    tmp.files.push_back(path);
    slice_paths.push_back(path);
    stats_paths.push_back(tmp.dir + "/stats." + std::to_string(i));
    tmp.files.push_back(stats_paths.back());
  }
  std::string part_path = tmp.dir + "/partition";
  tmp.files.push_back(part_path);

  std::vector<int> lfds(w, -1);
  std::ostringstream roster;
  for (uint32_t i = 0; i < w; i++) {
    uint16_t port = 0;
    lfds[i] = bind_listener_loopback(port);
    roster << i << " 127.0.0.1:" << port << "\n";
  }
  std::string roster_path = tmp.dir + "/roster";
  write_file(roster_path, roster.str());
  tmp.files.push_back(roster_path);

  std::string image = cfg.worker_binary.empty() ? "/proc/self/exe" : cfg.worker_binary;
  std::fflush(nullptr);
  std::vector<pid_t> pids;
  for (uint32_t i = 0; i < w; i++) {
    pid_t pid = ::fork();
    if (pid < 0) {
      for (pid_t q : pids) ::kill(q, SIGKILL);
      for (pid_t q : pids) ::waitpid(q, nullptr, 0);
      for (int fd : lfds) ::close(fd);
      throw std::runtime_error(std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
      for (uint32_t j = 0; j < w; j++)
        if (j != i) ::close(lfds[j]);
      std::vector<std::string> args = {image,
                                       "worker",
                                       "--id",
                                       std::to_string(i),
                                       "--roster",
                                       roster_path,
                                       "--slice",
                                       slice_paths[i],
                                       "--listen-fd",
                                       std::to_string(lfds[i]),
                                       "--stats-out",
                                       stats_paths[i]};
      if (i == 0) {
        args.push_back("--partition-out");
        args.push_back(part_path);
      }
      std::vector<char*> argv;
      argv.reserve(args.size() + 1);
      for (std::string& a : args) argv.push_back(a.data());
      argv.push_back(nullptr);
      ::execv(image.c_str(), argv.data());
      _exit(127);
    }
    pids.push_back(pid);
  }
  for (int fd : lfds) ::close(fd);

  // first nonzero exit kills the rest of the mesh; then propagate its class
  int fail_code = 0;
  size_t left = pids.size();
  while (left > 0) {
    int st = 0;
    pid_t p = ::waitpid(-1, &st, 0);
    if (p < 0) {
      if (errno == EINTR) continue;
      break;
    }
    bool ours = false;
    for (pid_t q : pids) ours = ours || q == p;
    if (!ours) continue;
    left--;
    int code = WIFEXITED(st) ? WEXITSTATUS(st) : 128;
    if (code != 0 && fail_code == 0) {
      fail_code = code;
      for (pid_t q : pids)
        if (q != p) ::kill(q, SIGKILL);
    }
  }
  if (fail_code == 1)
    throw ParseError("a worker process rejected its input (exit code 1)");
  if (fail_code == 3)
    throw OverflowError("a worker process hit a monoid overflow (exit code 3)");
  if (fail_code != 0)
    throw ProtocolError("a worker process failed (exit code " + std::to_string(fail_code) + ")");

  RefineResult res;
  auto frag0 = parse_kv(read_file(stats_paths[0]));
  res.iterations = kv_u64(frag0, "iterations");
  std::istringstream hist(frag0.count("history") ? frag0.at("history") : "");
  std::string tok;
  while (std::getline(hist, tok, ','))
    res.history.push_back(parse_u64(tok, "history"));
  res.partition.block_of = parse_partition_text(read_file(part_path), names);
  res.partition.num_blocks = kv_u64(frag0, "blocks");
  uint64_t seen = 0;
  for (uint64_t b : res.partition.block_of) seen = std::max(seen, b + 1);
  if (seen != res.partition.num_blocks)
    throw ProtocolError("worker partition file disagrees with its reported block count");

  worker_rss_out = 0;
  for (uint32_t i = 0; i < w; i++) {
    auto frag = parse_kv(read_file(stats_paths[i]));
    worker_rss_out = std::max(worker_rss_out, kv_u64(frag, "peak_rss_bytes"));
  }
  return res;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open file: " + path);
  std::ostringstream os;
  os << is.rdbuf();
  if (is.bad()) throw ParseError("cannot read file: " + path);
  return os.str();
}

uint64_t peak_rss_bytes() {
  // VmHWM tracks the current address space only, so an exec'd worker reports
  // its own footprint; ru_maxrss would carry the pre-exec high-water mark of
  // the forked parent image across execve
  std::ifstream st("/proc/self/status");
  std::string line;
  while (std::getline(st, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      uint64_t kb = 0;
      if (std::sscanf(line.c_str() + 6, "%" SCNu64, &kb) == 1) return kb * 1024;
    }
  }
  rusage ru{};
  ::getrusage(RUSAGE_SELF, &ru);
  return static_cast<uint64_t>(ru.ru_maxrss) * 1024;  // linux reports KiB
}

bool engine_from_name(const std::string& s, Engine& out) {
  if (s == "seq-exact") out = Engine::SeqExact;
  else if (s == "seq-hashed") out = Engine::SeqHashed;
  else if (s == "dist-inproc") out = Engine::DistInproc;
  else if (s == "dist-tcp") out = Engine::DistTcp;
  else return false;
  return true;
}

const char* engine_name(Engine e) {
  switch (e) {
    case Engine::SeqExact: return "seq-exact";
    case Engine::SeqHashed: return "seq-hashed";
    case Engine::DistInproc: return "dist-inproc";
    case Engine::DistTcp: return "dist-tcp";
  }
  return "?";
}

RunOutcome run_minimize(const RunConfig& cfg) {
  auto t0 = clock_type::now();
  const bool dist = cfg.engine == Engine::DistInproc || cfg.engine == Engine::DistTcp;
  if (dist && cfg.workers < 1)
    throw std::invalid_argument("distributed engines need at least one worker");

  NestedCoalgebra nc = parse_coalgebra(read_file(cfg.input));
  EncodedCoalgebra enc = desort(nc);

  RunOutcome out;
  out.names = nc.names;
  uint64_t worker_rss = 0;
  switch (cfg.engine) {
    case Engine::SeqExact:
      out.result = refine_sequential(enc, RefineMode::Exact);
      break;
    case Engine::SeqHashed:
      out.result = refine_sequential(enc, RefineMode::Hashed);
      break;
    case Engine::DistInproc: {
      DistResult d = refine_distributed_inproc(enc, cfg.workers, cfg.seed);
      out.result = RefineResult{std::move(d.partition), d.iterations, std::move(d.history)};
      break;
    }
    case Engine::DistTcp:
      out.result = tcp_run(enc, nc.names, cfg, worker_rss);
      break;
  }

  out.stats.n = enc.n;
  out.stats.m = enc.m();
  out.stats.n_prime = enc.n_prime();
  out.stats.iterations = out.result.iterations;
  out.stats.blocks = out.result.partition.num_blocks;
  out.stats.wall_ms = ms_since(t0);
  out.stats.peak_rss_bytes_per_worker = worker_rss ? worker_rss : peak_rss_bytes();
  out.stats.splitting_rounds = out.result.iterations ? out.result.iterations - 1 : 0;
  return out;
}

int run_tcp_worker(const WorkerConfig& cfg) {
  auto t0 = clock_type::now();
  std::ifstream is(cfg.slice_path, std::ios::binary);
  if (!is) throw ParseError("cannot open slice file: " + cfg.slice_path);
  WorkerSlice slice = read_slice(is);
  if (slice.self != cfg.id)
    throw ProtocolError("slice belongs to worker " + std::to_string(slice.self) +
                        " but was given to worker " + std::to_string(cfg.id));

  std::string roster_text = read_file(cfg.roster_path);
  uint32_t listed = 0;
  {
    std::istringstream rs(roster_text);
    std::string line;
    while (std::getline(rs, line))
      if (line.find_first_not_of(" \t\r") != std::string::npos) listed++;
  }
  if (listed != slice.world)
    throw ProtocolError("slice was split for W=" + std::to_string(slice.world) +
                        " but the roster lists " + std::to_string(listed) + " workers");
  std::vector<std::string> roster = parse_roster(roster_text, slice.world);

  int lfd = cfg.listen_fd >= 0 ? cfg.listen_fd : bind_listener_addr(roster[slice.self]);
  std::optional<DistResult> res;
  {
    TcpMesh net(slice.self, std::move(roster), lfd);
    res = run_worker(slice, net);
  }  // mesh teardown flushes the final release broadcast

  if (res) {
    if (cfg.partition_out.empty())
      throw std::invalid_argument("worker 0 assembles the result and needs --partition-out");
    std::ostringstream os;
    write_partition(os, slice.names, res->partition.block_of);
    write_file(cfg.partition_out, os.str());
  }
  if (!cfg.stats_out.empty()) {
    std::ostringstream os;
    os << "peak_rss_bytes=" << peak_rss_bytes() << "\n";
    os << "wall_ms=" << ms_since(t0) << "\n";
    if (res) {
      os << "iterations=" << res->iterations << "\n";
      os << "blocks=" << res->partition.num_blocks << "\n";
      os << "history=";
      for (size_t i = 0; i < res->history.size(); i++) os << (i ? "," : "") << res->history[i];
      os << "\n";
    }
    write_file(cfg.stats_out, os.str());
  }
  return 0;
}

void split_coalgebra(const std::string& input_path, uint32_t w, const std::string& prefix) {
  if (w < 1) throw std::invalid_argument("need at least one worker");
  NestedCoalgebra nc = parse_coalgebra(read_file(input_path));
  EncodedCoalgebra enc = desort(nc);
  std::ostringstream man;
  man << "workers " << w << "\n";
  man << "states " << enc.n_prime() << "\n";
  for (uint32_t i = 0; i < w; i++) {
    WorkerSlice sl = make_slice(enc, w, i);
    std::ostringstream body(std::ios::binary);
    write_slice(body, sl);
    std::string bytes = body.str();
    std::string path = prefix + "." + std::to_string(i) + ".slice";
    write_file(path, bytes);
    man << "slice " << i << " " << path << " states " << (sl.hi - sl.lo) << " checksum "
        << hex128(murmur3_x64_128(bytes.data(), bytes.size(), 0)) << "\n";
  }
  write_file(prefix + ".manifest", man.str());
}

}  // namespace corefine
