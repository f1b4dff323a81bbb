#include "corefine/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <sstream>

#include "corefine/bytes.hpp"
#include "corefine/errors.hpp"

namespace corefine {

namespace {

constexpr uint32_t kWireMagic = 0x4e465243u;  // "CRFN"
constexpr uint8_t kWireVersion = 1;
constexpr size_t kMaxFrame = 1u << 26;  // 64 MiB; a frame is one message
constexpr size_t kSendBufLimit = 1u << 20;

void put_id(ByteWriter& w, const SigId& id) {
  w.u64(id.hi);
  w.u64(id.lo);
}

SigId get_id(ByteReader& r) {
  SigId id;
  id.hi = r.u64();
  id.lo = r.u64();
  return id;
}

}  // namespace

bool Message::operator==(const Message& o) const {
  return tag == o.tag && from == o.from && phase == o.phase && round == o.round &&
         state == o.state && id.hi == o.id.hi && id.lo == o.id.lo && value == o.value &&
         fragment == o.fragment;
}

std::vector<uint8_t> encode_message(const Message& m) {
  std::vector<uint8_t> out;
  ByteWriter w(out);
  w.u8(static_cast<uint8_t>(m.tag));
  w.u32(m.from);
  switch (m.tag) {
    case Message::Inedge:
      w.u64(m.state);
      break;
    case Message::Done:
      w.u8(static_cast<uint8_t>(m.phase));
      w.u64(m.round);
      break;
    case Message::Upd:
      w.u64(m.state);
      put_id(w, m.id);
      break;
    case Message::Count:
      put_id(w, m.id);
      break;
    case Message::SumPart:
      w.u64(m.round);
      w.u64(m.value);
      break;
    case Message::Result:
      w.u32(static_cast<uint32_t>(m.fragment.size()));
      for (const auto& [s, id] : m.fragment) {
        w.u64(s);
        put_id(w, id);
      }
      break;
    default:
      throw ProtocolError("cannot encode message with unknown tag");
  }
  return out;
}

Message decode_message(const uint8_t* data, size_t len) {
  ByteReader r(data, len);
  Message m;
  uint8_t tag = r.u8();
  if (tag < 1 || tag > 6) throw ProtocolError("unknown message tag " + std::to_string(tag));
  m.tag = static_cast<Message::Tag>(tag);
  m.from = r.u32();
  switch (m.tag) {
    case Message::Inedge:
      m.state = r.u64();
      break;
    case Message::Done: {
      uint8_t p = r.u8();
      if (p > 2) throw ProtocolError("unknown phase tag " + std::to_string(p));
      m.phase = static_cast<Phase>(p);
      m.round = r.u64();
      break;
    }
    case Message::Upd:
      m.state = r.u64();
      m.id = get_id(r);
      break;
    case Message::Count:
      m.id = get_id(r);
      break;
    case Message::SumPart:
      m.round = r.u64();
      m.value = r.u64();
      break;
    case Message::Result: {
      uint32_t cnt = r.u32();
      m.fragment.reserve(cnt);
      for (uint32_t i = 0; i < cnt; ++i) {
        uint64_t s = r.u64();
        m.fragment.emplace_back(s, get_id(r));
      }
      break;
    }
    default:
      break;  // unreachable
  }
  if (!r.done()) throw ProtocolError("trailing bytes after message payload");
  return m;
}

// ---- in-process backend ------------------------------------------------------

struct InProcNet::Inbox {
  std::mutex mu;
  std::condition_variable cv;
  std::vector<std::deque<Message>> q;  // by sender
  std::mt19937_64 rng;
  size_t pending = 0;
};

class InProcNet::Endpoint : public Transport {
 public:
  Endpoint(InProcNet* net, uint32_t self, uint32_t world)
      : net_(net), self_(self), world_(world) {}

  void send(uint32_t to, const Message& m) override {
    if (to >= world_) throw ProtocolError("send to unknown worker");
    Inbox& box = *net_->inboxes_[to];
    {
      std::lock_guard<std::mutex> lk(box.mu);
      box.q[self_].push_back(m);
      box.q[self_].back().from = self_;
      ++box.pending;
    }
    box.cv.notify_one();
  }

  Message recv() override {
    Inbox& box = *net_->inboxes_[self_];
    std::unique_lock<std::mutex> lk(box.mu);
    box.cv.wait(lk, [&] { return box.pending > 0; });
    // adversarial choice: any sender with a queued message may go next
    uint32_t alive = 0;
    for (uint32_t s = 0; s < world_; ++s)
      if (!box.q[s].empty()) ++alive;
    uint64_t pick = box.rng() % alive;
    for (uint32_t s = 0; s < world_; ++s) {
      if (box.q[s].empty()) continue;
      if (pick-- == 0) {
        Message m = std::move(box.q[s].front());
        box.q[s].pop_front();
        --box.pending;
        return m;
      }
    }
    throw ProtocolError("inbox bookkeeping out of sync");
  }

  void flush() override {}
  uint32_t self() const override { return self_; }
  uint32_t world() const override { return world_; }

 private:
  InProcNet* net_;
  uint32_t self_;
  uint32_t world_;
};

InProcNet::InProcNet(uint32_t w, uint64_t seed) {
  inboxes_.reserve(w);
  endpoints_.reserve(w);
  for (uint32_t i = 0; i < w; ++i) {
    auto box = std::make_unique<Inbox>();
    box->q.resize(w);
    box->rng.seed(seed ^ (0x9e3779b97f4a7c15ull * (i + 1)));
    inboxes_.push_back(std::move(box));
    endpoints_.push_back(std::make_unique<Endpoint>(this, i, w));
  }
}

InProcNet::~InProcNet() = default;

Transport& InProcNet::endpoint(uint32_t i) { return *endpoints_.at(i); }

// ---- tcp backend -------------------------------------------------------------

std::vector<std::string> parse_roster(const std::string& text, uint32_t w) {
  std::vector<std::string> roster(w);
  std::vector<bool> seen(w, false);
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    uint64_t id;
    std::string addr, extra;
    if (!(ls >> id)) {
      if (ls.eof()) continue;  // blank line
      throw ParseError("roster line must start with a worker id", line_no);
    }
    if (!(ls >> addr) || (ls >> extra))
      throw ParseError("roster line must be \"worker_id host:port\"", line_no);
    if (id >= w) throw ParseError("worker id " + std::to_string(id) + " out of range", line_no);
    if (seen[id]) throw ParseError("duplicate roster entry for worker " + std::to_string(id), line_no);
    if (addr.rfind(':') == std::string::npos)
      throw ParseError("address missing port: " + addr, line_no);
    seen[id] = true;
    roster[id] = addr;
  }
  for (uint32_t i = 0; i < w; ++i)
    if (!seen[i]) throw ParseError("roster has no entry for worker " + std::to_string(i));
  return roster;
}

namespace {

[[noreturn]] void die_errno(const std::string& what) {
  throw ProtocolError(what + ": " + std::strerror(errno));
}

// reads exactly n bytes; false on clean EOF at a frame boundary (n_read == 0)
bool read_exact(int fd, uint8_t* buf, size_t n) {
  size_t got = 0;
  while (got < n) {
    ssize_t k = ::read(fd, buf + got, n - got);
    if (k == 0) {
      if (got == 0) return false;
      throw ProtocolError("peer closed connection mid-frame");
    }
    if (k < 0) {
      if (errno == EINTR) continue;
      die_errno("read from peer failed");
    }
    got += static_cast<size_t>(k);
  }
  return true;
}

void write_all(int fd, const uint8_t* buf, size_t n) {
  size_t sent = 0;
  while (sent < n) {
    ssize_t k = ::send(fd, buf + sent, n - sent, MSG_NOSIGNAL);
    if (k < 0) {
      if (errno == EINTR) continue;
      die_errno("send to peer failed");
    }
    sent += static_cast<size_t>(k);
  }
}

int connect_retry(const std::string& addr) {
  size_t colon = addr.rfind(':');
  std::string host = addr.substr(0, colon);
  std::string port = addr.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(20);
  for (;;) {
    addrinfo* res = nullptr;
    int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res);
    if (rc != 0) throw ProtocolError("cannot resolve " + addr + ": " + gai_strerror(rc));
    int fd = -1;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
      fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd >= 0) return fd;
    if (std::chrono::steady_clock::now() > deadline)
      throw ProtocolError("cannot connect to " + addr);
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
  }
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

}  // namespace

TcpMesh::TcpMesh(uint32_t self, std::vector<std::string> roster, int listen_fd)
    : self_(self), roster_(std::move(roster)) {
  uint32_t w = static_cast<uint32_t>(roster_.size());
  out_fd_.assign(w, -1);
  out_buf_.resize(w);

  // accept the w-1 inbound connections while we dial our own
  std::exception_ptr accept_err;
  std::thread acceptor([&] {
    try {
      for (uint32_t k = 0; k + 1 < w; ++k) {
        int fd = ::accept(listen_fd, nullptr, nullptr);
        if (fd < 0) die_errno("accept failed");
        set_nodelay(fd);
        uint8_t hs[9];
        if (!read_exact(fd, hs, sizeof(hs)))
          throw ProtocolError("peer closed connection before handshake");
        ByteReader r(hs, sizeof(hs));
        uint32_t magic = r.u32();
        uint8_t ver = r.u8();
        uint32_t from = r.u32();
        if (magic != kWireMagic) throw ProtocolError("bad connection magic");
        if (ver != kWireVersion)
          throw ProtocolError("wire version mismatch: got " + std::to_string(ver));
        if (from >= w || from == self_) throw ProtocolError("handshake from invalid worker id");
        readers_.emplace_back([this, fd] { reader_loop(fd); });
      }
    } catch (...) {
      accept_err = std::current_exception();
    }
  });

  try {
    for (uint32_t to = 0; to < w; ++to) {
      if (to == self_) continue;
      int fd = connect_retry(roster_[to]);
      set_nodelay(fd);
      std::vector<uint8_t> hs;
      ByteWriter hw(hs);
      hw.u32(kWireMagic);
      hw.u8(kWireVersion);
      hw.u32(self_);
      write_all(fd, hs.data(), hs.size());
      out_fd_[to] = fd;
    }
  } catch (...) {
    ::close(listen_fd);  // unblocks accept so the join below terminates
    acceptor.join();
    throw;
  }
  acceptor.join();
  ::close(listen_fd);
  if (accept_err) std::rethrow_exception(accept_err);
}

TcpMesh::~TcpMesh() {
  for (uint32_t to = 0; to < out_fd_.size(); ++to) {
    if (out_fd_[to] < 0) continue;
    try {
      flush_one(to);
    } catch (const ProtocolError&) {
      // peer may already be gone during teardown
    }
    ::shutdown(out_fd_[to], SHUT_WR);
  }
  for (auto& t : readers_)
    if (t.joinable()) t.join();
  for (int fd : out_fd_)
    if (fd >= 0) ::close(fd);
}

void TcpMesh::push_inbox(Message m) {
  {
    std::lock_guard<std::mutex> lk(mu_);
    inbox_.push_back(std::move(m));
  }
  cv_.notify_one();
}

void TcpMesh::reader_loop(int fd) {
  std::vector<uint8_t> body;
  try {
    for (;;) {
      uint8_t lenbuf[4];
      if (!read_exact(fd, lenbuf, 4)) break;  // clean close
      ByteReader lr(lenbuf, 4);
      uint32_t len = lr.u32();
      if (len == 0 || len > kMaxFrame)
        throw ProtocolError("bad frame length " + std::to_string(len));
      body.resize(len);
      if (!read_exact(fd, body.data(), len))
        throw ProtocolError("peer closed connection mid-frame");
      push_inbox(decode_message(body.data(), len));
    }
  } catch (const std::exception& e) {
    std::lock_guard<std::mutex> lk(mu_);
    if (reader_err_.empty()) reader_err_ = e.what();
  }
  ::close(fd);
  {
    std::lock_guard<std::mutex> lk(mu_);
    ++closed_peers_;
  }
  cv_.notify_all();
}

void TcpMesh::send(uint32_t to, const Message& m) {
  if (to >= world()) throw ProtocolError("send to unknown worker");
  Message copy = m;
  copy.from = self_;
  if (to == self_) {
    push_inbox(std::move(copy));
    return;
  }
  auto body = encode_message(copy);
  auto& buf = out_buf_[to];
  ByteWriter w(buf);
  w.u32(static_cast<uint32_t>(body.size()));
  w.raw(body.data(), body.size());
  if (buf.size() >= kSendBufLimit) flush_one(to);
}

void TcpMesh::flush_one(uint32_t to) {
  auto& buf = out_buf_[to];
  if (buf.empty()) return;
  write_all(out_fd_[to], buf.data(), buf.size());
  buf.clear();
}

void TcpMesh::flush() {
  for (uint32_t to = 0; to < out_buf_.size(); ++to)
    if (out_fd_[to] >= 0) flush_one(to);
}

Message TcpMesh::recv() {
  std::unique_lock<std::mutex> lk(mu_);
  cv_.wait(lk, [&] { return !inbox_.empty() || closed_peers_ + 1 >= world(); });
  if (inbox_.empty()) {
    if (!reader_err_.empty()) throw ProtocolError(reader_err_);
    throw ProtocolError("all peer connections closed while waiting for a message");
  }
  Message m = std::move(inbox_.front());
  inbox_.pop_front();
  return m;
}

}  // namespace corefine
