#pragma once

// Worker-to-worker messaging: failure-free, per-ordered-pair FIFO,
// non-blocking send, blocking receive. Two interchangeable backends: an
// in-process network with a seeded adversarial scheduler (tests), and a TCP
// full mesh with one connection per ordered pair (separate processes).

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "corefine/signature.hpp"

namespace corefine {

enum class Phase : uint8_t { Init = 0, Refine = 1, Result = 2 };

struct Message {
  enum Tag : uint8_t {
    Inedge = 1,   // state
    Done = 2,     // phase, round
    Upd = 3,      // state, id
    Count = 4,    // id
    SumPart = 5,  // round, value
    Result = 6,   // fragment
  };
  Tag tag{};
  uint32_t from = 0;
  Phase phase = Phase::Init;
  uint64_t round = 0;
  uint64_t state = 0;
  SigId id{};
  uint64_t value = 0;
  std::vector<std::pair<uint64_t, SigId>> fragment;

  bool operator==(const Message& o) const;
};

// body bytes (tag byte first); the stream framing adds a u32 length prefix
std::vector<uint8_t> encode_message(const Message& m);
Message decode_message(const uint8_t* data, size_t len);

class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(uint32_t to, const Message& m) = 0;
  virtual Message recv() = 0;  // blocks
  virtual void flush() = 0;    // push buffered frames; call before blocking
  virtual uint32_t self() const = 0;
  virtual uint32_t world() const = 0;
};

// ---- in-process backend ------------------------------------------------------

// One queue per ordered pair. recv picks uniformly at random among the
// sender queues that currently hold a message (seeded per receiver), so
// cross-pair delivery order is adversarial while per-pair FIFO holds.
class InProcNet {
 public:
  InProcNet(uint32_t w, uint64_t seed);
  ~InProcNet();
  Transport& endpoint(uint32_t i);

 private:
  struct Inbox;
  class Endpoint;
  std::vector<std::unique_ptr<Inbox>> inboxes_;
  std::vector<std::unique_ptr<Endpoint>> endpoints_;
};

// ---- tcp backend -------------------------------------------------------------

// roster[i] = "host:port" for worker i
std::vector<std::string> parse_roster(const std::string& text, uint32_t w);

class TcpMesh : public Transport {
 public:
  // listen_fd: already bound+listening socket for roster[self] (pre-binding
  // avoids startup races); TcpMesh owns and closes it
  TcpMesh(uint32_t self, std::vector<std::string> roster, int listen_fd);
  ~TcpMesh() override;

  void send(uint32_t to, const Message& m) override;
  Message recv() override;
  void flush() override;
  uint32_t self() const override { return self_; }
  uint32_t world() const override { return static_cast<uint32_t>(roster_.size()); }

 private:
  void reader_loop(int fd);
  void push_inbox(Message m);
  void flush_one(uint32_t to);

  uint32_t self_;
  std::vector<std::string> roster_;
  std::vector<int> out_fd_;
  std::vector<std::vector<uint8_t>> out_buf_;
  std::vector<std::thread> readers_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Message> inbox_;
  uint32_t closed_peers_ = 0;
  std::string reader_err_;
};

}  // namespace corefine
