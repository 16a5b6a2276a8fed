#pragma once

// Length-prefixed binary framing between the user and the remote station.
//
//   +--------+-------------------+-----------------+
//   | type:1 | length:4 (u32 LE) | payload:length  |
//   +--------+-------------------+-----------------+
//
// Payload primitives are little-endian: u64 step counters, f64 scalars,
// vectors as (u32 n, n x f64) and matrices as (u32 rows, u32 cols,
// rows*cols x f64 row-major).
//
//   CONFIG     F1 F2 F3 H1 H2 W_root (mat) Pi6 Pi6L (vec) Pi8 (mat) Pi4 (vec)
//              Pi9 (mat) alpha (f64) xhat0 (vec)
//   STEP_REQ   k (u64) util (vec) ytil (vec)
//   STEP_RESP  k (u64) atil (vec)
//   CLOSE      empty
//   ERROR      code (u8) message (UTF-8, rest of payload)

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iidetect/coding.hpp"
#include "iidetect/error.hpp"
#include "iidetect/encoded_config.hpp"
#include "iidetect/random.hpp"
#include "iidetect/target.hpp"

namespace iidetect::wire {

enum class MsgType : std::uint8_t {
  kConfig = 0x01,
  kStepReq = 0x02,
  kStepResp = 0x03,
  kClose = 0x04,
  kError = 0x7F,
};

enum class WireErrorCode : std::uint8_t {
  kNoConfig = 1,
  kBadFrame = 2,
  kKMismatch = 3,
  kDimMismatch = 4,
};

inline constexpr std::size_t kHeaderSize = 5;
inline constexpr std::uint32_t kMaxPayload = 64u << 20;

using Bytes = std::vector<std::uint8_t>;

struct Frame {
  MsgType type = MsgType::kClose;
  Bytes payload;

  bool operator==(const Frame&) const = default;
};

bool is_known_type(std::uint8_t type);

Bytes encode_frame(const Frame& frame);

/// Decodes exactly one frame occupying all of `bytes`; throws
/// kProtocolViolation on bad type, short buffer or length disagreement.
Frame decode_frame(std::span<const std::uint8_t> bytes);

struct FrameHeader {
  MsgType type;
  std::uint32_t length;
};

FrameHeader decode_header(std::span<const std::uint8_t, kHeaderSize> header);

class PayloadWriter {
 public:
  PayloadWriter& u8(std::uint8_t v);
  PayloadWriter& u32(std::uint32_t v);
  PayloadWriter& u64(std::uint64_t v);
  PayloadWriter& f64(double v);
  PayloadWriter& vec(const Vec& v);
  PayloadWriter& mat(const Mat& m);
  PayloadWriter& text(const std::string& s);

  Bytes take() { return std::move(bytes_); }

 private:
  Bytes bytes_;
};

/// Reads primitives in order; throws kProtocolViolation when the payload
/// runs short.
class PayloadReader {
 public:
  explicit PayloadReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  Vec vec();
  Mat mat();
  std::string rest_as_text();

  bool done() const { return pos_ == bytes_.size(); }
  void expect_done() const;

 private:
  std::span<const std::uint8_t> take(std::size_t n);

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct StepRequest {
  std::uint64_t k = 0;
  Vec util;
  Vec ytil;
};

struct StepResponse {
  std::uint64_t k = 0;
  Vec atil;
};

struct WireError {
  WireErrorCode code;
  std::string message;
};

Frame make_config(const EncodedConfig& config);
EncodedConfig parse_config(const Frame& frame);
Frame make_step_request(const StepRequest& req);
StepRequest parse_step_request(const Frame& frame);
Frame make_step_response(const StepResponse& resp);
StepResponse parse_step_response(const Frame& frame);
Frame make_close();
Frame make_error(WireErrorCode code, const std::string& message);
WireError parse_error(const Frame& frame);

/// Raised on the client side when the remote answers with an ERROR frame.
class RemoteError : public Error {
 public:
  RemoteError(WireErrorCode code, const std::string& message)
      : Error(ErrorCode::kProtocolViolation,
              "remote error " + std::to_string(static_cast<int>(code)) + ": " + message),
        wire_code_(code) {}

  WireErrorCode wire_code() const { return wire_code_; }

 private:
  WireErrorCode wire_code_;
};

/// Remote-side protocol state machine for one connection: one CONFIG, then
/// STEP_REQ with k = 1, 2, ... until CLOSE.  Any violation produces an ERROR
/// frame and closes the session.
class RemoteSession {
 public:
  /// Reply to `in`, or nothing (CLOSE).  After an ERROR reply or CLOSE the
  /// session is closed and ignores further input.
  std::optional<Frame> handle(const Frame& in);

  /// Same, starting from raw bytes; undecodable frames become bad-frame errors.
  std::optional<Frame> handle_bytes(std::span<const std::uint8_t> bytes);

  bool closed() const { return closed_; }
  std::uint64_t steps() const { return last_k_; }

 private:
  Frame fail(WireErrorCode code, const std::string& message);

  std::optional<TargetDetector> target_;
  std::uint64_t last_k_ = 0;
  bool closed_ = false;
};

/// Bidirectional frame channel as seen from the user side.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(const Frame& frame) = 0;
  virtual Frame receive() = 0;
};

/// In-process transport: frames are serialized to bytes and handed to a
/// local RemoteSession, so the codec is exercised exactly as over TCP.
class LoopbackTransport : public Transport {
 public:
  void send(const Frame& frame) override;
  Frame receive() override;

  const RemoteSession& session() const { return session_; }

 private:
  RemoteSession session_;
  std::deque<Bytes> inbox_;
};

/// Decorator that keeps a copy of every frame in both directions.
class RecordingTransport : public Transport {
 public:
  explicit RecordingTransport(Transport& inner) : inner_(inner) {}

  void send(const Frame& frame) override;
  Frame receive() override;

  const std::vector<Frame>& sent() const { return sent_; }
  const std::vector<Frame>& received() const { return received_; }

 private:
  Transport& inner_;
  std::vector<Frame> sent_;
  std::vector<Frame> received_;
};

struct ClientStep {
  std::uint64_t k = 0;
  Vec util;
  Vec ytil;
  Vec s1;  // one-time noise behind ytil; b1 = N1 s1
  Vec s2;
  Vec atil;
  bool alarm = false;
};

/// User side of a session: encodes (u, y), ships them, decodes the reply.
class ClientSession {
 public:
  ClientSession(Transport& transport, const KeySet& key, const EncodedConfig& config,
                std::uint64_t encoding_seed);

  /// Sends CONFIG.  Called implicitly by the first step().
  void open();

  /// Throws RemoteError on an ERROR reply, kProtocolViolation on an
  /// unexpected or out-of-sequence reply and kDecodeDrift from decoding.
  ClientStep step(const Vec& u, const Vec& y);

  void close();

  std::uint64_t k() const { return k_; }

 private:
  Transport& transport_;
  const KeySet& key_;
  const EncodedConfig& config_;
  RandomStream rng_;
  std::uint64_t k_ = 0;
  bool opened_ = false;
  bool closed_ = false;
};

struct AlarmEvent {
  std::uint64_t k;
  bool alarm;
};

/// Runs a whole session: for k = 1.. pulls (u, y) from `source` until it
/// returns nullopt, then sends CLOSE.  Yields exactly one alarm per step.
template <typename Source>
std::vector<AlarmEvent> run_client_session(Transport& transport, const KeySet& key,
                                           const EncodedConfig& config,
                                           std::uint64_t encoding_seed, Source&& source) {
  ClientSession session(transport, key, config, encoding_seed);
  session.open();
  std::vector<AlarmEvent> alarms;
  while (auto sample = source(session.k() + 1)) {
    const ClientStep step = session.step(sample->first, sample->second);
    alarms.push_back({step.k, step.alarm});
  }
  session.close();
  return alarms;
}

}  // namespace iidetect::wire
