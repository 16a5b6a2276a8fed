#include "iidetect/wire.hpp"

#include <bit>
#include <limits>

#include "iidetect/error.hpp"

namespace iidetect::wire {

namespace {

[[noreturn]] void bad(const std::string& what) {
  throw Error(ErrorCode::kProtocolViolation, what);
}

void put_le(Bytes& out, std::uint64_t v, int width) {
  for (int i = 0; i < width; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> in) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < in.size(); ++i) v |= std::uint64_t{in[i]} << (8 * i);
  return v;
}

std::uint32_t checked_u32(Index n) {
  if (n < 0 || static_cast<std::uint64_t>(n) > std::numeric_limits<std::uint32_t>::max()) {
    bad("dimension does not fit in u32");
  }
  return static_cast<std::uint32_t>(n);
}

void expect_type(const Frame& frame, MsgType type, const char* name) {
  if (frame.type != type) bad(std::string("expected ") + name + " frame");
}

}  // namespace

bool is_known_type(std::uint8_t type) {
  switch (static_cast<MsgType>(type)) {
    case MsgType::kConfig:
    case MsgType::kStepReq:
    case MsgType::kStepResp:
    case MsgType::kClose:
    case MsgType::kError:
      return true;
  }
  return false;
}

Bytes encode_frame(const Frame& frame) {
  if (frame.payload.size() > kMaxPayload) bad("payload exceeds frame limit");
  Bytes out;
  out.reserve(kHeaderSize + frame.payload.size());
  out.push_back(static_cast<std::uint8_t>(frame.type));
  put_le(out, frame.payload.size(), 4);
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  return out;
}

FrameHeader decode_header(std::span<const std::uint8_t, kHeaderSize> header) {
  if (!is_known_type(header[0])) bad("unknown message type " + std::to_string(header[0]));
  const auto length = static_cast<std::uint32_t>(get_le(header.subspan(1, 4)));
  if (length > kMaxPayload) bad("frame length " + std::to_string(length) + " exceeds limit");
  return {static_cast<MsgType>(header[0]), length};
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) bad("short frame header");
  const FrameHeader header = decode_header(bytes.first<kHeaderSize>());
  if (bytes.size() - kHeaderSize != header.length) {
    bad("frame length field disagrees with payload size");
  }
  const auto payload = bytes.subspan(kHeaderSize);
  return {header.type, Bytes(payload.begin(), payload.end())};
}

PayloadWriter& PayloadWriter::u8(std::uint8_t v) {
  bytes_.push_back(v);
  return *this;
}

PayloadWriter& PayloadWriter::u32(std::uint32_t v) {
  put_le(bytes_, v, 4);
  return *this;
}

PayloadWriter& PayloadWriter::u64(std::uint64_t v) {
  put_le(bytes_, v, 8);
  return *this;
}

PayloadWriter& PayloadWriter::f64(double v) {
  put_le(bytes_, std::bit_cast<std::uint64_t>(v), 8);
  return *this;
}

PayloadWriter& PayloadWriter::vec(const Vec& v) {
  u32(checked_u32(v.size()));
  for (Index i = 0; i < v.size(); ++i) f64(v(i));
  return *this;
}

PayloadWriter& PayloadWriter::mat(const Mat& m) {
  u32(checked_u32(m.rows()));
  u32(checked_u32(m.cols()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) f64(m(i, j));
  }
  return *this;
}

PayloadWriter& PayloadWriter::text(const std::string& s) {
  bytes_.insert(bytes_.end(), s.begin(), s.end());
  return *this;
}

std::span<const std::uint8_t> PayloadReader::take(std::size_t n) {
  if (bytes_.size() - pos_ < n) bad("payload too short");
  const auto out = bytes_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t PayloadReader::u8() { return take(1)[0]; }
std::uint32_t PayloadReader::u32() { return static_cast<std::uint32_t>(get_le(take(4))); }
std::uint64_t PayloadReader::u64() { return get_le(take(8)); }
double PayloadReader::f64() { return std::bit_cast<double>(get_le(take(8))); }

Vec PayloadReader::vec() {
  const std::uint32_t n = u32();
  if (bytes_.size() - pos_ < std::size_t{n} * 8) bad("vector length exceeds payload");
  Vec v(n);
  for (std::uint32_t i = 0; i < n; ++i) v(i) = f64();
  return v;
}

Mat PayloadReader::mat() {
  const std::uint32_t rows = u32();
  const std::uint32_t cols = u32();
  if (std::uint64_t{rows} * cols * 8 > bytes_.size() - pos_) bad("matrix size exceeds payload");
  Mat m(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = f64();
  }
  return m;
}

std::string PayloadReader::rest_as_text() {
  const auto rest = take(bytes_.size() - pos_);
  return std::string(rest.begin(), rest.end());
}

void PayloadReader::expect_done() const {
  if (!done()) bad("trailing bytes in payload");
}

Frame make_config(const EncodedConfig& c) {
  PayloadWriter w;
  w.mat(c.F1).mat(c.F2).mat(c.F3).mat(c.H1).mat(c.H2).mat(c.W_root);
  w.vec(c.pi6).vec(c.pi6_left).mat(c.pi8).vec(c.pi4).mat(c.pi9).f64(c.alpha).vec(c.xhat0);
  return {MsgType::kConfig, w.take()};
}

EncodedConfig parse_config(const Frame& frame) {
  expect_type(frame, MsgType::kConfig, "CONFIG");
  PayloadReader r(frame.payload);
  EncodedConfig c;
  c.F1 = r.mat();
  c.F2 = r.mat();
  c.F3 = r.mat();
  c.H1 = r.mat();
  c.H2 = r.mat();
  c.W_root = r.mat();
  c.pi6 = r.vec();
  c.pi6_left = r.vec();
  c.pi8 = r.mat();
  c.pi4 = r.vec();
  c.pi9 = r.mat();
  c.alpha = r.f64();
  c.xhat0 = r.vec();
  r.expect_done();
  return c;
}

Frame make_step_request(const StepRequest& req) {
  PayloadWriter w;
  w.u64(req.k).vec(req.util).vec(req.ytil);
  return {MsgType::kStepReq, w.take()};
}

StepRequest parse_step_request(const Frame& frame) {
  expect_type(frame, MsgType::kStepReq, "STEP_REQ");
  PayloadReader r(frame.payload);
  StepRequest req;
  req.k = r.u64();
  req.util = r.vec();
  req.ytil = r.vec();
  r.expect_done();
  return req;
}

Frame make_step_response(const StepResponse& resp) {
  PayloadWriter w;
  w.u64(resp.k).vec(resp.atil);
  return {MsgType::kStepResp, w.take()};
}

StepResponse parse_step_response(const Frame& frame) {
  expect_type(frame, MsgType::kStepResp, "STEP_RESP");
  PayloadReader r(frame.payload);
  StepResponse resp;
  resp.k = r.u64();
  resp.atil = r.vec();
  r.expect_done();
  return resp;
}

Frame make_close() { return {MsgType::kClose, {}}; }

Frame make_error(WireErrorCode code, const std::string& message) {
  PayloadWriter w;
  w.u8(static_cast<std::uint8_t>(code)).text(message);
  return {MsgType::kError, w.take()};
}

WireError parse_error(const Frame& frame) {
  expect_type(frame, MsgType::kError, "ERROR");
  PayloadReader r(frame.payload);
  const auto code = static_cast<WireErrorCode>(r.u8());
  return {code, r.rest_as_text()};
}

Frame RemoteSession::fail(WireErrorCode code, const std::string& message) {
  closed_ = true;
  target_.reset();
  return make_error(code, message);
}

std::optional<Frame> RemoteSession::handle(const Frame& in) {
  if (closed_) return std::nullopt;
  switch (in.type) {
    case MsgType::kConfig: {
      if (target_) return fail(WireErrorCode::kBadFrame, "duplicate CONFIG");
      EncodedConfig config;
      try {
        config = parse_config(in);
      } catch (const Error& e) {
        return fail(WireErrorCode::kBadFrame, e.what());
      }
      try {
        target_.emplace(std::move(config));
      } catch (const Error& e) {
        return fail(WireErrorCode::kDimMismatch, e.what());
      }
      return std::nullopt;
    }
    case MsgType::kStepReq: {
      if (!target_) return fail(WireErrorCode::kNoConfig, "STEP_REQ before CONFIG");
      StepRequest req;
      try {
        req = parse_step_request(in);
      } catch (const Error& e) {
        return fail(WireErrorCode::kBadFrame, e.what());
      }
      if (req.k != last_k_ + 1) {
        return fail(WireErrorCode::kKMismatch, "expected k=" + std::to_string(last_k_ + 1) +
                                                   ", got k=" + std::to_string(req.k));
      }
      const EncodedConfig& c = target_->config();
      if (req.util.size() != c.nu_tilde() || req.ytil.size() != c.ny_tilde()) {
        return fail(WireErrorCode::kDimMismatch, "encoded signal dimensions do not match CONFIG");
      }
      const TargetDiag diag = target_->step(req.util, req.ytil);
      last_k_ = req.k;
      return make_step_response({req.k, diag.atil});
    }
    case MsgType::kClose:
      closed_ = true;
      return std::nullopt;
    case MsgType::kStepResp:
    case MsgType::kError:
      break;
  }
  return fail(WireErrorCode::kBadFrame, "unexpected message type from client");
}

std::optional<Frame> RemoteSession::handle_bytes(std::span<const std::uint8_t> bytes) {
  if (closed_) return std::nullopt;
  Frame frame;
  try {
    frame = decode_frame(bytes);
  } catch (const Error& e) {
    return fail(WireErrorCode::kBadFrame, e.what());
  }
  return handle(frame);
}

void LoopbackTransport::send(const Frame& frame) {
  if (auto reply = session_.handle_bytes(encode_frame(frame))) {
    inbox_.push_back(encode_frame(*reply));
  }
}

Frame LoopbackTransport::receive() {
  if (inbox_.empty()) {
    throw Error(ErrorCode::kTransportError, "loopback: no frame pending (session closed?)");
  }
  Bytes bytes = std::move(inbox_.front());
  inbox_.pop_front();
  return decode_frame(bytes);
}

void RecordingTransport::send(const Frame& frame) {
  sent_.push_back(frame);
  inner_.send(frame);
}

Frame RecordingTransport::receive() {
  Frame frame = inner_.receive();
  received_.push_back(frame);
  return frame;
}

ClientSession::ClientSession(Transport& transport, const KeySet& key, const EncodedConfig& config,
                             std::uint64_t encoding_seed)
    : transport_(transport), key_(key), config_(config), rng_(encoding_seed, StreamId::kEncoding) {}

void ClientSession::open() {
  if (opened_) return;
  transport_.send(make_config(config_));
  opened_ = true;
}

ClientStep ClientSession::step(const Vec& u, const Vec& y) {
  if (closed_) throw Error(ErrorCode::kProtocolViolation, "session already closed");
  open();
  ClientStep out;
  out.k = ++k_;
  out.s1 = draw_s1(key_, rng_);
  out.s2 = draw_s2(key_, rng_);
  out.ytil = encode_y(key_, y, out.s1);
  out.util = encode_u(key_, u, out.s2);
  transport_.send(make_step_request({out.k, out.util, out.ytil}));

  const Frame reply = transport_.receive();
  if (reply.type == MsgType::kError) {
    const WireError err = parse_error(reply);
    closed_ = true;
    throw RemoteError(err.code, err.message);
  }
  const StepResponse resp = parse_step_response(reply);
  if (resp.k != out.k) {
    throw Error(ErrorCode::kProtocolViolation, "STEP_RESP for k=" + std::to_string(resp.k) +
                                                   " while waiting for k=" + std::to_string(out.k));
  }
  out.atil = resp.atil;
  out.alarm = decode_alarm(key_, out.atil, out.ytil);
  return out;
}

void ClientSession::close() {
  if (closed_) return;
  if (opened_) transport_.send(make_close());
  closed_ = true;
}

}  // namespace iidetect::wire
