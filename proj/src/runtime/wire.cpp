#include "wcadmm/runtime/wire.hpp"

#include "wcadmm/errors.hpp"

#include <bit>
#include <cstring>

namespace wcadmm::runtime::wire {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void vec(const Vector& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void header(Tag tag, std::uint32_t agent, std::uint64_t round) {
    u32(0);  // patched in finish()
    u8(tag);
    u32(agent);
    u64(round);
  }
  std::vector<std::uint8_t> finish() {
    const auto len = static_cast<std::uint32_t>(out_.size() - 4);
    for (int i = 0; i < 4; ++i) out_[i] = static_cast<std::uint8_t>(len >> (8 * i));
    return std::move(out_);
  }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  Vector vec() {
    const std::uint32_t n = u32();
    need(static_cast<std::size_t>(n) * 8);
    Vector v(n);
    for (std::uint32_t i = 0; i < n; ++i) v[i] = f64();
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void done() const {
    if (pos_ != in_.size()) throw RuntimeFault("wire: trailing bytes in frame");
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw RuntimeFault("wire: truncated frame");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::vector<std::uint8_t> encode(const AgentMessage& m) {
  Writer w;
  std::visit(overloaded{
                 [&](const MuUpdate& x) {
                   w.header(kMuUpdate, x.agent_id, x.round);
                   w.vec(x.mu);
                 },
                 [&](const DualGradient& x) {
                   w.header(kDualGradient, x.agent_id, x.round);
                   w.vec(x.u);
                   w.vec(x.grad);
                 },
                 [&](const Fault& x) {
                   w.header(kFault, x.agent_id, x.round);
                   w.str(x.error);
                 },
             },
             m);
  return w.finish();
}

std::vector<std::uint8_t> encode(const CoordinatorMessage& m) {
  Writer w;
  std::visit(overloaded{
                 [&](const Broadcast& x) {
                   w.header(kBroadcast, kAllAgents, x.round);
                   w.vec(x.zeta);
                 },
                 [&](const InnerTarget& x) {
                   w.header(kInnerTarget, x.agent_id, x.round);
                   w.vec(x.u_target);
                   w.vec(Vector::Constant(1, x.rho));
                 },
                 [&](const Halt& x) {
                   w.header(kHalt, kAllAgents, 0);
                   w.str(x.reason);
                 },
             },
             m);
  return w.finish();
}

AgentMessage decode_agent(std::span<const std::uint8_t> body) {
  Reader r(body);
  const std::uint8_t tag = r.u8();
  const std::uint32_t agent = r.u32();
  const std::uint64_t round = r.u64();
  AgentMessage out = [&]() -> AgentMessage {
    switch (tag) {
      case kMuUpdate:
        return MuUpdate{agent, round, r.vec()};
      case kDualGradient: {
        Vector u = r.vec();
        Vector g = r.vec();
        return DualGradient{agent, round, std::move(u), std::move(g)};
      }
      case kFault:
        return Fault{agent, round, r.str()};
      default:
        throw RuntimeFault("wire: unexpected tag " + std::to_string(tag) + " from an agent");
    }
  }();
  r.done();
  return out;
}

CoordinatorMessage decode_coordinator(std::span<const std::uint8_t> body) {
  Reader r(body);
  const std::uint8_t tag = r.u8();
  const std::uint32_t agent = r.u32();
  const std::uint64_t round = r.u64();
  CoordinatorMessage out = [&]() -> CoordinatorMessage {
    switch (tag) {
      case kBroadcast:
        return Broadcast{round, r.vec()};
      case kInnerTarget: {
        Vector t = r.vec();
        const Vector rho = r.vec();
        if (rho.size() != 1) throw RuntimeFault("wire: InnerTarget without a scalar rho");
        return InnerTarget{agent, round, std::move(t), rho[0]};
      }
      case kHalt:
        return Halt{r.str()};
      default:
        throw RuntimeFault("wire: unexpected tag " + std::to_string(tag) + " from the coordinator");
    }
  }();
  r.done();
  return out;
}

std::vector<std::uint8_t> encode_handshake(std::uint32_t agent_id) {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(agent_id >> (8 * i)));
  return out;
}

std::uint32_t decode_handshake(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kHandshakeSize || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
    throw RuntimeFault("wire: bad magic in handshake (expected WCA1)");
  Reader r(bytes.subspan(4));
  return r.u32();
}

}  // namespace wcadmm::runtime::wire
