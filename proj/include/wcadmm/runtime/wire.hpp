#pragma once

// Binary encoding used by the socket transport.
//
// A connection starts with the 4-byte magic "WCA1" followed by the agent id
// (u32). Every message is then a frame
//
//   u32 length | u8 tag | u32 agent_id | u64 round | segments...
//
// where length counts the bytes after the prefix, vectors are u32 count plus
// IEEE-754 doubles, strings are u32 byte count plus UTF-8, and every integer
// and float is little-endian. Broadcast and Halt use agent id 0xFFFFFFFF;
// InnerTarget carries rho as a one-element vector after the target.

#include "wcadmm/runtime/messages.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace wcadmm::runtime::wire {

inline constexpr std::array<std::uint8_t, 4> kMagic{'W', 'C', 'A', '1'};
/// Frames above this size are rejected as corrupt.
inline constexpr std::uint32_t kMaxFrame = 1u << 28;

enum Tag : std::uint8_t {
  kMuUpdate = 0x01,
  kDualGradient = 0x02,
  kFault = 0x03,
  kBroadcast = 0x81,
  kInnerTarget = 0x82,
  kHalt = 0x83,
};

/// Complete frames, length prefix included.
std::vector<std::uint8_t> encode(const AgentMessage& m);
std::vector<std::uint8_t> encode(const CoordinatorMessage& m);

/// `body` is a frame without its length prefix. Throws RuntimeFault on a
/// malformed body or a tag of the other direction.
AgentMessage decode_agent(std::span<const std::uint8_t> body);
CoordinatorMessage decode_coordinator(std::span<const std::uint8_t> body);

std::vector<std::uint8_t> encode_handshake(std::uint32_t agent_id);
/// Returns the agent id; throws RuntimeFault on a wrong magic.
std::uint32_t decode_handshake(std::span<const std::uint8_t> bytes);
inline constexpr std::size_t kHandshakeSize = 8;

}  // namespace wcadmm::runtime::wire
