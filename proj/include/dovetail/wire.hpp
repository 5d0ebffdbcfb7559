#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dovetail/common.hpp"
#include "dovetail/crypto.hpp"

namespace dovetail {

enum class PacketType : std::uint8_t { Plain = 0, Construct = 1, ConstructReturn = 2, Data = 3, Response = 4 };

inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kMaxUnencryptedBytes = 64;

// Wire layout (all integers big-endian):
//
//   version:u8 type:u8
//   U:   len:u16 fids[len]                       all types
//   T:   len:u16 bytes[len]                      all but Plain
//   J:   len:u16 bytes[len]  (len % 8 == 0)      Construct
//   N1:  16 bytes                                all but Plain
//   N2:  16 bytes                                Construct
//   offset:u16  (<= len(T))                      ConstructReturn, Data, Response
//   payload: len:u16 bytes[len]                  all types
struct Packet {
  std::uint8_t version = kWireVersion;
  PacketType type = PacketType::Plain;
  Bytes u;
  Bytes t;
  Bytes j;
  Nonce n1{};
  Nonce n2{};
  std::uint16_t offset = 0;
  Bytes payload;

  friend bool operator==(const Packet&, const Packet&) = default;
};

bool has_transit(PacketType t);
bool has_join(PacketType t);
bool has_offset(PacketType t);
std::string to_string(PacketType t);

/// Throws CodecError (naming the segment) for packets violating the layout.
Bytes encode(const Packet& p);
/// Throws CodecError naming the offending segment on truncated, over-length
/// or trailing input.
Packet decode(ByteView bytes);

/// Encoded bytes excluding payload content.
std::size_t header_length(const Packet& p);
/// Header length of an empty-U, empty-T packet of this type.
std::size_t preamble_length(PacketType t);

/// Multi-line labelled hex dump of every segment and field.
std::string hexdump(const Packet& p);

// ---------------------------------------------------------------- records

/// count byte + FIDs, zero padded to m_a bytes.
Bytes encode_path_record(std::span<const Fid> fids, std::uint8_t m_a);
/// nullopt when the count exceeds capacity or the padding is non-zero.
std::optional<std::vector<Fid>> decode_path_record(ByteView rec);

struct TransitEntry {
  AsId id = 0;
  std::vector<Fid> forward;  ///< p_A
  std::vector<Fid> reverse;  ///< q_A

  friend bool operator==(const TransitEntry&, const TransitEntry&) = default;
};

Bytes encode_transit_entry(const TransitEntry& e, std::uint8_t m_a);
/// Returns the id even when the path records are malformed (paths left
/// empty and `ok` false), so callers can run the id check first.
struct DecodedTransit {
  TransitEntry entry;
  bool paths_ok = false;
};
DecodedTransit decode_transit_entry(ByteView plain, std::uint8_t m_a);

inline constexpr std::size_t kJoinEntrySize = 8;

struct JoinEntry {
  std::uint16_t end_offset = 0;  ///< one past the last byte of T_A within T
  std::uint8_t link = 0;         ///< li_A

  friend bool operator==(const JoinEntry&, const JoinEntry&) = default;
};

Bytes encode_join_entry(const JoinEntry& e);
/// nullopt unless the five pad bytes are zero.
std::optional<JoinEntry> decode_join_entry(ByteView plain);

struct ContinuationRequest {
  VnodeId dest = 0;
  AsId dovetail_as = 0;
  std::uint8_t cost_to_dovetail = 1;  ///< head cost i from source to dovetail
  Nonce prior_n2{};

  friend bool operator==(const ContinuationRequest&, const ContinuationRequest&) = default;
};

inline constexpr std::size_t kContinuationRequestSize = 4 + 4 + 1 + 16;
inline constexpr std::size_t kContinuationBlobSize = kContinuationRequestSize + kSealOverhead;

Bytes encode_request(const ContinuationRequest& r);
ContinuationRequest decode_request(ByteView bytes);

Bytes pk_encrypt(const PublicKey& matchmaker, const ContinuationRequest& r, const KeySeed& ephemeral);
/// Throws CryptoError for a blob sealed to another key.
ContinuationRequest pk_decrypt(const KeyPair& matchmaker, ByteView blob);

}  // namespace dovetail
