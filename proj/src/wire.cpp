#include "dovetail/wire.hpp"

#include <cstdio>
#include <sstream>

#include "dovetail/byte_io.hpp"

namespace dovetail {

bool has_transit(PacketType t) { return t != PacketType::Plain; }
bool has_join(PacketType t) { return t == PacketType::Construct; }
bool has_offset(PacketType t) {
  return t == PacketType::ConstructReturn || t == PacketType::Data || t == PacketType::Response;
}

std::string to_string(PacketType t) {
  switch (t) {
    case PacketType::Plain: return "plain";
    case PacketType::Construct: return "construct";
    case PacketType::ConstructReturn: return "return";
    case PacketType::Data: return "data";
    case PacketType::Response: return "response";
  }
  return "?";
}

namespace {

void put_segment(ByteWriter& w, const char* name, const Bytes& b) {
  if (b.size() > 0xffff) throw CodecError(name, "over-length");
  w.u16(static_cast<std::uint16_t>(b.size()));
  w.raw(b);
}

Bytes get_segment(ByteReader& r, const char* name) {
  r.segment(name);
  const auto len = r.u16();
  auto v = r.raw(len);
  return Bytes(v.begin(), v.end());
}

}  // namespace

Bytes encode(const Packet& p) {
  if (static_cast<std::uint8_t>(p.type) > 4) throw CodecError("type", "unknown packet type");
  if (p.u.size() > kMaxUnencryptedBytes) throw CodecError("U", "over-length");
  if (has_join(p.type) && p.j.size() % kJoinEntrySize != 0)
    throw CodecError("J", "length not a multiple of the join entry size");
  if (has_offset(p.type) && p.offset > p.t.size()) throw CodecError("offset", "beyond end of T");
  ByteWriter w;
  w.u8(p.version);
  w.u8(static_cast<std::uint8_t>(p.type));
  put_segment(w, "U", p.u);
  if (has_transit(p.type)) put_segment(w, "T", p.t);
  if (has_join(p.type)) put_segment(w, "J", p.j);
  if (has_transit(p.type)) w.raw(p.n1);
  if (has_join(p.type)) w.raw(p.n2);
  if (has_offset(p.type)) w.u16(p.offset);
  put_segment(w, "payload", p.payload);
  return std::move(w).bytes();
}

Packet decode(ByteView bytes) {
  ByteReader r(bytes);
  Packet p;
  r.segment("version");
  p.version = r.u8();
  if (p.version != kWireVersion) throw CodecError("version", "unsupported version");
  r.segment("type");
  const auto type = r.u8();
  if (type > 4) throw CodecError("type", "unknown packet type");
  p.type = static_cast<PacketType>(type);
  p.u = get_segment(r, "U");
  if (p.u.size() > kMaxUnencryptedBytes) throw CodecError("U", "over-length");
  if (has_transit(p.type)) p.t = get_segment(r, "T");
  if (has_join(p.type)) {
    p.j = get_segment(r, "J");
    if (p.j.size() % kJoinEntrySize != 0) throw CodecError("J", "length not a multiple of 8");
  }
  if (has_transit(p.type)) {
    r.segment("N1");
    p.n1 = r.array<16>();
  }
  if (has_join(p.type)) {
    r.segment("N2");
    p.n2 = r.array<16>();
  }
  if (has_offset(p.type)) {
    r.segment("offset");
    p.offset = r.u16();
    if (p.offset > p.t.size()) throw CodecError("offset", "beyond end of T");
  }
  p.payload = get_segment(r, "payload");
  if (r.remaining() != 0) throw CodecError("payload", "trailing bytes");
  return p;
}

std::size_t header_length(const Packet& p) { return encode(p).size() - p.payload.size(); }

std::size_t preamble_length(PacketType t) {
  Packet p;
  p.type = t;
  return header_length(p);
}

std::string hexdump(const Packet& p) {
  std::ostringstream os;
  auto line = [&](const char* label, ByteView b) {
    os << "  " << label;
    for (std::size_t pad = std::char_traits<char>::length(label); pad < 10; ++pad) os << ' ';
    os << '(' << b.size() << ") " << to_hex(b) << '\n';
  };
  os << "packet v" << int(p.version) << ' ' << to_string(p.type) << '\n';
  line("U", p.u);
  if (has_transit(p.type)) line("T", p.t);
  if (has_join(p.type)) line("J", p.j);
  if (has_transit(p.type)) line("N1", p.n1);
  if (has_join(p.type)) line("N2", p.n2);
  if (has_offset(p.type)) os << "  offset    " << p.offset << '\n';
  line("payload", p.payload);
  return os.str();
}

// ---------------------------------------------------------------- records

Bytes encode_path_record(std::span<const Fid> fids, std::uint8_t m_a) {
  if (m_a == 0 || fids.size() + 1 > m_a) throw ArgumentError("internal path exceeds m_A");
  Bytes rec(m_a, 0);
  rec[0] = static_cast<std::uint8_t>(fids.size());
  std::copy(fids.begin(), fids.end(), rec.begin() + 1);
  return rec;
}

std::optional<std::vector<Fid>> decode_path_record(ByteView rec) {
  if (rec.empty()) return std::nullopt;
  const std::size_t n = rec[0];
  if (n + 1 > rec.size()) return std::nullopt;
  for (std::size_t i = n + 1; i < rec.size(); ++i)
    if (rec[i] != 0) return std::nullopt;
  return std::vector<Fid>(rec.begin() + 1, rec.begin() + 1 + static_cast<std::ptrdiff_t>(n));
}

Bytes encode_transit_entry(const TransitEntry& e, std::uint8_t m_a) {
  ByteWriter w;
  w.u32(e.id);
  w.raw(encode_path_record(e.forward, m_a));
  w.raw(encode_path_record(e.reverse, m_a));
  return std::move(w).bytes();
}

DecodedTransit decode_transit_entry(ByteView plain, std::uint8_t m_a) {
  if (plain.size() != 4 + 2 * std::size_t{m_a}) throw CodecError("T", "transit entry size mismatch");
  DecodedTransit d;
  ByteReader r(plain);
  d.entry.id = r.u32();
  auto p = decode_path_record(plain.subspan(4, m_a));
  auto q = decode_path_record(plain.subspan(4 + m_a, m_a));
  if (p && q) {
    d.entry.forward = std::move(*p);
    d.entry.reverse = std::move(*q);
    d.paths_ok = true;
  }
  return d;
}

Bytes encode_join_entry(const JoinEntry& e) {
  ByteWriter w;
  w.u16(e.end_offset);
  w.u8(e.link);
  for (int i = 0; i < 5; ++i) w.u8(0);
  return std::move(w).bytes();
}

std::optional<JoinEntry> decode_join_entry(ByteView plain) {
  if (plain.size() != kJoinEntrySize) return std::nullopt;
  for (std::size_t i = 3; i < kJoinEntrySize; ++i)
    if (plain[i] != 0) return std::nullopt;
  JoinEntry e;
  e.end_offset = static_cast<std::uint16_t>((plain[0] << 8) | plain[1]);
  e.link = plain[2];
  return e;
}

Bytes encode_request(const ContinuationRequest& r) {
  if (r.cost_to_dovetail < 1) throw ArgumentError("cost to dovetail must be at least 1");
  ByteWriter w;
  w.u32(r.dest);
  w.u32(r.dovetail_as);
  w.u8(r.cost_to_dovetail);
  w.raw(r.prior_n2);
  return std::move(w).bytes();
}

ContinuationRequest decode_request(ByteView bytes) {
  ByteReader rd(bytes);
  rd.segment("continuation request");
  ContinuationRequest r;
  r.dest = rd.u32();
  r.dovetail_as = rd.u32();
  r.cost_to_dovetail = rd.u8();
  r.prior_n2 = rd.array<16>();
  if (rd.remaining() != 0) throw CodecError("continuation request", "trailing bytes");
  if (r.cost_to_dovetail < 1) throw CodecError("continuation request", "zero cost to dovetail");
  return r;
}

Bytes pk_encrypt(const PublicKey& matchmaker, const ContinuationRequest& r, const KeySeed& ephemeral) {
  return pk_seal(matchmaker, encode_request(r), ephemeral);
}

ContinuationRequest pk_decrypt(const KeyPair& matchmaker, ByteView blob) {
  return decode_request(pk_open(matchmaker, blob));
}

}  // namespace dovetail
