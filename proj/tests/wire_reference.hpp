#pragma once

#include <random>

#include "dovetail/wire.hpp"

namespace dovetail::testing {

inline Packet random_packet(std::mt19937_64& rng) {
  Packet p;
  p.type = static_cast<PacketType>(rng() % 5);
  auto fill = [&](Bytes& b, std::size_t n) {
    b.resize(n);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  };
  fill(p.u, rng() % (kMaxUnencryptedBytes + 1));
  if (has_transit(p.type)) fill(p.t, rng() % 300);
  if (has_join(p.type)) fill(p.j, 8 * (rng() % 20));
  if (p.type != PacketType::Plain)
    for (auto& x : p.n1) x = static_cast<std::uint8_t>(rng());
  if (p.type == PacketType::Construct)
    for (auto& x : p.n2) x = static_cast<std::uint8_t>(rng());
  if (has_offset(p.type)) p.offset = static_cast<std::uint16_t>(rng() % (p.t.size() + 1));
  fill(p.payload, rng() % 100);
  return p;
}

inline void put16(Bytes& b, std::size_t v) {
  b.push_back(static_cast<std::uint8_t>(v >> 8));
  b.push_back(static_cast<std::uint8_t>(v));
}

// Straight-line reference serializer following the documented layout.
inline Bytes reference_encode(const Packet& p) {
  Bytes b{p.version, static_cast<std::uint8_t>(p.type)};
  put16(b, p.u.size());
  b.insert(b.end(), p.u.begin(), p.u.end());
  if (p.type != PacketType::Plain) {
    put16(b, p.t.size());
    b.insert(b.end(), p.t.begin(), p.t.end());
  }
  if (p.type == PacketType::Construct) {
    put16(b, p.j.size());
    b.insert(b.end(), p.j.begin(), p.j.end());
  }
  if (p.type != PacketType::Plain) b.insert(b.end(), p.n1.begin(), p.n1.end());
  if (p.type == PacketType::Construct) b.insert(b.end(), p.n2.begin(), p.n2.end());
  if (p.type == PacketType::ConstructReturn || p.type == PacketType::Data ||
      p.type == PacketType::Response)
    put16(b, p.offset);
  put16(b, p.payload.size());
  b.insert(b.end(), p.payload.begin(), p.payload.end());
  return b;
}

}  // namespace dovetail::testing
