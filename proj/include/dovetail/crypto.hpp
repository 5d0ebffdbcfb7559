#pragma once

#include <array>
#include <cstdint>

#include "dovetail/common.hpp"

namespace dovetail {

using PublicKey = std::array<std::uint8_t, 32>;
using SecretKey = std::array<std::uint8_t, 32>;
using KeySeed = std::array<std::uint8_t, 32>;

struct KeyPair {
  PublicKey pk{};
  SecretKey sk{};
};

/// Truncated SHA-256 of `data` (first 128 bits).
Nonce hash128(ByteView data);

/// One step of the N2 hash chain.
Nonce chain_hash(const Nonce& n);
/// `times` applications of chain_hash; times == 0 returns n.
Nonce chain_hash(const Nonce& n, int times);

/// H(n1 || transit); with an empty transit segment this is H(n1).
Nonce path_hash(const Nonce& n1, ByteView transit);

/// Length-preserving stream cipher E(k, v, x). The keystream is
/// SHA-256(k || SHA-256(iv) || block counter), so the IV may have any length.
/// Decryption is the same operation.
Bytes sym_encrypt(const SymKey& key, ByteView iv, ByteView plaintext);
Bytes sym_decrypt(const SymKey& key, ByteView iv, ByteView ciphertext);

/// Concatenation helper for IV construction.
Bytes concat(ByteView a, ByteView b);

KeyPair keypair_from_seed(const KeySeed& seed);

/// Sealed public-key encryption: an ephemeral X25519 key (derived from
/// `ephemeral_seed`) plus crypto_box. Output is epk || box, 48 bytes longer
/// than the plaintext.
Bytes pk_seal(const PublicKey& recipient, ByteView plaintext, const KeySeed& ephemeral_seed);
/// Throws CryptoError when the blob does not open under `keys`.
Bytes pk_open(const KeyPair& keys, ByteView blob);

inline constexpr std::size_t kSealOverhead = 48;

}  // namespace dovetail
