#include "dovetail/crypto.hpp"

#include <sodium.h>

#include <cstring>
#include <mutex>

namespace dovetail {

namespace {

void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw CryptoError("libsodium initialisation failed");
  });
}

using Digest = std::array<std::uint8_t, crypto_hash_sha256_BYTES>;

Digest sha256(ByteView data) {
  Digest out{};
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

}  // namespace

std::string to_hex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

Nonce hash128(ByteView data) {
  const auto d = sha256(data);
  Nonce out{};
  std::memcpy(out.data(), d.data(), out.size());
  return out;
}

Nonce chain_hash(const Nonce& n) { return hash128(n); }

Nonce chain_hash(const Nonce& n, int times) {
  Nonce v = n;
  for (int i = 0; i < times; ++i) v = chain_hash(v);
  return v;
}

Nonce path_hash(const Nonce& n1, ByteView transit) {
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  crypto_hash_sha256_update(&st, n1.data(), n1.size());
  crypto_hash_sha256_update(&st, transit.data(), transit.size());
  Digest d{};
  crypto_hash_sha256_final(&st, d.data());
  Nonce out{};
  std::memcpy(out.data(), d.data(), out.size());
  return out;
}

Bytes sym_encrypt(const SymKey& key, ByteView iv, ByteView plaintext) {
  const Digest iv_digest = sha256(iv);
  Bytes out(plaintext.begin(), plaintext.end());
  std::array<std::uint8_t, 16 + 32 + 4> block_input{};
  std::memcpy(block_input.data(), key.data(), key.size());
  std::memcpy(block_input.data() + 16, iv_digest.data(), iv_digest.size());
  for (std::size_t pos = 0, counter = 0; pos < out.size(); ++counter) {
    block_input[48] = static_cast<std::uint8_t>(counter >> 24);
    block_input[49] = static_cast<std::uint8_t>(counter >> 16);
    block_input[50] = static_cast<std::uint8_t>(counter >> 8);
    block_input[51] = static_cast<std::uint8_t>(counter);
    const Digest ks = sha256(block_input);
    for (std::size_t i = 0; i < ks.size() && pos < out.size(); ++i, ++pos) out[pos] ^= ks[i];
  }
  return out;
}

Bytes sym_decrypt(const SymKey& key, ByteView iv, ByteView ciphertext) {
  return sym_encrypt(key, iv, ciphertext);
}

Bytes concat(ByteView a, ByteView b) {
  Bytes out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

KeyPair keypair_from_seed(const KeySeed& seed) {
  ensure_sodium();
  KeyPair kp;
  crypto_box_seed_keypair(kp.pk.data(), kp.sk.data(), seed.data());
  return kp;
}

Bytes pk_seal(const PublicKey& recipient, ByteView plaintext, const KeySeed& ephemeral_seed) {
  ensure_sodium();
  const KeyPair eph = keypair_from_seed(ephemeral_seed);
  // Nonce binds the ephemeral and recipient keys, as in crypto_box_seal.
  std::array<std::uint8_t, crypto_box_NONCEBYTES> nonce{};
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, nonce.size());
  crypto_generichash_update(&st, eph.pk.data(), eph.pk.size());
  crypto_generichash_update(&st, recipient.data(), recipient.size());
  crypto_generichash_final(&st, nonce.data(), nonce.size());

  Bytes out(crypto_box_PUBLICKEYBYTES + crypto_box_MACBYTES + plaintext.size());
  std::memcpy(out.data(), eph.pk.data(), eph.pk.size());
  if (crypto_box_easy(out.data() + crypto_box_PUBLICKEYBYTES, plaintext.data(), plaintext.size(),
                      nonce.data(), recipient.data(), eph.sk.data()) != 0) {
    throw CryptoError("public-key encryption failed");
  }
  return out;
}

Bytes pk_open(const KeyPair& keys, ByteView blob) {
  ensure_sodium();
  if (blob.size() < kSealOverhead) throw CryptoError("sealed blob too short");
  std::array<std::uint8_t, crypto_box_NONCEBYTES> nonce{};
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, nonce.size());
  crypto_generichash_update(&st, blob.data(), crypto_box_PUBLICKEYBYTES);
  crypto_generichash_update(&st, keys.pk.data(), keys.pk.size());
  crypto_generichash_final(&st, nonce.data(), nonce.size());

  Bytes out(blob.size() - kSealOverhead);
  if (crypto_box_open_easy(out.data(), blob.data() + crypto_box_PUBLICKEYBYTES,
                           blob.size() - crypto_box_PUBLICKEYBYTES, nonce.data(), blob.data(),
                           keys.sk.data()) != 0) {
    throw CryptoError("sealed blob does not open under this key");
  }
  return out;
}

}  // namespace dovetail
