#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace demandcast {

// FNV-1a. Used for derived seeds and provenance hashes; stable across
// platforms, unlike std::hash.
constexpr std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 14695981039346656037ull) {
	std::uint64_t h = seed;
	for (const char c : bytes) {
		h ^= static_cast<unsigned char>(c);
		h *= 1099511628211ull;
	}
	return h;
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
	// splitmix64 finalizer keeps low-entropy inputs (small ints) well mixed
	std::uint64_t z = h + 0x9e3779b97f4a7c15ull + v;
	z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
	z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
	return z ^ (z >> 31);
}

// Deterministic per-task seed: hash(base, tag, index) so parallel workers
// draw identical streams regardless of scheduling.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0) {
	return hash_combine(hash_combine(base, fnv1a(tag)), index);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
	return std::mt19937_64{seed};
}

} // namespace demandcast
