#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace litrev {

// Reads a line-delimited file, invoking fn(line_number, line) for every
// non-empty line. Returns the number of lines visited. Throws on I/O failure.
std::size_t for_each_line(const std::string& path,
                          const std::function<void(std::size_t, const std::string&)>& fn);

std::string read_file(const std::string& path);

// All lines including empty ones, for line-aligned pair files.
std::vector<std::string> read_lines(const std::string& path);

// Writes via a temp file in the same directory followed by rename, so readers
// never observe a partially written file.
void atomic_write_file(const std::string& path, const std::string& content);

// FNV-1a, used for config fingerprints embedded in reports and checkpoints.
std::uint64_t fnv1a64(const std::string& bytes);
std::string fingerprint_hex(const std::string& bytes);

// Fisher-Yates with explicit rejection sampling so the permutation depends
// only on the seed, not on the standard library implementation.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

template <typename T>
void deterministic_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
    if (items.size() < 2) return;
    for (std::size_t i = items.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(rng, i + 1));
        std::swap(items[i], items[j]);
    }
}

// Draws k distinct indices from [0, n) in ascending order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k,
                                                    std::mt19937_64& rng);

// Fixed-precision formatting for report files; %.6f keeps outputs byte-stable.
std::string format_fixed(double value, int digits = 6);

}  // namespace litrev
