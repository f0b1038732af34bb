#pragma once

// Independent reference implementations used only to check the library:
// brute-force clipped n-gram ROUGE, a full quadratic LCS table, and a dense
// linear solve for the damped stationary distribution. These deliberately
// avoid sharing code with the implementations they verify.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "litrev/metrics.hpp"

namespace litrev::testsupport {

ScoreTriple naive_rouge_n(const std::vector<std::string>& candidate,
                          const std::vector<std::string>& reference, std::size_t n);

std::size_t quadratic_lcs(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// Solves x = d * P^T x + (1-d)/N directly via Gaussian elimination on
/// (I - d P^T) x = (1-d)/N * 1. `transition` is row-major N x N.
std::vector<double> dense_stationary(const std::vector<double>& transition, std::size_t n,
                                     double damping);

std::vector<std::string> random_token_sequence(std::mt19937_64& rng, std::size_t max_len,
                                               std::size_t alphabet);

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace litrev::testsupport
