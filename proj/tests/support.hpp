#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ol/common/matrix.hpp"

namespace test {

inline std::filesystem::path source_dir() { return OL_TEST_SOURCE_DIR; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ol::Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> d;
  ol::Matrix m(rows, cols);
  for (auto& x : m.data()) x = d(rng);
  return m;
}

inline std::vector<std::vector<double>> to_rows(const ol::Matrix& m) {
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < m.rows(); ++r) out.emplace_back(m.row(r).begin(), m.row(r).end());
  return out;
}

// Square-wave tone at `amplitude` for `ms` milliseconds of 16 kHz PCM.
inline std::vector<std::int16_t> tone(std::int64_t ms, std::int16_t amplitude) {
  std::vector<std::int16_t> out(static_cast<std::size_t>(ms * 16));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (i / 20) % 2 ? amplitude : static_cast<std::int16_t>(-amplitude);
  return out;
}

inline std::vector<std::int16_t> silence(std::int64_t ms) { return std::vector<std::int16_t>(static_cast<std::size_t>(ms * 16), 0); }

template <typename T>
void append(std::vector<T>& a, const std::vector<T>& b) {
  a.insert(a.end(), b.begin(), b.end());
}

}  // namespace test
