// Prints hashed vectors as hex doubles for the cross-implementation check.

#include <cstdio>
#include <string>

#include "ol/backends/hashed_vector.hpp"

int main() {
  const char* fixed[] = {"a", "b", "umbrella", "microwave", "rgb:0,0,0", "scene:kitchen:3:7", "", "What is this"};
  auto dump = [](const std::string& key, std::size_t c) {
    std::printf("%s\t%zu", key.c_str(), c);
    for (double v : ol::backends::hashed_vector(key, c)) std::printf("\t%a", v);
    std::printf("\n");
  };
  for (const char* k : fixed) {
    for (std::size_t c : {2u, 8u, 64u}) dump(k, c);
  }
  for (int i = 0; i < 200; ++i) dump("key-" + std::to_string(i), 2 + static_cast<std::size_t>(i % 31));
  return 0;
}
