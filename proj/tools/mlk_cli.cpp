// Command-line front end. Subcommands are wired up as the library lands;
// see scenario.hpp for the formats consumed and emitted.

#include <cstdio>

int main() {
  std::puts("mlk: no subcommands wired yet");
  return 1;
}
