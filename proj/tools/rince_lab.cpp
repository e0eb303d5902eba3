// CLI entry point; subcommands are wired in include/rince/cli.hpp.
#include <cstdio>

int main(int argc, char** argv) {
  (void)argc;
  (void)argv;
  std::puts("rince_lab: not yet wired");
  return 2;
}
