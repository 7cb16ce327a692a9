#include <cstdio>

int main() {
  std::puts("airhockey CLI: subcommands land here as modules come online");
  return 0;
}
