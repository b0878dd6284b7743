#include <cstdio>

int main() {
  std::puts("eecli: not wired up yet");
  return 0;
}
