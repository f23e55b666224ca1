#include <cstdio>

int main() {
    std::puts("madet: subcommands not wired up yet");
    return 0;
}
