#include <cstdio>

int main() {
    std::printf("usage: blayer run <config.toml> | list-experiments | export-profile ...\n");
    return 2;
}
