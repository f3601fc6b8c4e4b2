#include <cstdio>
int main() { std::puts("recast: not wired up yet"); return 0; }
