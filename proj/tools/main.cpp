#include <malloc.h>

#include <iostream>

#include "microtrade/cli/commands.hpp"

int main(int argc, char** argv) {
    // Training allocates and frees the same large batch matrices every step;
    // keep them in the heap instead of round-tripping through mmap.
    mallopt(M_MMAP_THRESHOLD, 64 << 20);
    mallopt(M_TRIM_THRESHOLD, 256 << 20);
    return microtrade::cli::run_cli(argc, argv, std::cout, std::cerr);
}
