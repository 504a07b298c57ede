#include <csignal>
#include <iostream>

#include "cli.hpp"

namespace {
void on_signal(int) { kgx::cli::request_stop(); }
}  // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    return kgx::cli::run(argc, argv, std::cout, std::cerr);
}
