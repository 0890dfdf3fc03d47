#include "lowlight/alloc_hooks.hpp"

#include "cli_app.hpp"

int main(int argc, char** argv) { return lowlight::cli::run_cli(argc, argv); }
