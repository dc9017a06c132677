#include "hessvar/cli.hpp"

int main(int argc, char** argv) { return hessvar::cli::run(argc, argv); }
