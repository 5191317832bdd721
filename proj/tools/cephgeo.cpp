#include "ceph/cli.hpp"

int main(int argc, char** argv) { return ceph::cli::run(argc, argv); }
