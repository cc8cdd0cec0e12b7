#include "flg/experiment.hpp"

int main(int argc, char** argv) { return flg::cli_main(argc, argv); }
