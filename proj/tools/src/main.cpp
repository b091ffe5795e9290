#include "app.hpp"

int main(int argc, char** argv) { return mmeval::cli::run(argc, argv); }
