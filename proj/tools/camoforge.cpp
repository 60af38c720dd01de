#include "camoforge/cli.hpp"
#include "camoforge/common.hpp"

int main(int argc, char** argv) {
  camoforge::tune_allocator();
  return camoforge::run_cli(argc, argv);
}
