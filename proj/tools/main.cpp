#include <iostream>

#include "meshnoc/bench.hpp"

int main(int argc, char** argv) {
  const auto parsed = meshnoc::parse_args(argc, argv, std::cerr);
  if (parsed.status == meshnoc::ParseResult::Status::Help) {
    meshnoc::print_usage(std::cout);
    return 0;
  }
  if (parsed.status == meshnoc::ParseResult::Status::Error) {
    return 2;
  }
  return meshnoc::run(parsed.config, std::cout, std::cerr);
}
