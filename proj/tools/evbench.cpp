#include <cstdio>
#include <fstream>
#include <iostream>

#include "evbridge/bench/bench.hpp"
#include "evbridge/bench/cli.hpp"

int main(int argc, char** argv) {
  using namespace evbridge;
  auto parsed = bench::parse_args(argc, argv);
  if (!parsed.spec) {
    std::cerr << parsed.message;
    return parsed.exit_code;
  }
  const auto& spec = *parsed.spec;

  auto rows = bench::run_matrix(spec, [](const bench::RunResult& r) {
    if (!r.ok) {
      std::fprintf(stderr, "cell W=%zu E=%zu M=%zu %s failed: %s\n", r.cfg.workers,
                   r.cfg.executors, r.cfg.max_agg, std::string(to_string(r.cfg.mode)).c_str(),
                   r.error.c_str());
    }
  });
  std::string text = bench::emit_string(rows, spec.format);

  if (spec.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(spec.out);
    if (!(f << text) || !f.flush()) {
      std::cerr << "cannot write " << spec.out << "\n";
      return 2;
    }
  }
  int code = bench::exit_code(rows);
  if (code == 3) std::cerr << "checksum mismatch across runs\n";
  return code;
}
