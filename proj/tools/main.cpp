#include <malloc.h>

#include <string>
#include <vector>

#include "cli.hpp"

int main(int argc, char** argv) {
  // Training allocates and frees many tensors of the same sizes; keeping the
  // heap resident avoids repeated page faults.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
  return dane::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
