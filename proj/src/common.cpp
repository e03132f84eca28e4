#include "acdc/common.hpp"
#include "acdc/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace acdc {

void rethrow_with_context(const Error &err, const std::string &context) {
  std::string msg = err.what();
  // strip the "Code: " prefix added by the Error constructor
  const auto prefix = std::string(to_string(err.code())) + ": ";
  if (msg.rfind(prefix, 0) == 0)
    msg = msg.substr(prefix.size());
  throw Error(err.code(), context + ": " + msg);
}

std::size_t thread_count() {
  if (const char *env = std::getenv("ACDC_THREADS")) {
    char *end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0)
      return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {
thread_local bool in_parallel_region = false;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)> &body) {
  if (n == 0)
    return;
  const std::size_t workers = std::min(thread_count(), n);
  std::vector<std::exception_ptr> errors(n);

  if (workers <= 1 || in_parallel_region) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      in_parallel_region = true;
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
      in_parallel_region = false;
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 0; t + 1 < workers; ++t)
      pool.emplace_back(work);
    work();
  }
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);
}

} // namespace acdc
